#pragma once

#include <string>
#include <vector>

namespace ppg {

// Rooted tree of BS nodes around a central energy router. The router only
// relays; every hop has the same physical length.
struct PpgTopology {
    int router = 0;
    std::vector<int> parent;  // parent[node], -1 for the router
    double hop_length_m = 100.0;
    double resistivity = 0.023;   // ohm mm^2 / m
    double cross_section_mm2 = 10.0;
    double v_nom = 400.0;         // DC link voltage
    double p_nom = 1500.0;        // nominal link power, W
    double e_max = 90e3;          // joules per mini-slot per link
    double minislot_seconds = 60.0;

    int num_nodes() const { return static_cast<int>(parent.size()); }
    double hop_resistance() const { return resistivity * hop_length_m / cross_section_mm2; }
    // Per-hop loss fraction of the linearized resistive model.
    double hop_loss() const { return p_nom * hop_resistance() / (v_nom * v_nom); }
    int minislots_per_slot(double slot_hours = 1.0) const {
        return static_cast<int>(slot_hours * 3600.0 / minislot_seconds);
    }
    void validate() const;
};

// Star of `branches` chains with `per_branch` BS nodes each; node 0 is the
// router, BS ids are 1..branches*per_branch.
PpgTopology make_branched_topology(int branches, int per_branch);

// Edge-list text file: "router,<id>" then one "parent,child" line per link.
PpgTopology load_topology(const std::string& path);
void save_topology(const PpgTopology& topo, const std::string& path);

struct Route {
    std::vector<int> nodes;  // src ... dst
    int hops() const { return static_cast<int>(nodes.size()) - 1; }
    // Undirected link keys (a*N+b with a<b) for exclusivity checks.
    std::vector<long> link_keys(int num_nodes) const;
};

Route unique_route(const PpgTopology& topo, int src, int dst);

// a(g) = max(0, 1 - g * hop_loss)
double attenuation(const PpgTopology& topo, int hops);

// ceil(energy / e_max); 0 for zero energy.
long required_minislots(double energy_joules, double e_max);

struct TransferJob {
    int source = -1;
    int consumer = -1;
    double energy_to_send = 0.0;  // source-side joules
    Route route;
    long n_minislots = 0;
};

struct ScheduledJob {
    TransferJob job;
    long start = 0;  // inclusive mini-slot
    long end = 0;    // exclusive
};

struct MiniSlotSchedule {
    std::vector<ScheduledJob> entries;
    long makespan = 0;
};

// Greedy disjoint-route activation: admit as many link-disjoint jobs as
// possible (longest first, ties by source id), re-admitting waiting jobs as
// routes free up, until every job completes.
MiniSlotSchedule schedule_transfers(std::vector<TransferJob> jobs, const PpgTopology& topo);

struct TransferLedger {
    std::vector<double> sent;       // per node, joules drained at sources
    std::vector<double> received;   // per node, joules delivered to consumers
    double total_sent = 0.0;
    double total_received = 0.0;
    double losses = 0.0;
    bool truncated = false;  // some job hit the mini-slot budget or an empty buffer
};

// Executes a schedule against buffers within one slot's mini-slot budget.
// Jobs running past the budget are truncated pro-rata; a source never goes
// negative. Buffers are updated in place (no B_max clamping here).
TransferLedger apply_transfers(const MiniSlotSchedule& schedule, const PpgTopology& topo,
                               std::vector<double>& buffers, double slot_hours = 1.0);

}  // namespace ppg
