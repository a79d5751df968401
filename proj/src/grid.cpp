#include "ppg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ppg {

void PpgTopology::validate() const {
    const int n = num_nodes();
    if (n < 1 || router < 0 || router >= n)
        throw std::invalid_argument("topology: invalid router id");
    if (parent[router] != -1)
        throw std::invalid_argument("topology: router must have no parent");
    if (hop_loss() >= 1.0)
        throw std::invalid_argument("topology: per-hop loss >= 1, grid configuration unusable");
    // Every node must reach the router without cycles.
    for (int v = 0; v < n; ++v) {
        int cur = v, steps = 0;
        while (cur != router) {
            cur = parent[cur];
            if (cur < 0 || cur >= n || ++steps > n)
                throw std::invalid_argument("topology: node " + std::to_string(v) +
                                            " is not connected to the router");
        }
    }
}

PpgTopology make_branched_topology(int branches, int per_branch) {
    if (branches < 1 || per_branch < 1)
        throw std::invalid_argument("make_branched_topology: need >= 1 branch and node");
    PpgTopology t;
    t.router = 0;
    t.parent.assign(1 + branches * per_branch, -1);
    int id = 1;
    for (int b = 0; b < branches; ++b) {
        int prev = 0;
        for (int k = 0; k < per_branch; ++k) {
            t.parent[id] = prev;
            prev = id++;
        }
    }
    t.validate();
    return t;
}

PpgTopology load_topology(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_topology: cannot open " + path);
    PpgTopology t;
    t.router = -1;
    std::string line;
    long row = 0;
    std::vector<std::pair<int, int>> edges;
    int max_id = -1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
            throw std::runtime_error("load_topology: malformed line " + std::to_string(row));
        if (a == "router") {
            t.router = std::stoi(b);
            max_id = std::max(max_id, t.router);
        } else {
            int pa = std::stoi(a), ch = std::stoi(b);
            edges.emplace_back(pa, ch);
            max_id = std::max({max_id, pa, ch});
        }
    }
    if (t.router < 0) throw std::runtime_error("load_topology: no router line in " + path);
    t.parent.assign(max_id + 1, -1);
    for (auto [pa, ch] : edges) {
        if (ch == t.router || t.parent[ch] != -1)
            throw std::runtime_error("load_topology: node " + std::to_string(ch) +
                                     " has multiple parents or is the router");
        t.parent[ch] = pa;
    }
    t.validate();
    return t;
}

void save_topology(const PpgTopology& topo, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_topology: cannot open " + path);
    out << "router," << topo.router << "\n";
    for (int v = 0; v < topo.num_nodes(); ++v)
        if (v != topo.router) out << topo.parent[v] << "," << v << "\n";
}

std::vector<long> Route::link_keys(int num_nodes) const {
    std::vector<long> keys;
    keys.reserve(nodes.size() - 1);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        long a = nodes[i], b = nodes[i + 1];
        if (a > b) std::swap(a, b);
        keys.push_back(a * num_nodes + b);
    }
    return keys;
}

Route unique_route(const PpgTopology& topo, int src, int dst) {
    const int n = topo.num_nodes();
    if (src < 0 || src >= n || dst < 0 || dst >= n)
        throw std::invalid_argument("unique_route: unknown node id");
    if (src == dst) throw std::invalid_argument("unique_route: src == dst");

    auto ancestry = [&](int v) {
        std::vector<int> path{v};
        while (v != topo.router) {
            v = topo.parent[v];
            path.push_back(v);
        }
        return path;  // v ... router
    };
    std::vector<int> up = ancestry(src);
    std::vector<int> down = ancestry(dst);

    // Trim the shared tail above the lowest common ancestor.
    std::size_t i = up.size(), j = down.size();
    while (i > 1 && j > 1 && up[i - 2] == down[j - 2]) {
        --i;
        --j;
    }
    Route r;
    r.nodes.assign(up.begin(), up.begin() + i);
    for (std::size_t k = j - 1; k-- > 0;) r.nodes.push_back(down[k]);
    return r;
}

double attenuation(const PpgTopology& topo, int hops) {
    if (hops < 1) throw std::invalid_argument("attenuation: hop count must be >= 1");
    return std::max(0.0, 1.0 - hops * topo.hop_loss());
}

long required_minislots(double energy_joules, double e_max) {
    if (energy_joules < 0) throw std::invalid_argument("required_minislots: negative energy");
    if (!(e_max > 0)) throw std::invalid_argument("required_minislots: e_max must be > 0");
    if (energy_joules == 0) return 0;
    return static_cast<long>(std::ceil(energy_joules / e_max));
}

MiniSlotSchedule schedule_transfers(std::vector<TransferJob> jobs, const PpgTopology& topo) {
    const int n = topo.num_nodes();
    for (auto& j : jobs) {
        if (j.route.nodes.size() < 2)
            throw std::invalid_argument("schedule_transfers: job with empty route");
        for (int node : j.route.nodes)
            if (node < 0 || node >= n)
                throw std::invalid_argument("schedule_transfers: route references unknown node");
        j.n_minislots = required_minislots(j.energy_to_send, topo.e_max);
    }
    jobs.erase(std::remove_if(jobs.begin(), jobs.end(),
                              [](const TransferJob& j) { return j.n_minislots == 0; }),
               jobs.end());
    // Longest job first, ties by source id then consumer id.
    std::stable_sort(jobs.begin(), jobs.end(), [](const TransferJob& a, const TransferJob& b) {
        if (a.n_minislots != b.n_minislots) return a.n_minislots > b.n_minislots;
        if (a.source != b.source) return a.source < b.source;
        return a.consumer < b.consumer;
    });

    MiniSlotSchedule sched;
    std::set<long> busy;                    // link keys currently in use
    std::vector<bool> done(jobs.size(), false);
    std::vector<std::pair<long, std::size_t>> running;  // (end, job index)
    long now = 0;
    std::size_t remaining = jobs.size();

    auto try_admit = [&]() {
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            if (done[i]) continue;
            bool active = false;
            for (auto& [end, idx] : running)
                if (idx == i) active = true;
            if (active) continue;
            auto keys = jobs[i].route.link_keys(n);
            bool free = std::none_of(keys.begin(), keys.end(),
                                     [&](long k) { return busy.count(k) > 0; });
            if (!free) continue;
            busy.insert(keys.begin(), keys.end());
            long end = now + jobs[i].n_minislots;
            running.emplace_back(end, i);
            sched.entries.push_back({jobs[i], now, end});
        }
    };

    try_admit();
    while (remaining > 0) {
        if (running.empty())
            throw std::runtime_error("schedule_transfers: stuck with unschedulable jobs");
        long next_end = running.front().first;
        for (auto& [end, idx] : running) next_end = std::min(next_end, end);
        now = next_end;
        for (auto it = running.begin(); it != running.end();) {
            if (it->first == now) {
                auto keys = jobs[it->second].route.link_keys(n);
                for (long k : keys) busy.erase(k);
                done[it->second] = true;
                --remaining;
                it = running.erase(it);
            } else {
                ++it;
            }
        }
        sched.makespan = std::max(sched.makespan, now);
        try_admit();
    }
    return sched;
}

TransferLedger apply_transfers(const MiniSlotSchedule& schedule, const PpgTopology& topo,
                               std::vector<double>& buffers, double slot_hours) {
    TransferLedger led;
    led.sent.assign(buffers.size(), 0.0);
    led.received.assign(buffers.size(), 0.0);
    const long budget = topo.minislots_per_slot(slot_hours);

    for (const auto& e : schedule.entries) {
        const TransferJob& j = e.job;
        if (j.source < 0 || j.source >= static_cast<int>(buffers.size()) || j.consumer < 0 ||
            j.consumer >= static_cast<int>(buffers.size()))
            throw std::invalid_argument("apply_transfers: job endpoint out of range");
        double energy = j.energy_to_send;
        // Pro-rata truncation for the part of the job past the slot budget.
        if (e.end > budget) {
            long usable = std::max<long>(0, budget - e.start);
            energy *= static_cast<double>(usable) / static_cast<double>(e.end - e.start);
            led.truncated = true;
        }
        if (energy > buffers[j.source]) {
            energy = buffers[j.source];
            led.truncated = true;
        }
        if (energy <= 0) continue;
        double delivered = energy * attenuation(topo, j.route.hops());
        buffers[j.source] -= energy;
        buffers[j.consumer] += delivered;
        led.sent[j.source] += energy;
        led.received[j.consumer] += delivered;
        led.total_sent += energy;
        led.total_received += delivered;
    }
    led.losses = led.total_sent - led.total_received;
    return led;
}

}  // namespace ppg
