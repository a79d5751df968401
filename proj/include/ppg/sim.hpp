#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ppg/allocation.hpp"
#include "ppg/gp.hpp"
#include "ppg/grid.hpp"
#include "ppg/mpc.hpp"
#include "ppg/time_series.hpp"
#include "ppg/traces.hpp"

namespace ppg {

enum class Strategy { NOEE, CONV, HUNG, GPS_MPC_CONV, GPS_MPC_HUNG };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);
bool uses_forecasts(Strategy s);
bool uses_hungarian(Strategy s);

struct ScenarioConfig {
    int branches = 3;
    int per_branch = 6;
    std::vector<int> ongrid;  // BS node ids; empty = first two of each branch

    double b_max = 360e3;
    double b_up_frac = 0.7;
    double b_ref_frac = 0.5;
    double b_low_frac = 0.1;

    Strategy strategy = Strategy::CONV;
    double cluster_p = 0.5;
    double eta = std::numeric_limits<double>::infinity();  // daily purchase cap fraction
    int horizon = 24;
    double alpha = 0.5;
    double beta = 0.5;
    std::uint64_t seed = 1;
    int days = 7;
    int warmup_days = 7;

    // Trace generation
    double solar_peak = 250e3;
    double solar_noise = 0.15;
    double traffic_jitter = 0.0;
    ConsumptionModel consumption{10.0, 20.0, 1.0};
    ClusterProfiles profiles;  // empty templates = default profiles

    // Forecasting (GPS_MPC_* strategies)
    int gp_window = 168;
    long gp_refit = 0;  // slots between refits; 0 = pre-train only
    double sigma_n = 1e-5;
    FitOptions fit_options;

    // MPC extras
    double backoff_c = 0.0;
    double soft_weight = 1e3;

    double initial_buffer_frac = 0.5;

    // PPG link parameters (Table-style defaults live in PpgTopology)
    double e_max = 90e3;
    double minislot_seconds = 60.0;

    double b_up() const { return b_up_frac * b_max; }
    double b_ref() const { return b_ref_frac * b_max; }
    double b_low() const { return b_low_frac * b_max; }
    void validate() const;
    std::vector<int> ongrid_set() const;
};

// 18 BSs on 3 branches, 6 ongrid, Table-style thresholds and link parameters,
// micro-BS consumption and matching solar scale.
ScenarioConfig reference_config();

struct SlotMetrics {
    long slot = 0;
    double gamma = 0.0;
    double mean_buffer = 0.0;
    double purchased = 0.0;
    double transferred = 0.0;  // source-side joules
    double losses = 0.0;
    double waste = 0.0;     // clamped surplus at B_max
    double unserved = 0.0;  // consumption not covered at depletion
    double accounting_residual = 0.0;
};

struct Metrics {
    std::vector<SlotMetrics> slots;
    std::vector<double> purchased_by_bs;
    std::vector<int> cluster_by_bs;
    double total_purchased = 0.0;
    double total_transferred = 0.0;
    double total_losses = 0.0;
    double mean_gamma = 0.0;
    double mean_buffer = 0.0;
    double max_accounting_residual = 0.0;
    std::optional<double> mean_forecast_rmse;  // normalized 1-step H error, GPS only
};

// Buffer update of one BS over one slot: clamped to [0, B_max], reporting
// overflow waste and unserved drain at depletion.
double buffer_update(double buffer, double harvest, double consumption_j, double transfer,
                     double purchased, double b_max, double* waste = nullptr,
                     double* unserved = nullptr);

// theta = min(max(0, B_up - B), remaining_daily_cap)
double grid_purchase(double buffer, double b_up, double remaining_cap);

// Consumers demand B_ref - B, sources offer B - B_ref; indexed by node id.
std::vector<double> myopic_actions(const std::vector<double>& buffers, int router, double b_ref);

double outage_probability(const std::vector<double>& buffers, int router);

// Slotted-time world; step() runs one slot of the configured strategy.
class Simulation {
   public:
    explicit Simulation(const ScenarioConfig& cfg);
    ~Simulation();

    void step();
    void run_all();
    Metrics finish() const;

    long current_slot() const { return slot_; }
    long end_slot() const { return end_slot_; }
    const std::vector<double>& buffers() const { return buffers_; }
    const PpgTopology& topology() const { return topo_; }
    const std::vector<int>& bs_ids() const { return bs_ids_; }
    const TimeSeries& harvest(int bs) const { return harvest_[bs_index(bs)]; }
    const TimeSeries& load(int bs) const { return load_[bs_index(bs)]; }
    int cluster_of(int bs) const { return cluster_[bs_index(bs)]; }
    bool is_ongrid(int bs) const { return ongrid_[bs_index(bs)]; }

   private:
    int bs_index(int node) const;
    std::vector<double> compute_actions();
    std::vector<double> forecast_actions();

    ScenarioConfig cfg_;
    PpgTopology topo_;
    std::vector<int> bs_ids_;
    std::vector<bool> ongrid_;
    std::vector<int> cluster_;
    std::vector<TimeSeries> harvest_, load_, drain_;
    std::vector<double> buffers_;
    std::vector<double> purchased_by_bs_;
    std::vector<double> purchased_today_;
    long slot_ = 0;
    long end_slot_ = 0;

    struct BsForecaster;
    std::vector<std::unique_ptr<BsForecaster>> forecasters_;
    double forecast_sq_err_ = 0.0;
    long forecast_count_ = 0;

    Metrics metrics_;
};

Metrics run_scenario(const ScenarioConfig& cfg);

}  // namespace ppg
