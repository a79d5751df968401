#include "ppg/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ppg {

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::NOEE: return "noee";
        case Strategy::CONV: return "conv";
        case Strategy::HUNG: return "hung";
        case Strategy::GPS_MPC_CONV: return "gps_mpc_conv";
        case Strategy::GPS_MPC_HUNG: return "gps_mpc_hung";
    }
    throw std::logic_error("to_string: unknown strategy");
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "noee") return Strategy::NOEE;
    if (name == "conv") return Strategy::CONV;
    if (name == "hung") return Strategy::HUNG;
    if (name == "gps_mpc_conv") return Strategy::GPS_MPC_CONV;
    if (name == "gps_mpc_hung") return Strategy::GPS_MPC_HUNG;
    throw std::invalid_argument("unknown strategy name: " + name);
}

bool uses_forecasts(Strategy s) {
    return s == Strategy::GPS_MPC_CONV || s == Strategy::GPS_MPC_HUNG;
}

bool uses_hungarian(Strategy s) {
    return s == Strategy::HUNG || s == Strategy::GPS_MPC_HUNG;
}

void ScenarioConfig::validate() const {
    if (branches < 1 || per_branch < 1)
        throw std::invalid_argument("scenario: need at least one branch with one BS");
    if (!(b_max > 0)) throw std::invalid_argument("scenario: b_max must be > 0");
    if (!(0.0 <= b_low_frac && b_low_frac < b_ref_frac && b_ref_frac < b_up_frac &&
          b_up_frac <= 1.0))
        throw std::invalid_argument("scenario: need 0 <= B_low < B_ref < B_up <= B_max");
    if (alpha < 0 || alpha > 1 || beta < 0 || beta > 1)
        throw std::invalid_argument("scenario: alpha and beta must be in [0,1]");
    if (cluster_p < 0 || cluster_p > 1)
        throw std::invalid_argument("scenario: cluster_p must be in [0,1]");
    if (eta < 0) throw std::invalid_argument("scenario: eta must be >= 0");
    if (horizon < 1) throw std::invalid_argument("scenario: horizon must be >= 1");
    if (days < 1 || warmup_days < 0)
        throw std::invalid_argument("scenario: need days >= 1 and warmup_days >= 0");
    if (initial_buffer_frac < 0 || initial_buffer_frac > 1)
        throw std::invalid_argument("scenario: initial_buffer_frac must be in [0,1]");
    if (!(e_max > 0) || !(minislot_seconds > 0))
        throw std::invalid_argument("scenario: e_max and minislot_seconds must be > 0");
    if (solar_peak < 0 || solar_noise < 0)
        throw std::invalid_argument("scenario: solar parameters must be >= 0");
    if (uses_forecasts(strategy)) {
        if (gp_window < 2) throw std::invalid_argument("scenario: gp_window must be >= 2");
        if (warmup_days * 24 < gp_window)
            throw std::invalid_argument("scenario: warmup shorter than the GP window");
    }
    for (int id : ongrid)
        if (id < 1 || id > branches * per_branch)
            throw std::invalid_argument("scenario: ongrid id out of range");
}

std::vector<int> ScenarioConfig::ongrid_set() const {
    if (!ongrid.empty()) return ongrid;
    std::vector<int> ids;
    for (int b = 0; b < branches; ++b) {
        ids.push_back(b * per_branch + 1);
        if (per_branch >= 2) ids.push_back(b * per_branch + 2);
    }
    return ids;
}

ScenarioConfig reference_config() {
    ScenarioConfig cfg;
    cfg.branches = 3;
    cfg.per_branch = 6;
    cfg.b_max = 360e3;
    cfg.b_up_frac = 0.7;
    cfg.b_ref_frac = 0.5;
    cfg.b_low_frac = 0.1;
    cfg.e_max = 90e3;
    cfg.minislot_seconds = 60.0;
    cfg.horizon = 24;
    cfg.alpha = 0.5;
    cfg.beta = 0.5;
    cfg.cluster_p = 0.5;
    cfg.days = 7;
    cfg.warmup_days = 7;
    // Micro-BS consumption scaled so that one night fits inside the buffer
    // band and the harvest roughly balances the daily drain: this is the
    // regime where energy transfers (rather than raw storage) decide outage.
    cfg.consumption = ConsumptionModel{3.0, 4.0, 1.0};
    cfg.solar_peak = 60e3;
    cfg.solar_noise = 0.10;
    cfg.gp_window = 168;
    // Single-seed hyperparameter search keeps simulation runs fast; forecast
    // accuracy experiments use the wider default grid instead.
    cfg.fit_options.grid = {0.1, 1.0, 10.0};
    cfg.fit_options.max_refine_iters = 40;
    return cfg;
}

double buffer_update(double buffer, double harvest, double consumption_j, double transfer,
                     double purchased, double b_max, double* waste, double* unserved) {
    double next = buffer + harvest - consumption_j + transfer + purchased;
    double w = 0.0, u = 0.0;
    if (next > b_max) {
        w = next - b_max;
        next = b_max;
    } else if (next < 0.0) {
        u = -next;
        next = 0.0;
    }
    if (waste) *waste = w;
    if (unserved) *unserved = u;
    return next;
}

double grid_purchase(double buffer, double b_up, double remaining_cap) {
    return std::min(std::max(0.0, b_up - buffer), std::max(0.0, remaining_cap));
}

std::vector<double> myopic_actions(const std::vector<double>& buffers, int router, double b_ref) {
    std::vector<double> actions(buffers.size(), 0.0);
    for (std::size_t v = 0; v < buffers.size(); ++v) {
        if (static_cast<int>(v) == router) continue;
        actions[v] = b_ref - buffers[v];  // >0 demand, <0 offer
    }
    return actions;
}

double outage_probability(const std::vector<double>& buffers, int router) {
    int total = 0, dead = 0;
    for (std::size_t v = 0; v < buffers.size(); ++v) {
        if (static_cast<int>(v) == router) continue;
        ++total;
        if (buffers[v] <= 0.0) ++dead;
    }
    if (total == 0) throw std::invalid_argument("outage_probability: no BS nodes");
    return static_cast<double>(dead) / total;
}

// Per-BS forecasting state: hyperparameters and normalization scales are
// frozen after pre-training; each slot re-conditions on the latest window.
struct Simulation::BsForecaster {
    KernelPtr h_kernel, l_kernel;
    double h_scale = 1.0, l_scale = 1.0;
    int window = 0;
    double sigma_n = 1e-5;

    Forecast condition(const TimeSeries& series, const Kernel& kern, double scale, long t,
                       int horizon) const {
        std::vector<double> xs(window), ys(window);
        for (int i = 0; i < window; ++i) {
            xs[i] = static_cast<double>(t - window + i);
            ys[i] = series.values[t - window + i] / scale;
        }
        GpModel m(kern.clone(), std::move(xs), std::move(ys), sigma_n);
        std::vector<double> test(horizon);
        for (int k = 0; k < horizon; ++k) test[k] = static_cast<double>(t + k);
        return m.predict(test);
    }
};

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double window_max(const TimeSeries& s, long end, int window) {
    double mx = 0.0;
    for (long i = end - window; i < end; ++i) mx = std::max(mx, s.values[i]);
    return mx > 0 ? mx : 1.0;
}

}  // namespace

Simulation::Simulation(const ScenarioConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    topo_ = make_branched_topology(cfg_.branches, cfg_.per_branch);
    topo_.e_max = cfg_.e_max;
    topo_.minislot_seconds = cfg_.minislot_seconds;

    for (int v = 0; v < topo_.num_nodes(); ++v)
        if (v != topo_.router) bs_ids_.push_back(v);
    const int nb = static_cast<int>(bs_ids_.size());

    ongrid_.assign(nb, false);
    for (int id : cfg_.ongrid_set()) ongrid_[bs_index(id)] = true;

    ClusterProfiles prof =
        cfg_.profiles.cluster1.empty() ? default_cluster_profiles(cfg_.cluster_p) : cfg_.profiles;
    prof.p = cfg_.cluster_p;

    const int total_days = cfg_.warmup_days + cfg_.days;
    cluster_.resize(nb);
    for (int k = 0; k < nb; ++k) {
        harvest_.push_back(gen_solar_trace(total_days, cfg_.solar_peak, cfg_.solar_noise,
                                           mix_seed(cfg_.seed, 2 * k)));
        TrafficTrace tt =
            gen_traffic_trace(total_days, prof, mix_seed(cfg_.seed, 2 * k + 1), cfg_.traffic_jitter);
        cluster_[k] = tt.cluster_id;
        load_.push_back(tt.series);
        drain_.push_back(consumption(load_.back(), cfg_.consumption));
    }

    buffers_.assign(topo_.num_nodes(), 0.0);
    for (int id : bs_ids_) buffers_[id] = cfg_.initial_buffer_frac * cfg_.b_max;
    purchased_by_bs_.assign(nb, 0.0);
    purchased_today_.assign(nb, 0.0);

    slot_ = static_cast<long>(cfg_.warmup_days) * 24;
    end_slot_ = static_cast<long>(total_days) * 24;

    if (uses_forecasts(cfg_.strategy)) {
        const int N = cfg_.gp_window;
        // The BS traces are draws from the same processes, so hyperparameters
        // are fitted once per trace family (harvest; load per cluster) on the
        // first matching BS and shared.
        auto pretrain = [&](const TimeSeries& s, double scale) {
            std::vector<double> xs(N), ys(N);
            for (int i = 0; i < N; ++i) {
                xs[i] = static_cast<double>(slot_ - N + i);
                ys[i] = s.values[slot_ - N + i] / scale;
            }
            GpModel pre(make_quasi_periodic(1.0, 24.0, 1.0, 1.0, 24.0), std::move(xs),
                        std::move(ys), cfg_.sigma_n);
            return fit(pre, cfg_.fit_options).kernel().clone();
        };
        KernelPtr h_shared;
        std::map<int, KernelPtr> l_by_cluster;
        for (int k = 0; k < nb; ++k) {
            auto fc = std::make_unique<BsForecaster>();
            fc->window = N;
            fc->sigma_n = cfg_.sigma_n;
            fc->h_scale = window_max(harvest_[k], slot_, N);
            fc->l_scale = window_max(load_[k], slot_, N);
            if (!h_shared) h_shared = pretrain(harvest_[k], fc->h_scale);
            auto& lk = l_by_cluster[cluster_[k]];
            if (!lk) lk = pretrain(load_[k], fc->l_scale);
            fc->h_kernel = h_shared->clone();
            fc->l_kernel = lk->clone();
            forecasters_.push_back(std::move(fc));
        }
    }
}

Simulation::~Simulation() = default;

int Simulation::bs_index(int node) const {
    if (node < 1 || node > static_cast<int>(bs_ids_.size()) || node == topo_.router)
        throw std::invalid_argument("bs_index: not a BS node id");
    return node - 1;  // BS ids are 1..n with node 0 the router
}

std::vector<double> Simulation::forecast_actions() {
    const int nb = static_cast<int>(bs_ids_.size());
    const int M = cfg_.horizon;
    const double j_per_load = cfg_.consumption.load_slope_w * cfg_.consumption.slot_hours * 3600.0;
    const double j_base = cfg_.consumption.base_power_w * cfg_.consumption.slot_hours * 3600.0;

    Eigen::VectorXd z(nb);
    DisturbanceForecast dist;
    for (int k = 0; k < nb; ++k) {
        z[k] = buffers_[bs_ids_[k]];
        const BsForecaster& fc = *forecasters_[k];
        Forecast fh = fc.condition(harvest_[k], *fc.h_kernel, fc.h_scale, slot_, M);
        Forecast fl = fc.condition(load_[k], *fc.l_kernel, fc.l_scale, slot_, M);

        double err = fh.mean[0] - harvest_[k].values[slot_] / fc.h_scale;
        forecast_sq_err_ += err * err;
        ++forecast_count_;

        Eigen::VectorXd mh = fh.mean * fc.h_scale;
        Eigen::VectorXd vh = fh.variances() * (fc.h_scale * fc.h_scale);
        Eigen::VectorXd mo =
            Eigen::VectorXd::Constant(M, j_base) + j_per_load * fc.l_scale * fl.mean;
        Eigen::VectorXd vo =
            (j_per_load * fc.l_scale) * (j_per_load * fc.l_scale) * fl.variances();
        dist.append_bs(mh - mo, vh + vo);
    }

    MpcConfig mcfg;
    mcfg.horizon = M;
    mcfg.alpha = cfg_.alpha;
    mcfg.b_ref = cfg_.b_ref();
    mcfg.b_low = cfg_.b_low();
    mcfg.b_max = cfg_.b_max;
    mcfg.b_up = cfg_.b_up();
    mcfg.backoff_c = cfg_.backoff_c;
    mcfg.soft_weight = cfg_.soft_weight;
    // Ongrid BSs are re-topped to B_up every slot, so the controller treats
    // them as grid-replenished, subject to the daily purchase budget.
    GridRefill refill;
    refill.replenished = ongrid_;
    refill.first_hour = static_cast<int>(slot_ % 24);
    if (std::isfinite(cfg_.eta)) {
        refill.daily_cap = cfg_.eta * cfg_.consumption.full_load_daily_joules();
        refill.remaining_today.resize(nb);
        for (int k = 0; k < nb; ++k)
            refill.remaining_today[k] =
                ongrid_[k] ? std::max(0.0, refill.daily_cap - purchased_today_[k]) : 0.0;
    }
    Eigen::VectorXd u0 = mpc_step(z, dist, mcfg, refill);

    std::vector<double> actions(topo_.num_nodes(), 0.0);
    for (int k = 0; k < nb; ++k) {
        double u = u0[k];
        actions[bs_ids_[k]] = std::abs(u) < 1e-6 ? 0.0 : u;
    }
    return actions;
}

std::vector<double> Simulation::compute_actions() {
    if (uses_forecasts(cfg_.strategy)) return forecast_actions();
    return myopic_actions(buffers_, topo_.router, cfg_.b_ref());
}

void Simulation::step() {
    if (slot_ >= end_slot_) throw std::logic_error("Simulation::step: past the last slot");
    const int nb = static_cast<int>(bs_ids_.size());
    const long t = slot_;
    const int hour = static_cast<int>(t % 24);

    SlotMetrics sm;
    sm.slot = t;
    std::vector<double> b_start = buffers_;

    // 1. Ongrid BSs top up toward B_up under the daily cap.
    for (int k = 0; k < nb; ++k) {
        if (!ongrid_[k]) continue;
        if (hour == 0) purchased_today_[k] = 0.0;
        double cap = std::numeric_limits<double>::infinity();
        if (std::isfinite(cfg_.eta))
            cap = cfg_.eta * cfg_.consumption.full_load_daily_joules() - purchased_today_[k];
        double theta = grid_purchase(buffers_[bs_ids_[k]], cfg_.b_up(), cap);
        buffers_[bs_ids_[k]] += theta;
        purchased_today_[k] += theta;
        purchased_by_bs_[k] += theta;
        sm.purchased += theta;
    }

    // 2. Strategy decides per-BS offers/demands; 3.-4. allocate and route.
    if (cfg_.strategy != Strategy::NOEE) {
        std::vector<double> actions = compute_actions();
        bool any_src = false, any_con = false;
        for (int id : bs_ids_) {
            any_src |= actions[id] < 0;
            any_con |= actions[id] > 0;
        }
        if (any_src && any_con) {
            AllocationProblem prob = build_problem(actions, topo_, cfg_.beta, cfg_.b_max);
            AllocationMatrix y;
            if (uses_hungarian(cfg_.strategy)) {
                y = assignment_to_allocation(solve_assignment(prob), prob);
            } else {
                // Cheaper multi-start budget than the library default: this
                // solve runs once per slot inside the hot loop.
                ConvexSolveOptions copt;
                copt.random_starts = 4;
                copt.max_iters = 300;
                copt.tol = 1e-8;
                y = solve_convex(prob, copt);
            }

            std::vector<TransferJob> jobs;
            for (int i = 0; i < prob.num_sources(); ++i)
                for (int j = 0; j < prob.num_consumers(); ++j) {
                    double send = y(i, j) * prob.offers[i];
                    if (send <= 1e-9) continue;
                    TransferJob job;
                    job.source = prob.source_ids[i];
                    job.consumer = prob.consumer_ids[j];
                    job.energy_to_send = send;
                    job.route = unique_route(topo_, job.source, job.consumer);
                    jobs.push_back(std::move(job));
                }
            if (!jobs.empty()) {
                MiniSlotSchedule sched = schedule_transfers(std::move(jobs), topo_);
                TransferLedger led =
                    apply_transfers(sched, topo_, buffers_, cfg_.consumption.slot_hours);
                sm.transferred = led.total_sent;
                sm.losses = led.losses;
            }
        }
    }

    // 5. Realized harvest and consumption close the slot.
    double h_sum = 0.0, o_sum = 0.0;
    for (int k = 0; k < nb; ++k) {
        double w = 0.0, u = 0.0;
        buffers_[bs_ids_[k]] = buffer_update(buffers_[bs_ids_[k]], harvest_[k].values[t],
                                             drain_[k].values[t], 0.0, 0.0, cfg_.b_max, &w, &u);
        sm.waste += w;
        sm.unserved += u;
        h_sum += harvest_[k].values[t];
        o_sum += drain_[k].values[t];
    }

    // 6. Metrics and the slot energy balance.
    sm.gamma = outage_probability(buffers_, topo_.router);
    double b_sum = 0.0, db = 0.0;
    for (int id : bs_ids_) {
        b_sum += buffers_[id];
        db += buffers_[id] - b_start[id];
    }
    sm.mean_buffer = b_sum / nb;
    sm.accounting_residual =
        db - (sm.purchased + h_sum - (o_sum - sm.unserved) - sm.losses - sm.waste);
    metrics_.slots.push_back(sm);
    ++slot_;
}

void Simulation::run_all() {
    while (slot_ < end_slot_) step();
}

Metrics Simulation::finish() const {
    Metrics m = metrics_;
    m.purchased_by_bs = purchased_by_bs_;
    m.cluster_by_bs = cluster_;
    for (const auto& sm : m.slots) {
        m.total_purchased += sm.purchased;
        m.total_transferred += sm.transferred;
        m.total_losses += sm.losses;
        m.mean_gamma += sm.gamma;
        m.mean_buffer += sm.mean_buffer;
        m.max_accounting_residual =
            std::max(m.max_accounting_residual, std::abs(sm.accounting_residual));
    }
    if (!m.slots.empty()) {
        m.mean_gamma /= static_cast<double>(m.slots.size());
        m.mean_buffer /= static_cast<double>(m.slots.size());
    }
    if (forecast_count_ > 0)
        m.mean_forecast_rmse = std::sqrt(forecast_sq_err_ / static_cast<double>(forecast_count_));
    return m;
}

Metrics run_scenario(const ScenarioConfig& cfg) {
    Simulation sim(cfg);
    sim.run_all();
    return sim.finish();
}

}  // namespace ppg
