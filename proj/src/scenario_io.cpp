#include "ppg/scenario_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ppg {

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("scenario config: expected a JSON object");
    static const std::set<std::string> known = {
        "branches",       "per_branch",     "ongrid",       "b_max",
        "b_up_frac",      "b_ref_frac",     "b_low_frac",   "strategy",
        "cluster_p",      "eta",            "horizon",      "alpha",
        "beta",           "seed",           "days",         "warmup_days",
        "solar_peak",     "solar_noise",    "traffic_jitter", "base_power_w",
        "load_slope_w",   "gp_window",      "gp_refit",     "sigma_n",
        "backoff_c",      "soft_weight",    "initial_buffer_frac",
        "e_max",          "minislot_seconds"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw std::invalid_argument("scenario config: unknown field \"" + it.key() + "\"");

    ScenarioConfig cfg = reference_config();
    read_field(j, "branches", cfg.branches);
    read_field(j, "per_branch", cfg.per_branch);
    read_field(j, "ongrid", cfg.ongrid);
    read_field(j, "b_max", cfg.b_max);
    read_field(j, "b_up_frac", cfg.b_up_frac);
    read_field(j, "b_ref_frac", cfg.b_ref_frac);
    read_field(j, "b_low_frac", cfg.b_low_frac);
    if (j.contains("strategy")) cfg.strategy = strategy_from_string(j.at("strategy"));
    read_field(j, "cluster_p", cfg.cluster_p);
    if (j.contains("eta")) {
        if (j.at("eta").is_null())
            cfg.eta = std::numeric_limits<double>::infinity();
        else
            cfg.eta = j.at("eta").get<double>();
    }
    read_field(j, "horizon", cfg.horizon);
    read_field(j, "alpha", cfg.alpha);
    read_field(j, "beta", cfg.beta);
    read_field(j, "seed", cfg.seed);
    read_field(j, "days", cfg.days);
    read_field(j, "warmup_days", cfg.warmup_days);
    read_field(j, "solar_peak", cfg.solar_peak);
    read_field(j, "solar_noise", cfg.solar_noise);
    read_field(j, "traffic_jitter", cfg.traffic_jitter);
    read_field(j, "base_power_w", cfg.consumption.base_power_w);
    read_field(j, "load_slope_w", cfg.consumption.load_slope_w);
    read_field(j, "gp_window", cfg.gp_window);
    read_field(j, "gp_refit", cfg.gp_refit);
    read_field(j, "sigma_n", cfg.sigma_n);
    read_field(j, "backoff_c", cfg.backoff_c);
    read_field(j, "soft_weight", cfg.soft_weight);
    read_field(j, "initial_buffer_frac", cfg.initial_buffer_frac);
    read_field(j, "e_max", cfg.e_max);
    read_field(j, "minislot_seconds", cfg.minislot_seconds);
    cfg.validate();
    return cfg;
}

nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
    nlohmann::json j;
    j["branches"] = cfg.branches;
    j["per_branch"] = cfg.per_branch;
    j["ongrid"] = cfg.ongrid;
    j["b_max"] = cfg.b_max;
    j["b_up_frac"] = cfg.b_up_frac;
    j["b_ref_frac"] = cfg.b_ref_frac;
    j["b_low_frac"] = cfg.b_low_frac;
    j["strategy"] = to_string(cfg.strategy);
    j["cluster_p"] = cfg.cluster_p;
    if (std::isfinite(cfg.eta))
        j["eta"] = cfg.eta;
    else
        j["eta"] = nullptr;
    j["horizon"] = cfg.horizon;
    j["alpha"] = cfg.alpha;
    j["beta"] = cfg.beta;
    j["seed"] = cfg.seed;
    j["days"] = cfg.days;
    j["warmup_days"] = cfg.warmup_days;
    j["solar_peak"] = cfg.solar_peak;
    j["solar_noise"] = cfg.solar_noise;
    j["traffic_jitter"] = cfg.traffic_jitter;
    j["base_power_w"] = cfg.consumption.base_power_w;
    j["load_slope_w"] = cfg.consumption.load_slope_w;
    j["gp_window"] = cfg.gp_window;
    j["gp_refit"] = cfg.gp_refit;
    j["sigma_n"] = cfg.sigma_n;
    j["backoff_c"] = cfg.backoff_c;
    j["soft_weight"] = cfg.soft_weight;
    j["initial_buffer_frac"] = cfg.initial_buffer_frac;
    j["e_max"] = cfg.e_max;
    j["minislot_seconds"] = cfg.minislot_seconds;
    return j;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_scenario: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("load_scenario: " + path + ": " + e.what());
    }
    return scenario_from_json(j);
}

void save_scenario(const ScenarioConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_scenario: cannot open " + path);
    out << scenario_to_json(cfg).dump(2) << "\n";
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_metrics_csv(const Metrics& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_metrics_csv: cannot open " + path);
    out << "slot,gamma,mean_buffer,purchased,transferred,lost,waste,unserved\n";
    for (const auto& s : m.slots)
        out << s.slot << ',' << format_double(s.gamma) << ',' << format_double(s.mean_buffer)
            << ',' << format_double(s.purchased) << ',' << format_double(s.transferred) << ','
            << format_double(s.losses) << ',' << format_double(s.waste) << ','
            << format_double(s.unserved) << "\n";
}

void write_summary_csv(const Metrics& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_summary_csv: cannot open " + path);
    out << "metric,value\n";
    out << "slots," << m.slots.size() << "\n";
    out << "mean_gamma," << format_double(m.mean_gamma) << "\n";
    out << "mean_buffer," << format_double(m.mean_buffer) << "\n";
    out << "total_purchased," << format_double(m.total_purchased) << "\n";
    out << "total_transferred," << format_double(m.total_transferred) << "\n";
    out << "total_lost," << format_double(m.total_losses) << "\n";
    out << "max_accounting_residual," << format_double(m.max_accounting_residual) << "\n";
    if (m.mean_forecast_rmse)
        out << "mean_forecast_rmse," << format_double(*m.mean_forecast_rmse) << "\n";
}

}  // namespace ppg
