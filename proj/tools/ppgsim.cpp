// Batch front-end: run scenario sweeps, aggregate seed-averaged summaries,
// compare strategies into plot-ready wide tables, and run standalone
// forecasts on trace files. See docs/output_formats.md for file schemas.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ppg/gp.hpp"
#include "ppg/kernel.hpp"
#include "ppg/scenario_io.hpp"
#include "ppg/sim.hpp"
#include "ppg/traces.hpp"

using namespace ppg;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::string compact(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

// The output directory must be writable before any run starts, so a bad
// --out fails fast instead of leaving a partial sweep behind.
void check_writable(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const std::string probe = dir + "/.ppgsim_probe";
    std::ofstream out(probe);
    if (!out) throw std::runtime_error("output directory not writable: " + dir);
    out.close();
    std::remove(probe.c_str());
}

struct SummaryRow {
    double mean = 0.0;
    double stddev = 0.0;
};

void write_seed_summary(const std::string& path, const std::string& strategy,
                        const std::string& axis, double value, int num_seeds,
                        const std::map<std::string, SummaryRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "key,mean,std\n";
    out << "strategy," << strategy << ",\n";
    out << "sweep_axis," << axis << ",\n";
    out << "sweep_value," << format_double(value) << ",\n";
    out << "seeds," << num_seeds << ",\n";
    for (const auto& [key, row] : rows)
        out << key << ',' << format_double(row.mean) << ',' << format_double(row.stddev)
            << "\n";
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::string& sweep_p, const std::string& sweep_eta,
            const std::string& strategies_arg, const std::string& seeds_arg, int days) {
    ScenarioConfig base = config_path.empty() ? reference_config() : load_scenario(config_path);
    if (days > 0) base.days = days;

    std::string axis = "none";
    std::vector<double> values{0.0};
    if (!sweep_p.empty() && !sweep_eta.empty())
        throw std::runtime_error("choose at most one of --sweep-p and --sweep-eta");
    if (!sweep_p.empty()) {
        axis = "p";
        values.clear();
        for (const std::string& v : split_list(sweep_p)) values.push_back(std::stod(v));
    } else if (!sweep_eta.empty()) {
        axis = "eta";
        values.clear();
        for (const std::string& v : split_list(sweep_eta)) values.push_back(std::stod(v));
    }
    if (values.empty()) throw std::runtime_error("sweep list is empty");

    std::vector<Strategy> strategies;
    if (strategies_arg.empty()) {
        strategies.push_back(base.strategy);
    } else {
        for (const std::string& s : split_list(strategies_arg))
            strategies.push_back(strategy_from_string(s));
    }

    std::vector<std::uint64_t> seeds;
    if (seeds_arg.empty()) {
        seeds.push_back(base.seed);
    } else {
        for (const std::string& s : split_list(seeds_arg))
            seeds.push_back(std::stoull(s));
    }

    check_writable(out_dir);

    for (Strategy strat : strategies) {
        for (double value : values) {
            std::string tag = to_string(strat);
            if (axis != "none") tag += "_" + axis + compact(value);

            // Per-metric running sums across seeds for the summary.
            std::map<std::string, std::vector<double>> samples;
            for (std::uint64_t seed : seeds) {
                ScenarioConfig cfg = base;
                cfg.strategy = strat;
                cfg.seed = seed;
                if (axis == "p") cfg.cluster_p = value;
                if (axis == "eta") cfg.eta = value;
                cfg.validate();
                Metrics m = run_scenario(cfg);
                write_metrics_csv(m, out_dir + "/metrics_" + tag + "_seed" +
                                         std::to_string(seed) + ".csv");
                samples["mean_gamma"].push_back(m.mean_gamma);
                samples["mean_buffer"].push_back(m.mean_buffer);
                samples["total_purchased"].push_back(m.total_purchased);
                samples["total_transferred"].push_back(m.total_transferred);
                samples["total_lost"].push_back(m.total_losses);
                if (m.mean_forecast_rmse)
                    samples["mean_forecast_rmse"].push_back(*m.mean_forecast_rmse);
            }

            std::map<std::string, SummaryRow> rows;
            for (const auto& [key, xs] : samples) {
                SummaryRow row;
                for (double x : xs) row.mean += x;
                row.mean /= static_cast<double>(xs.size());
                for (double x : xs) row.stddev += (x - row.mean) * (x - row.mean);
                row.stddev = std::sqrt(row.stddev / static_cast<double>(xs.size()));
                rows[key] = row;
            }
            write_seed_summary(out_dir + "/summary_" + tag + ".csv", to_string(strat),
                               axis, value, static_cast<int>(seeds.size()), rows);
            std::cout << "summary_" << tag << ": mean_gamma "
                      << rows["mean_gamma"].mean << ", total_purchased "
                      << rows["total_purchased"].mean << "\n";
        }
    }
    return 0;
}

struct ParsedSummary {
    std::string strategy;
    std::string axis;
    double value = 0.0;
    std::map<std::string, double> means;
};

ParsedSummary read_summary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open summary " + path);
    ParsedSummary s;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string key, v1;
        std::getline(ss, key, ',');
        std::getline(ss, v1, ',');
        if (key == "strategy")
            s.strategy = v1;
        else if (key == "sweep_axis")
            s.axis = v1;
        else if (key == "sweep_value")
            s.value = std::stod(v1);
        else if (key != "seeds")
            s.means[key] = std::stod(v1);
    }
    if (s.strategy.empty() || s.axis.empty())
        throw std::runtime_error(path + " is not a run summary file");
    return s;
}

int cmd_compare(const std::vector<std::string>& summary_paths, const std::string& out_path) {
    std::vector<ParsedSummary> summaries;
    for (const std::string& p : summary_paths) summaries.push_back(read_summary(p));

    const std::string axis = summaries.front().axis;
    for (const ParsedSummary& s : summaries)
        if (s.axis != axis)
            throw std::runtime_error("mismatched sweep axes: '" + axis + "' vs '" +
                                     s.axis + "'");

    // value -> strategy -> metrics
    std::map<double, std::map<std::string, std::map<std::string, double>>> table;
    std::vector<std::string> strategies;
    for (const ParsedSummary& s : summaries) {
        if (std::find(strategies.begin(), strategies.end(), s.strategy) ==
            strategies.end())
            strategies.push_back(s.strategy);
        table[s.value][s.strategy] = s.means;
    }
    std::sort(strategies.begin(), strategies.end());
    for (const auto& [value, per_strat] : table)
        for (const std::string& strat : strategies)
            if (!per_strat.count(strat))
                throw std::runtime_error("strategy " + strat +
                                         " missing at sweep value " + compact(value));

    static const std::vector<std::string> metrics = {
        "mean_gamma", "mean_buffer", "total_purchased", "total_transferred",
        "total_lost"};
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open " + out_path);
    out << axis;
    for (const std::string& strat : strategies)
        for (const std::string& metric : metrics) out << ',' << strat << '_' << metric;
    out << "\n";
    for (const auto& [value, per_strat] : table) {
        out << format_double(value);
        for (const std::string& strat : strategies)
            for (const std::string& metric : metrics) {
                auto it = per_strat.at(strat).find(metric);
                out << ','
                    << (it == per_strat.at(strat).end() ? "" : format_double(it->second));
            }
        out << "\n";
    }
    std::cout << "wrote " << out_path << " (" << table.size() << " rows, "
              << strategies.size() << " strategies)\n";
    return 0;
}

int cmd_forecast(const std::string& trace_path, const std::string& column,
                 const std::string& kernel_path, int window, int horizon, long refit,
                 const std::string& out_path) {
    TimeSeries raw = load_csv(trace_path, column);
    auto [trace, scale] = normalize(raw);

    KernelPtr kernel;
    if (kernel_path.empty()) {
        kernel = make_quasi_periodic(1.0, 24.0, 1.0, 1.0, 50.0);
    } else {
        std::ifstream in(kernel_path);
        if (!in) throw std::runtime_error("cannot open kernel config " + kernel_path);
        std::stringstream ss;
        ss << in.rdbuf();
        kernel = Kernel::parse(ss.str());
    }

    RollingResult r = rolling_forecast(trace, *kernel, window, horizon, refit);

    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open " + out_path);
    out << "t";
    for (int k = 1; k <= horizon; ++k) out << ",mean_" << k;
    for (int k = 1; k <= horizon; ++k) out << ",std_" << k;
    for (int k = 1; k <= horizon; ++k) out << ",truth_" << k;
    out << ",rmse,running_rmse\n";
    double sq_sum = 0.0;
    long count = 0;
    for (const RollingStep& step : r.steps) {
        out << step.t;
        Eigen::VectorXd vars = step.forecast.variances();
        for (int k = 0; k < horizon; ++k) out << ',' << format_double(step.forecast.mean[k]);
        for (int k = 0; k < horizon; ++k) out << ',' << format_double(std::sqrt(vars[k]));
        for (int k = 0; k < horizon; ++k) {
            std::size_t idx = static_cast<std::size_t>(window + step.t - 1 + k);
            out << ',' << format_double(trace.values[idx]);
        }
        sq_sum += step.rmse * step.rmse;
        ++count;
        out << ',' << format_double(step.rmse) << ','
            << format_double(std::sqrt(sq_sum / static_cast<double>(count))) << "\n";
    }
    std::cout << "mean rmse " << r.mean_rmse << " over " << r.steps.size()
              << " steps (normalized scale, trace max " << scale << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"power packet grid scenario runner"};
    app.require_subcommand(1);

    // run
    std::string config_path, out_dir, sweep_p, sweep_eta, strategies_arg, seeds_arg;
    int days = 0;
    CLI::App* run = app.add_subcommand("run", "run scenarios and write metrics CSVs");
    run->add_option("--config", config_path, "scenario config JSON (defaults to the reference scenario)");
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--sweep-p", sweep_p, "comma-separated cluster probabilities");
    run->add_option("--sweep-eta", sweep_eta, "comma-separated purchase-cap fractions");
    run->add_option("--strategies", strategies_arg,
                    "comma-separated strategies (NOEE,CONV,HUNG,GPS_MPC_CONV,GPS_MPC_HUNG)");
    run->add_option("--seeds", seeds_arg, "comma-separated seeds");
    run->add_option("--days", days, "override the measured duration in days");

    // compare
    std::vector<std::string> summary_paths;
    std::string compare_out;
    CLI::App* compare = app.add_subcommand("compare", "merge run summaries into a wide table");
    compare->add_option("summaries", summary_paths, "summary CSVs from run")
        ->required()
        ->expected(-2);
    compare->add_option("--out", compare_out, "output CSV path")->required();

    // forecast
    std::string trace_path, column = "value", kernel_path, forecast_out;
    int window = 336, horizon = 1;
    long refit = 0;
    CLI::App* forecast = app.add_subcommand("forecast", "rolling forecast of a trace CSV");
    forecast->add_option("--trace", trace_path, "input trace CSV")->required();
    forecast->add_option("--column", column, "CSV column name");
    forecast->add_option("--kernel", kernel_path, "kernel config JSON (default: quasi-periodic)");
    forecast->add_option("--window", window, "training window length");
    forecast->add_option("--horizon", horizon, "forecast horizon");
    forecast->add_option("--refit", refit, "refit period in steps (0 = pre-train only)");
    forecast->add_option("--out", forecast_out, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(config_path, out_dir, sweep_p, sweep_eta, strategies_arg,
                           seeds_arg, days);
        if (compare->parsed()) return cmd_compare(summary_paths, compare_out);
        if (forecast->parsed())
            return cmd_forecast(trace_path, column, kernel_path, window, horizon, refit,
                                forecast_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
