#include "ppg/traces.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace ppg {

void ClusterProfiles::validate() const {
    if (cluster1.size() != 24 || cluster2.size() != 24)
        throw std::invalid_argument("cluster templates must have exactly 24 entries");
    double s1 = 0, s2 = 0;
    for (int h = 0; h < 24; ++h) {
        if (cluster1[h] < 0 || cluster1[h] > 1 || cluster2[h] < 0 || cluster2[h] > 1)
            throw std::invalid_argument("cluster template entries must be in [0,1]");
        s1 += cluster1[h];
        s2 += cluster2[h];
    }
    if (s1 < s2)
        throw std::invalid_argument("cluster1 must be the heavier template");
    if (p < 0 || p > 1)
        throw std::invalid_argument("cluster probability p must be in [0,1]");
}

TimeSeries consumption(const TimeSeries& load, const ConsumptionModel& model) {
    if (model.base_power_w < 0 || model.load_slope_w < 0)
        throw std::invalid_argument("consumption model coefficients must be >= 0");
    TimeSeries out;
    out.start_slot = load.start_slot;
    out.step_hours = load.step_hours;
    out.values.reserve(load.size());
    for (double l : load.values) {
        if (l < 0 || l > 1 || !std::isfinite(l))
            throw std::invalid_argument("load values must be in [0,1]");
        out.values.push_back(model.energy_for_load(l));
    }
    return out;
}

std::pair<TimeSeries, double> normalize(const TimeSeries& series) {
    if (series.empty())
        throw std::invalid_argument("cannot normalize an empty series");
    double mx = *std::max_element(series.values.begin(), series.values.end());
    if (mx <= 0)
        throw std::invalid_argument("cannot normalize an all-zero series");
    TimeSeries out = series;
    for (double& v : out.values) v /= mx;
    return {out, mx};
}

TimeSeries denormalize(const TimeSeries& series, double scale) {
    TimeSeries out = series;
    for (double& v : out.values) v *= scale;
    return out;
}

double rmse(const std::vector<double>& predicted, const std::vector<double>& actual) {
    if (predicted.size() != actual.size() || predicted.empty())
        throw std::invalid_argument("rmse: length mismatch or empty input");
    double acc = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        double e = predicted[i] - actual[i];
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(predicted.size()));
}

TimeSeries gen_solar_trace(int days, double peak_joules, double noise_scale,
                           std::uint64_t seed, const SolarOptions& opt) {
    if (days < 1) throw std::invalid_argument("gen_solar_trace: days must be >= 1");
    if (peak_joules <= 0) throw std::invalid_argument("gen_solar_trace: peak must be > 0");
    if (noise_scale < 0) throw std::invalid_argument("gen_solar_trace: noise_scale must be >= 0");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double span = static_cast<double>(opt.sunset_hour - opt.sunrise_hour);

    TimeSeries out;
    out.values.reserve(static_cast<std::size_t>(days) * 24);
    for (int d = 0; d < days; ++d) {
        double day_factor = 1.0 + noise_scale * gauss(rng);
        day_factor = std::clamp(day_factor, 0.1, 2.0);
        for (int h = 0; h < 24; ++h) {
            double v = 0.0;
            if (h > opt.sunrise_hour && h < opt.sunset_hour) {
                double bell = 0.5 * (1.0 - std::cos(2.0 * M_PI * (h - opt.sunrise_hour) / span));
                double hour_factor = 1.0 + noise_scale * gauss(rng);
                v = peak_joules * day_factor * bell * std::max(0.0, hour_factor);
            }
            out.values.push_back(v);
        }
    }
    return out;
}

TrafficTrace gen_traffic_trace(int days, const ClusterProfiles& profiles,
                               std::uint64_t seed, double jitter) {
    if (days < 1) throw std::invalid_argument("gen_traffic_trace: days must be >= 1");
    profiles.validate();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    TrafficTrace out;
    out.cluster_id = (uni(rng) < profiles.p) ? 2 : 1;
    const auto& tpl = (out.cluster_id == 2) ? profiles.cluster2 : profiles.cluster1;

    out.series.values.reserve(static_cast<std::size_t>(days) * 24);
    for (int d = 0; d < days; ++d) {
        for (int h = 0; h < 24; ++h) {
            double v = tpl[h];
            if (jitter > 0) v += jitter * (2.0 * uni(rng) - 1.0);
            out.series.values.push_back(std::clamp(v, 0.0, 1.0));
        }
    }
    return out;
}

TimeSeries load_csv(const std::string& path, const std::string& column) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);

    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };

    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("load_csv: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    auto header = split(line);
    std::size_t col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == column) { col = i; break; }
    if (col == header.size())
        throw std::runtime_error("load_csv: column '" + column + "' not found in " + path);

    TimeSeries out;
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() <= col)
            throw std::runtime_error("load_csv: row " + std::to_string(row) + " has too few columns");
        double v;
        try {
            std::size_t pos = 0;
            v = std::stod(cells[col], &pos);
            if (pos != cells[col].size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
            throw std::runtime_error("load_csv: malformed value at row " + std::to_string(row) +
                                     " in " + path);
        }
        if (std::isnan(v) || v < 0)
            throw std::runtime_error("load_csv: negative or NaN value at row " + std::to_string(row));
        out.values.push_back(v);
    }
    if (out.empty())
        throw std::runtime_error("load_csv: no data rows in " + path);
    return out;
}

void save_csv(const std::string& path, const std::string& column, const TimeSeries& series) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_csv: cannot open " + path);
    out << column << "\n";
    char buf[64];
    for (double v : series.values) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        out << buf << "\n";
    }
}

ClusterProfiles default_cluster_profiles(double p) {
    ClusterProfiles cp;
    // Heavy cluster: busy daytime with an evening peak.
    cp.cluster1 = {0.16, 0.13, 0.11, 0.10, 0.10, 0.12, 0.18, 0.28, 0.40, 0.50,
                   0.55, 0.58, 0.60, 0.58, 0.55, 0.52, 0.52, 0.56, 0.62, 0.68,
                   0.70, 0.60, 0.42, 0.25};
    // Light cluster: same shape, much lower level.
    cp.cluster2 = {0.03, 0.02, 0.02, 0.02, 0.02, 0.02, 0.04, 0.06, 0.09, 0.11,
                   0.12, 0.13, 0.14, 0.13, 0.12, 0.12, 0.12, 0.13, 0.14, 0.15,
                   0.15, 0.12, 0.08, 0.05};
    cp.p = p;
    cp.validate();
    return cp;
}

}  // namespace ppg
