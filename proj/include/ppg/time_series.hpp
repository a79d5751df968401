#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ppg {

// Uniformly slotted scalar series. Values are joules for energy series and
// fraction-of-bandwidth in [0,1] for load series.
struct TimeSeries {
    long start_slot = 0;
    double step_hours = 1.0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }
    double operator[](std::size_t i) const { return values[i]; }
};

// O(L) = (base_power + load_slope * L) * slot_duration, output in joules.
struct ConsumptionModel {
    double base_power_w = 100.0;
    double load_slope_w = 200.0;
    double slot_hours = 1.0;

    double energy_for_load(double load) const {
        return (base_power_w + load_slope_w * load) * slot_hours * 3600.0;
    }
    // Daily drain at L=1, used by the purchased-energy threshold eta.
    double full_load_daily_joules() const {
        return energy_for_load(1.0) * (24.0 / slot_hours);
    }
};

// Two daily load templates; cluster 2 (light) is picked with probability p.
struct ClusterProfiles {
    std::vector<double> cluster1;  // heavy
    std::vector<double> cluster2;  // light
    double p = 0.5;

    void validate() const;
};

TimeSeries consumption(const TimeSeries& load, const ConsumptionModel& model);

// Divides by the max; returns the scale so denormalization is exact.
std::pair<TimeSeries, double> normalize(const TimeSeries& series);
TimeSeries denormalize(const TimeSeries& series, double scale);

double rmse(const std::vector<double>& predicted, const std::vector<double>& actual);

}  // namespace ppg
