#pragma once

#include <cstdint>
#include <utility>

#include "ppg/time_series.hpp"

namespace ppg {

struct SolarOptions {
    int sunrise_hour = 6;
    int sunset_hour = 18;
};

// Daily raised-cosine bell peaking at mid-day, zero outside [sunrise, sunset].
// Each day is scaled by a random per-day factor and per-hour multiplicative
// noise, both controlled by noise_scale (0 gives a deterministic trace).
TimeSeries gen_solar_trace(int days, double peak_joules, double noise_scale,
                           std::uint64_t seed, const SolarOptions& opt = {});

struct TrafficTrace {
    TimeSeries series;
    int cluster_id = 1;  // 1 = heavy, 2 = light
};

// Picks one cluster per BS (cluster 2 with probability p), then tiles its
// daily template. jitter adds per-hour uniform noise, clipped to [0,1].
TrafficTrace gen_traffic_trace(int days, const ClusterProfiles& profiles,
                               std::uint64_t seed, double jitter = 0.0);

// One header row, one numeric column per series, one row per slot.
TimeSeries load_csv(const std::string& path, const std::string& column);

void save_csv(const std::string& path, const std::string& column,
              const TimeSeries& series);

// Daily templates shaped after typical heavy/light cellular load profiles.
ClusterProfiles default_cluster_profiles(double p);

}  // namespace ppg
