#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "ppg/time_series.hpp"
#include "ppg/traces.hpp"

using namespace ppg;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& body)
        : path("/tmp/ppg_test_" + name) {
        std::ofstream os(path);
        os << body;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("solar trace: noiseless bell peaks at noon and is zero at night") {
    TimeSeries s = gen_solar_trace(1, 100e3, 0.0, 1);
    REQUIRE(s.size() == 24);
    CHECK(s[0] == 0.0);
    CHECK(s[12] == doctest::Approx(100e3));
    for (int h = 0; h < 24; ++h) {
        if (h <= 6 || h >= 18) CHECK(s[h] == 0.0);
    }
}

TEST_CASE("solar trace: noiseless days repeat exactly") {
    TimeSeries s = gen_solar_trace(2, 50e3, 0.0, 99);
    REQUIRE(s.size() == 48);
    for (int h = 0; h < 24; ++h) CHECK(s[h] == s[24 + h]);
}

TEST_CASE("solar trace: noisy output stays non-negative and dark at night") {
    TimeSeries s = gen_solar_trace(60, 100e3, 0.2, 7);
    REQUIRE(s.size() == 60 * 24);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s[i] >= 0.0);
        int h = static_cast<int>(i % 24);
        if (h <= 6 || h >= 18) CHECK(s[i] == 0.0);
    }
}

TEST_CASE("solar trace: same seed reproduces, different seed varies") {
    TimeSeries a = gen_solar_trace(3, 100e3, 0.2, 42);
    TimeSeries b = gen_solar_trace(3, 100e3, 0.2, 42);
    TimeSeries c = gen_solar_trace(3, 100e3, 0.2, 43);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
}

TEST_CASE("traffic trace: degenerate cluster probabilities") {
    ClusterProfiles p0 = default_cluster_profiles(0.0);
    ClusterProfiles p1 = default_cluster_profiles(1.0);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        CHECK(gen_traffic_trace(1, p0, seed).cluster_id == 1);
        CHECK(gen_traffic_trace(1, p1, seed).cluster_id == 2);
    }
}

TEST_CASE("traffic trace: cluster-2 frequency approaches p over many seeds") {
    ClusterProfiles prof = default_cluster_profiles(0.5);
    int light = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i)
        if (gen_traffic_trace(1, prof, 1000 + i).cluster_id == 2) ++light;
    double frac = static_cast<double>(light) / draws;
    CHECK(frac == doctest::Approx(0.5).epsilon(0.04));  // 0.5 +/- 0.02
}

TEST_CASE("traffic trace: jitter-free tiling repeats the daily template") {
    ClusterProfiles prof = default_cluster_profiles(0.0);
    TrafficTrace t = gen_traffic_trace(3, prof, 5);
    REQUIRE(t.series.size() == 72);
    for (int h = 0; h < 24; ++h) {
        CHECK(t.series[h] == prof.cluster1[h]);
        CHECK(t.series[h] == t.series[24 + h]);
        CHECK(t.series[h] == t.series[48 + h]);
    }
}

TEST_CASE("traffic trace: values stay in [0,1] with jitter") {
    ClusterProfiles prof = default_cluster_profiles(0.5);
    TrafficTrace t = gen_traffic_trace(10, prof, 3, 0.2);
    for (double v : t.series.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("cluster profiles: heavy cluster dominates the light one daily") {
    ClusterProfiles prof = default_cluster_profiles(0.5);
    prof.validate();
    REQUIRE(prof.cluster1.size() == 24);
    REQUIRE(prof.cluster2.size() == 24);
    double s1 = 0, s2 = 0;
    for (int h = 0; h < 24; ++h) {
        CHECK(prof.cluster1[h] >= 0.0);
        CHECK(prof.cluster1[h] <= 1.0);
        CHECK(prof.cluster2[h] >= 0.0);
        CHECK(prof.cluster2[h] <= 1.0);
        s1 += prof.cluster1[h];
        s2 += prof.cluster2[h];
    }
    CHECK(s1 >= s2);
}

TEST_CASE("consumption: affine map unit arithmetic") {
    ConsumptionModel m{100.0, 200.0, 1.0};
    TimeSeries zero{0, 1.0, {0.0, 0.0}};
    TimeSeries o = consumption(zero, m);
    CHECK(o[0] == doctest::Approx(360e3));  // 100 W for an hour

    TimeSeries full{0, 1.0, {1.0}};
    CHECK(consumption(full, ConsumptionModel{0.0, 200.0, 1.0})[0] ==
          doctest::Approx(720e3));

    TimeSeries half{0, 1.0, {0.5}};
    CHECK(consumption(half, m)[0] == doctest::Approx(720e3));  // (100+100) W * 3600 s
}

TEST_CASE("consumption: monotone in the load") {
    ConsumptionModel m{50.0, 150.0, 1.0};
    TimeSeries lo{0, 1.0, {0.1, 0.2, 0.3}};
    TimeSeries hi{0, 1.0, {0.2, 0.6, 0.3}};
    TimeSeries olo = consumption(lo, m), ohi = consumption(hi, m);
    for (std::size_t i = 0; i < lo.size(); ++i) CHECK(olo[i] <= ohi[i]);
}

TEST_CASE("consumption model: full-load daily drain") {
    ConsumptionModel m{100.0, 200.0, 1.0};
    CHECK(m.full_load_daily_joules() == doctest::Approx(24 * 300.0 * 3600.0));
}

TEST_CASE("normalize: direct division and scale") {
    TimeSeries s{0, 1.0, {2.0, 4.0, 8.0}};
    auto [n, scale] = normalize(s);
    CHECK(scale == doctest::Approx(8.0));
    CHECK(n[0] == doctest::Approx(0.25));
    CHECK(n[1] == doctest::Approx(0.5));
    CHECK(n[2] == doctest::Approx(1.0));
}

TEST_CASE("normalize: idempotent on an already-normalized series") {
    TimeSeries s{0, 1.0, {0.25, 1.0, 0.5}};
    auto [n, scale] = normalize(s);
    CHECK(scale == doctest::Approx(1.0));
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(n[i] == doctest::Approx(s[i]));
}

TEST_CASE("normalize: round-trips through denormalize") {
    TimeSeries s = gen_solar_trace(7, 123e3, 0.15, 11);
    auto [n, scale] = normalize(s);
    TimeSeries back = denormalize(n, scale);
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        CHECK(std::abs(back[i] - s[i]) <= 1e-12 * std::max(1.0, std::abs(s[i])));
}

TEST_CASE("normalize: all-zero series is rejected") {
    TimeSeries s{0, 1.0, {0.0, 0.0}};
    CHECK_THROWS(normalize(s));
}

TEST_CASE("rmse: arithmetic, symmetry, identity") {
    CHECK(rmse({1, 2, 3}, {1, 2, 3}) == doctest::Approx(0.0));
    CHECK(rmse({0, 0}, {3, 4}) == doctest::Approx(std::sqrt(25.0 / 2.0)));
    CHECK(rmse({1, 5}, {2, 7}) == doctest::Approx(rmse({2, 7}, {1, 5})));
    CHECK_THROWS(rmse({1.0}, {1.0, 2.0}));
}

TEST_CASE("load_csv: parses a single-column file in order") {
    TempFile f("ok.csv", "energy\n10\n20\n30\n");
    TimeSeries s = load_csv(f.path, "energy");
    REQUIRE(s.size() == 3);
    CHECK(s[0] == doctest::Approx(10));
    CHECK(s[1] == doctest::Approx(20));
    CHECK(s[2] == doctest::Approx(30));
}

TEST_CASE("load_csv: malformed row error names the row") {
    TempFile f("bad.csv", "energy\n10\nabc\n30\n");
    CHECK_THROWS_WITH_AS(load_csv(f.path, "energy"),
                         doctest::Contains("row 3"), std::runtime_error);
}

TEST_CASE("load_csv: rejects empty files, missing files, negative values") {
    TempFile empty("empty.csv", "");
    CHECK_THROWS(load_csv(empty.path, "energy"));
    CHECK_THROWS(load_csv("/tmp/ppg_test_does_not_exist.csv", "energy"));
    TempFile neg("neg.csv", "energy\n10\n-5\n");
    CHECK_THROWS(load_csv(neg.path, "energy"));
    TempFile wrongcol("col.csv", "other\n10\n");
    CHECK_THROWS(load_csv(wrongcol.path, "energy"));
}

TEST_CASE("save_csv then load_csv round-trips") {
    TimeSeries s = gen_solar_trace(2, 80e3, 0.1, 3);
    std::string path = "/tmp/ppg_test_roundtrip.csv";
    save_csv(path, "harvest", s);
    TimeSeries back = load_csv(path, "harvest");
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(back[i] == doctest::Approx(s[i]));
    std::remove(path.c_str());
}
