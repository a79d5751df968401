#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ppg/scenario_io.hpp"
#include "ppg/sim.hpp"

using namespace ppg;

namespace {

ScenarioConfig quick_config(Strategy s, int days = 2) {
    ScenarioConfig cfg = reference_config();
    cfg.strategy = s;
    cfg.days = days;
    cfg.warmup_days = uses_forecasts(s) ? cfg.warmup_days : 1;
    cfg.seed = 1;
    return cfg;
}

}  // namespace

TEST_CASE("strategy names round-trip") {
    for (Strategy s : {Strategy::NOEE, Strategy::CONV, Strategy::HUNG,
                       Strategy::GPS_MPC_CONV, Strategy::GPS_MPC_HUNG})
        CHECK(strategy_from_string(to_string(s)) == s);
    CHECK_THROWS(strategy_from_string("bogus"));
    CHECK(uses_forecasts(Strategy::GPS_MPC_CONV));
    CHECK(!uses_forecasts(Strategy::CONV));
    CHECK(uses_hungarian(Strategy::HUNG));
    CHECK(uses_hungarian(Strategy::GPS_MPC_HUNG));
    CHECK(!uses_hungarian(Strategy::GPS_MPC_CONV));
}

TEST_CASE("buffer update: plain arithmetic and both clamps") {
    double waste = -1, unserved = -1;
    CHECK(buffer_update(100e3, 30e3, 50e3, 10e3, 0.0, 360e3, &waste, &unserved) ==
          doctest::Approx(90e3));
    CHECK(waste == 0.0);
    CHECK(unserved == 0.0);

    CHECK(buffer_update(350e3, 30e3, 0.0, 0.0, 0.0, 360e3, &waste, &unserved) ==
          doctest::Approx(360e3));
    CHECK(waste == doctest::Approx(20e3));

    CHECK(buffer_update(20e3, 0.0, 50e3, 0.0, 0.0, 360e3, &waste, &unserved) ==
          doctest::Approx(0.0));
    CHECK(unserved == doctest::Approx(30e3));
}

TEST_CASE("grid purchase: threshold rule with a daily cap") {
    double b_up = 0.7 * 360e3;  // 252 kJ
    CHECK(grid_purchase(200e3, b_up, std::numeric_limits<double>::infinity()) ==
          doctest::Approx(52e3));
    CHECK(grid_purchase(300e3, b_up, std::numeric_limits<double>::infinity()) == 0.0);
    CHECK(grid_purchase(200e3, b_up, 10e3) == doctest::Approx(10e3));
    CHECK(grid_purchase(200e3, b_up, 0.0) == 0.0);
}

TEST_CASE("myopic actions: demand below reference, offer above") {
    std::vector<double> buffers{0.0, 100e3, 180e3, 300e3};
    std::vector<double> u = myopic_actions(buffers, 0, 180e3);
    CHECK(u[0] == 0.0);  // the router never trades
    CHECK(u[1] == doctest::Approx(80e3));
    CHECK(u[2] == 0.0);
    CHECK(u[3] == doctest::Approx(-120e3));
}

TEST_CASE("outage probability: depleted-buffer ratio excluding the router") {
    std::vector<double> buffers(19, 100e3);
    buffers[0] = 0.0;  // router, not counted
    CHECK(outage_probability(buffers, 0) == doctest::Approx(0.0));
    buffers[3] = buffers[7] = buffers[11] = 0.0;
    CHECK(outage_probability(buffers, 0) == doctest::Approx(3.0 / 18.0));
    for (std::size_t i = 1; i < buffers.size(); ++i) buffers[i] = 0.0;
    CHECK(outage_probability(buffers, 0) == doctest::Approx(1.0));
}

TEST_CASE("scenario config: validation and the default ongrid set") {
    ScenarioConfig cfg = reference_config();
    CHECK_NOTHROW(cfg.validate());
    // First two BSs of each of the three branches.
    CHECK(cfg.ongrid_set() == std::vector<int>{1, 2, 7, 8, 13, 14});

    ScenarioConfig bad = cfg;
    bad.b_low_frac = 0.8;  // breaks B_low < B_ref
    CHECK_THROWS(bad.validate());
    bad = cfg;
    bad.b_up_frac = 1.5;
    CHECK_THROWS(bad.validate());
    bad = cfg;
    bad.days = 0;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("NOEE never transfers and offgrid BSs never purchase") {
    Metrics m = run_scenario(quick_config(Strategy::NOEE));
    CHECK(m.total_transferred == 0.0);
    CHECK(m.total_losses == 0.0);
    for (const SlotMetrics& s : m.slots) CHECK(s.transferred == 0.0);

    ScenarioConfig cfg = quick_config(Strategy::NOEE);
    Simulation sim(cfg);
    sim.run_all();
    Metrics mm = sim.finish();
    std::vector<int> on = cfg.ongrid_set();
    for (std::size_t i = 0; i < mm.purchased_by_bs.size(); ++i) {
        int bs = sim.bs_ids()[i];
        bool ongrid = std::find(on.begin(), on.end(), bs) != on.end();
        if (!ongrid) CHECK(mm.purchased_by_bs[i] == 0.0);
    }
}

TEST_CASE("buffers stay inside [0, B_max] and accounting balances under CONV") {
    ScenarioConfig cfg = quick_config(Strategy::CONV);
    Simulation sim(cfg);
    while (sim.current_slot() < sim.end_slot()) {
        sim.step();
        for (int bs : sim.bs_ids()) {
            double b = sim.buffers()[bs];
            CHECK(b >= 0.0);
            CHECK(b <= cfg.b_max + 1e-6);
        }
    }
    Metrics m = sim.finish();
    CHECK(m.max_accounting_residual <= 1e-6);
    CHECK(m.total_transferred > 0.0);  // the myopic strategy does trade
}

TEST_CASE("identical configs reproduce identical metrics") {
    ScenarioConfig cfg = quick_config(Strategy::HUNG);
    Metrics a = run_scenario(cfg);
    Metrics b = run_scenario(cfg);
    REQUIRE(a.slots.size() == b.slots.size());
    for (std::size_t i = 0; i < a.slots.size(); ++i) {
        CHECK(a.slots[i].gamma == b.slots[i].gamma);
        CHECK(a.slots[i].mean_buffer == b.slots[i].mean_buffer);
        CHECK(a.slots[i].purchased == b.slots[i].purchased);
        CHECK(a.slots[i].transferred == b.slots[i].transferred);
    }
    CHECK(a.total_purchased == b.total_purchased);
    CHECK(a.mean_gamma == b.mean_gamma);
}

TEST_CASE("eta cap limits each ongrid BS to its daily budget") {
    ScenarioConfig cfg = quick_config(Strategy::CONV, 3);
    cfg.eta = 0.2;
    Simulation sim(cfg);
    sim.run_all();
    Metrics m = sim.finish();
    double cap = cfg.eta * cfg.consumption.full_load_daily_joules();
    double days = static_cast<double>(cfg.days + cfg.warmup_days);
    for (double p : m.purchased_by_bs) CHECK(p <= cap * days + 1e-6);
}

TEST_CASE("cluster assignment follows the cluster probability") {
    ScenarioConfig cfg = quick_config(Strategy::NOEE, 1);
    cfg.cluster_p = 1.0;  // everyone light
    Simulation light(cfg);
    for (int bs : light.bs_ids()) CHECK(light.cluster_of(bs) == 2);
    cfg.cluster_p = 0.0;
    Simulation heavy(cfg);
    for (int bs : heavy.bs_ids()) CHECK(heavy.cluster_of(bs) == 1);
}

TEST_CASE("scenario JSON round-trip and unknown-key rejection") {
    ScenarioConfig cfg = reference_config();
    cfg.strategy = Strategy::GPS_MPC_HUNG;
    cfg.eta = 0.3;
    cfg.seed = 99;
    ScenarioConfig back = scenario_from_json(scenario_to_json(cfg));
    CHECK(back.strategy == cfg.strategy);
    CHECK(back.eta == doctest::Approx(cfg.eta));
    CHECK(back.seed == cfg.seed);
    CHECK(back.b_max == doctest::Approx(cfg.b_max));
    CHECK(back.solar_peak == doctest::Approx(cfg.solar_peak));

    nlohmann::json j = scenario_to_json(cfg);
    j["no_such_key"] = 1;
    CHECK_THROWS(scenario_from_json(j));
}

TEST_CASE("metrics CSV bodies are byte-identical across reruns") {
    ScenarioConfig cfg = quick_config(Strategy::CONV, 1);
    std::string p1 = "/tmp/ppg_test_m1.csv", p2 = "/tmp/ppg_test_m2.csv";
    write_metrics_csv(run_scenario(cfg), p1);
    write_metrics_csv(run_scenario(cfg), p2);
    std::ifstream f1(p1), f2(p2);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
    CHECK(!s1.str().empty());
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}
