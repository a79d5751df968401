#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "ppg/gp.hpp"
#include "ppg/kernel.hpp"

using namespace ppg;

TEST_CASE("SE kernel: unit value at zero distance, Gaussian decay") {
    auto k = make_se(1.0, 3.0);
    CHECK((*k)(5.0, 5.0) == doctest::Approx(1.0));
    double d = 2.0;
    CHECK((*k)(0.0, d) == doctest::Approx(std::exp(-d * d / (2 * 9.0))));
    CHECK((*k)(0.0, d) == doctest::Approx((*k)(d, 0.0)));  // symmetric
}

TEST_CASE("RQ kernel: closed-form point value") {
    auto k = make_rq(1.0, 1.0, 1.0);
    double d = std::sqrt(2.0);
    CHECK((*k)(0.0, d) == doctest::Approx(0.5));  // (1 + d^2/2)^-1
}

TEST_CASE("SP kernel: unit value at integer multiples of the period") {
    auto k = make_sp(1.0, 24.0, 0.7);
    CHECK((*k)(0.0, 24.0) == doctest::Approx(1.0));
    CHECK((*k)(3.0, 3.0 + 48.0) == doctest::Approx(1.0));
    CHECK((*k)(0.0, 12.0) < 1.0);
}

TEST_CASE("sum and product nodes combine children pointwise") {
    auto s = make_sum(make_se(1.0, 2.0), make_rq(1.0, 1.0, 1.0));
    auto p = make_product(make_se(1.0, 2.0), make_rq(1.0, 1.0, 1.0));
    auto se = make_se(1.0, 2.0);
    auto rq = make_rq(1.0, 1.0, 1.0);
    double a = 1.0, b = 2.5;
    CHECK((*s)(a, b) == doctest::Approx((*se)(a, b) + (*rq)(a, b)));
    CHECK((*p)(a, b) == doctest::Approx((*se)(a, b) * (*rq)(a, b)));
}

TEST_CASE("quasi-periodic kernel: period frozen, peak at period multiples") {
    auto k = make_quasi_periodic(1.0, 24.0, 0.7, 1.0, 100.0);
    for (HyperParam* hp : k->trainable_params()) CHECK(hp->name != "period_sp");
    // RQ factor decays slowly, so a one-period shift is near but below 1.
    double v = (*k)(0.0, 24.0);
    CHECK(v < 1.0);
    CHECK(v > 0.9);
    CHECK((*k)(0.0, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("validate rejects non-positive hyperparameters") {
    auto k = make_se(1.0, 2.0);
    CHECK_NOTHROW(k->validate());
    k->trainable_params()[1]->value = -1.0;
    CHECK_THROWS(k->validate());
}

TEST_CASE("gram matrices stay PSD for random hyperparameters") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(0.05, 20.0);
    std::uniform_real_distribution<double> xs_dist(0.0, 100.0);
    for (int rep = 0; rep < 20; ++rep) {
        KernelPtr k;
        switch (rep % 4) {
            case 0: k = make_se(unif(rng), unif(rng)); break;
            case 1: k = make_rq(unif(rng), unif(rng), unif(rng)); break;
            case 2: k = make_sp(unif(rng), unif(rng), unif(rng)); break;
            default:
                k = make_quasi_periodic(unif(rng), 24.0, unif(rng), unif(rng), unif(rng));
        }
        std::vector<double> xs(50);
        for (double& x : xs) x = xs_dist(rng);
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        Eigen::MatrixXd K = gram(*k, xs, 0.0);
        CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8);
    }
}

TEST_CASE("kernel JSON round-trip preserves structure and values") {
    auto k = make_quasi_periodic(1.3, 24.0, 0.6, 2.0, 40.0);
    auto back = Kernel::from_json(k->to_json());
    for (double d : {0.0, 1.5, 7.0, 30.0})
        CHECK((*back)(0.0, d) == doctest::Approx((*k)(0.0, d)));
}

TEST_CASE("kernel text parse matches the constructed tree") {
    auto k = Kernel::parse(R"({"type":"se","sigma":1.0,"length":2.0})");
    auto ref = make_se(1.0, 2.0);
    CHECK((*k)(0.0, 1.7) == doctest::Approx((*ref)(0.0, 1.7)));
    CHECK_THROWS(Kernel::parse(R"({"type":"wat"})"));
}

TEST_CASE("clone is deep: edits to the copy leave the original alone") {
    auto k = make_se(1.0, 2.0);
    auto c = k->clone();
    c->trainable_params()[1]->value = 9.0;
    CHECK((*k)(0.0, 2.0) == doctest::Approx(std::exp(-0.5)));
    CHECK((*c)(0.0, 2.0) != doctest::Approx(std::exp(-0.5)));
}
