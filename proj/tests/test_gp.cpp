#include <doctest.h>

#include <cmath>
#include <random>

#include "ppg/gp.hpp"
#include "ppg/kernel.hpp"

using namespace ppg;

namespace {

// Dense conditioning with an explicit inverse, for cross-checking.
Forecast dense_predict(const Kernel& k, const std::vector<double>& xs,
                       const std::vector<double>& ys, double sigma_n,
                       const std::vector<double>& xstar) {
    const int n = static_cast<int>(xs.size());
    const int m = static_cast<int>(xstar.size());
    Eigen::MatrixXd K = gram(k, xs, sigma_n);
    Eigen::MatrixXd Kinv = K.inverse();
    Eigen::MatrixXd Ks(n, m), Kss(m, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) Ks(i, j) = k(xs[i], xstar[j]);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) Kss(i, j) = k(xstar[i], xstar[j]);
    Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(ys.data(), n);
    Forecast f;
    f.mean = Ks.transpose() * Kinv * r;
    f.covariance = Kss - Ks.transpose() * Kinv * Ks;
    return f;
}

}  // namespace

TEST_CASE("scalar marginal likelihood matches the Gaussian density") {
    // Unit total variance, target 0: standard normal at the origin.
    GpModel m0(make_se(std::sqrt(1.0 - 1e-6), 1.0), {0.0}, {0.0}, 1e-3);
    CHECK(m0.log_marginal_likelihood() ==
          doctest::Approx(-0.5 * std::log(2 * M_PI)).epsilon(1e-9));

    // General scalar case: k(x,x) = sigma^2, plus noise.
    double sig = 1.7, noise = 0.3, r = 0.8;
    double v = sig * sig + noise * noise;
    GpModel m1(make_se(sig, 2.0), {0.0}, {r}, noise);
    CHECK(m1.log_marginal_likelihood() ==
          doctest::Approx(-0.5 * (std::log(2 * M_PI * v) + r * r / v)).epsilon(1e-9));
}

TEST_CASE("marginal likelihood matches an explicit-determinant oracle") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> xs{0.0, 1.3, 2.9, 4.4};
        std::vector<double> ys;
        for (std::size_t i = 0; i < xs.size(); ++i) ys.push_back(unif(rng));
        auto k = make_se(1.2, 2.0);
        GpModel m(k->clone(), xs, ys, 0.1);
        Eigen::MatrixXd K = gram(*k, xs, 0.1);
        Eigen::VectorXd r = Eigen::Map<Eigen::VectorXd>(ys.data(), ys.size());
        double lml = -0.5 * r.dot(K.inverse() * r) - 0.5 * std::log(K.determinant()) -
                     0.5 * xs.size() * std::log(2 * M_PI);
        CHECK(m.log_marginal_likelihood() == doctest::Approx(lml).epsilon(1e-9));
    }
}

TEST_CASE("predict interpolates the data at vanishing noise") {
    std::vector<double> xs{0.0, 1.0, 2.0, 3.0};
    std::vector<double> ys{0.5, -0.2, 0.9, 0.1};
    GpModel m(make_se(1.0, 1.0), xs, ys, 1e-12);
    Forecast f = m.predict(xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        CHECK(std::abs(f.mean[i] - ys[i]) <= 1e-6);
        CHECK(f.variances()[i] <= 1e-6);
    }
}

TEST_CASE("predict reverts to the zero-mean prior far from the data") {
    GpModel m(make_se(1.4, 1.0), {0.0, 1.0}, {2.0, -1.0}, 1e-6);
    Forecast f = m.predict({1000.0});
    CHECK(std::abs(f.mean[0]) <= 1e-6);
    CHECK(f.covariance(0, 0) == doctest::Approx(1.4 * 1.4).epsilon(1e-6));
}

TEST_CASE("predict matches dense conditioning on random instances") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_real_distribution<double> hyp(0.3, 3.0);
    for (int rep = 0; rep < 30; ++rep) {
        int n = 2 + static_cast<int>(rng() % 7);
        int m = 1 + static_cast<int>(rng() % 4);
        std::vector<double> xs, ys, xstar;
        for (int i = 0; i < n; ++i) xs.push_back(i + 0.3 * unif(rng));
        for (int i = 0; i < n; ++i) ys.push_back(unif(rng));
        for (int i = 0; i < m; ++i) xstar.push_back(n * unif(rng));
        auto k = make_quasi_periodic(hyp(rng), 24.0, hyp(rng), hyp(rng), 10 * hyp(rng));
        GpModel model(k->clone(), xs, ys, 0.05);
        Forecast got = model.predict(xstar);
        Forecast want = dense_predict(*k, xs, ys, 0.05, xstar);
        for (int i = 0; i < m; ++i) {
            CHECK(std::abs(got.mean[i] - want.mean[i]) <= 1e-8);
            for (int j = 0; j < m; ++j)
                CHECK(std::abs(got.covariance(i, j) - want.covariance(i, j)) <= 1e-8);
        }
    }
}

TEST_CASE("predictive variance never exceeds the prior variance") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    auto k = make_se(1.0, 2.0);
    std::vector<double> xs, ys;
    for (int i = 0; i < 12; ++i) {
        xs.push_back(i);
        ys.push_back(unif(rng));
    }
    GpModel m(k->clone(), xs, ys, 1e-3);
    std::vector<double> xstar{0.5, 3.7, 20.0, -4.0};
    Forecast f = m.predict(xstar);
    for (std::size_t i = 0; i < xstar.size(); ++i)
        CHECK(f.covariance(i, i) <= (*k)(xstar[i], xstar[i]) + 1e-9);
}

TEST_CASE("adding a training point never increases predictive variance") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> xs, ys;
        for (int i = 0; i < 6; ++i) {
            xs.push_back(i + 0.2 * unif(rng));
            ys.push_back(unif(rng));
        }
        GpModel small(make_se(1.0, 1.5), xs, ys, 1e-3);
        std::vector<double> xs2 = xs, ys2 = ys;
        xs2.push_back(6.0 + 0.2 * unif(rng));
        ys2.push_back(unif(rng));
        GpModel big(make_se(1.0, 1.5), xs2, ys2, 1e-3);
        double xq = 10.0 * unif(rng);
        CHECK(big.predict({xq}).covariance(0, 0) <=
              small.predict({xq}).covariance(0, 0) + 1e-9);
    }
}

TEST_CASE("fit recovers a known SE length scale") {
    auto gen = make_se(1.0, 5.0);
    std::vector<double> xs, ys;
    for (int i = 0; i < 40; ++i) xs.push_back(i);
    // Deterministic sample from the prior. The Gram matrix is numerically
    // singular, so draw through its eigendecomposition with clamped spectrum.
    Eigen::MatrixXd K = gram(*gen, xs, 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    Eigen::VectorXd sq = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    std::mt19937_64 rng(21);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd u(40);
    for (int i = 0; i < 40; ++i) u[i] = normal(rng);
    Eigen::VectorXd y = eig.eigenvectors() * sq.asDiagonal() * u;
    for (int i = 0; i < 40; ++i) ys.push_back(y[i] + 0.05 * normal(rng));

    FitOptions opt;
    opt.grid = {1.0, 5.0, 25.0};
    GpModel fitted = fit(GpModel(make_se(1.0, 1.0), xs, ys, 0.05), opt);
    std::vector<HyperParam*> params =
        const_cast<Kernel&>(fitted.kernel()).trainable_params();
    double len = 0;
    for (HyperParam* hp : params)
        if (hp->name == "len_se") len = hp->value;
    CHECK(len == doctest::Approx(5.0).epsilon(0.5));
    // Fitting can only improve the objective.
    CHECK(fitted.log_marginal_likelihood() >=
          GpModel(make_se(1.0, 1.0), xs, ys, 0.05).log_marginal_likelihood() - 1e-9);
}

TEST_CASE("fit is deterministic and refinement never hurts the seed") {
    std::vector<double> xs, ys;
    for (int i = 0; i < 20; ++i) {
        xs.push_back(i);
        ys.push_back(std::sin(0.4 * i));
    }
    FitOptions opt;
    opt.grid = {2.0};  // single-point grid
    GpModel a = fit(GpModel(make_se(1.0, 1.0), xs, ys, 1e-3), opt);
    GpModel b = fit(GpModel(make_se(1.0, 1.0), xs, ys, 1e-3), opt);
    CHECK(a.log_marginal_likelihood() == b.log_marginal_likelihood());
    auto seed = GpModel(make_se(2.0, 2.0), xs, ys, 1e-3);
    CHECK(a.log_marginal_likelihood() >= seed.log_marginal_likelihood() - 1e-9);
}

TEST_CASE("rolling forecast recovers a constant series") {
    TimeSeries s{0, 1.0, std::vector<double>(80, 0.6)};
    auto k = make_se(1.0, 5.0);
    RollingResult r = rolling_forecast(s, *k, 24, 1, 0, 1e-4);
    REQUIRE(!r.steps.empty());
    for (const RollingStep& st : r.steps) {
        CHECK(std::abs(st.forecast.mean[0] - 0.6) <= 1e-4);
        CHECK(st.rmse <= 1e-4);
    }
    CHECK(r.mean_rmse <= 1e-4);
}

TEST_CASE("rolling forecast tracks a 24-periodic signal with the composite kernel") {
    std::vector<double> vals;
    for (int i = 0; i < 24 * 16; ++i)
        vals.push_back(0.5 + 0.4 * std::sin(2 * M_PI * i / 24.0));
    TimeSeries s{0, 1.0, vals};
    auto k = make_quasi_periodic(1.0, 24.0, 1.0, 1.0, 50.0);
    FitOptions opt;
    opt.grid = {0.1, 1.0, 10.0};
    opt.max_refine_iters = 30;
    RollingResult r = rolling_forecast(s, *k, 336, 24, 0, 1e-5, opt);
    CHECK(r.mean_rmse <= 0.02);
}

TEST_CASE("rolling forecast rejects series shorter than window + horizon") {
    TimeSeries s{0, 1.0, std::vector<double>(30, 1.0)};
    auto k = make_se(1.0, 1.0);
    CHECK_THROWS(rolling_forecast(s, *k, 24, 12, 0));
}
