#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "ppg/kernel.hpp"
#include "ppg/time_series.hpp"

namespace ppg {

struct Forecast {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;

    int horizon() const { return static_cast<int>(mean.size()); }
    Eigen::VectorXd variances() const;  // diagonal, clamped at 0
};

// K_ij = k(x_i, x_j) + sigma_n^2 1{i=j}
Eigen::MatrixXd gram(const Kernel& k, const std::vector<double>& xs, double sigma_n);

// Exact zero-mean GP with Gaussian noise. Immutable after construction or
// fit(); predict() is safe to call from multiple threads.
class GpModel {
   public:
    GpModel(KernelPtr kernel, std::vector<double> inputs, std::vector<double> targets,
            double sigma_n = 1e-5);
    GpModel(const GpModel& o);
    GpModel& operator=(const GpModel&) = delete;

    const Kernel& kernel() const { return *kernel_; }
    double sigma_n() const { return sigma_n_; }
    const std::vector<double>& inputs() const { return inputs_; }
    const std::vector<double>& targets() const { return targets_; }
    // Extra variance added by jitter escalation to reach a PD factorization.
    double jitter() const { return jitter_; }

    double log_marginal_likelihood() const;
    Forecast predict(const std::vector<double>& test_inputs) const;

   private:
    void factorize();

    KernelPtr kernel_;
    std::vector<double> inputs_;
    std::vector<double> targets_;
    double sigma_n_;
    double jitter_ = 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;  // (K + sigma_n^2 I)^-1 r
    double log_det_half_ = 0.0;
};

struct FitOptions {
    // Per-parameter seed values for the multi-start grid; the same list is
    // used for every trainable hyperparameter.
    std::vector<double> grid = {1e-1, 1.0, 1e1};
    int max_refine_iters = 60;
    double initial_step = 2.0;   // multiplicative coordinate step
    double min_step = 1.02;
    double lower = 1e-2;         // search box per hyperparameter
    double upper = 1e2;
};

// Maximizes the log marginal likelihood over the kernel's trainable
// hyperparameters: grid seeding refined by derivative-free coordinate search.
// Deterministic given the data and options.
GpModel fit(const GpModel& model, const FitOptions& opt = {});

struct RollingStep {
    long t = 0;  // 1-based step index of the online routine
    Forecast forecast;
    double rmse = 0.0;
};

struct RollingResult {
    std::vector<RollingStep> steps;
    double mean_rmse = 0.0;
    std::vector<double> fitted_params;  // pre-trained hyperparameter values
};

// Sliding-window multi-step forecasting: pre-train on the first `window`
// points, then slide a `window`-point training set one slot at a time,
// refitting once every refit_period steps (0 means pre-train only), and
// predict the next `horizon` points against the truth.
RollingResult rolling_forecast(const TimeSeries& series, const Kernel& kernel, int window,
                               int horizon, long refit_period, double sigma_n = 1e-5,
                               const FitOptions& opt = {});

}  // namespace ppg
