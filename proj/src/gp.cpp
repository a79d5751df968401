#include "ppg/gp.hpp"

#include <cmath>
#include <stdexcept>

namespace ppg {

Eigen::VectorXd Forecast::variances() const {
    Eigen::VectorXd v = covariance.diagonal();
    for (int i = 0; i < v.size(); ++i) {
        if (v[i] < -1e-8)
            throw std::runtime_error("forecast variance below tolerance");
        if (v[i] < 0) v[i] = 0;
    }
    return v;
}

Eigen::MatrixXd gram(const Kernel& k, const std::vector<double>& xs, double sigma_n) {
    if (xs.empty()) throw std::invalid_argument("gram: empty input set");
    const int n = static_cast<int>(xs.size());
    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double v = k(xs[i], xs[j]);
            K(i, j) = v;
            K(j, i) = v;
        }
        K(i, i) += sigma_n * sigma_n;
    }
    return K;
}

GpModel::GpModel(KernelPtr kernel, std::vector<double> inputs, std::vector<double> targets,
                 double sigma_n)
    : kernel_(std::move(kernel)),
      inputs_(std::move(inputs)),
      targets_(std::move(targets)),
      sigma_n_(sigma_n) {
    if (!kernel_) throw std::invalid_argument("GpModel: null kernel");
    if (inputs_.empty() || inputs_.size() != targets_.size())
        throw std::invalid_argument("GpModel: inputs/targets size mismatch or empty");
    for (std::size_t i = 1; i < inputs_.size(); ++i)
        if (!(inputs_[i] > inputs_[i - 1]))
            throw std::invalid_argument("GpModel: inputs must be strictly increasing");
    if (!(sigma_n_ > 0)) throw std::invalid_argument("GpModel: sigma_n must be > 0");
    kernel_->validate();
    factorize();
}

GpModel::GpModel(const GpModel& o)
    : kernel_(o.kernel_->clone()),
      inputs_(o.inputs_),
      targets_(o.targets_),
      sigma_n_(o.sigma_n_),
      jitter_(o.jitter_),
      llt_(o.llt_),
      alpha_(o.alpha_),
      log_det_half_(o.log_det_half_) {}

void GpModel::factorize() {
    Eigen::MatrixXd K = gram(*kernel_, inputs_, sigma_n_);
    const int n = static_cast<int>(inputs_.size());
    // Jitter escalation on PD failure.
    for (double extra : {0.0, 1e-8, 1e-6, 1e-4}) {
        Eigen::MatrixXd Kj = K;
        if (extra > 0) Kj.diagonal().array() += extra;
        llt_.compute(Kj);
        if (llt_.info() == Eigen::Success) {
            jitter_ = extra;
            Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(targets_.data(), n);
            alpha_ = llt_.solve(r);
            log_det_half_ = llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
            return;
        }
    }
    throw std::runtime_error(
        "GpModel: training Gram matrix is not positive definite even after jitter "
        "escalation; increase sigma_n");
}

double GpModel::log_marginal_likelihood() const {
    const int n = static_cast<int>(inputs_.size());
    Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(targets_.data(), n);
    return -0.5 * r.dot(alpha_) - log_det_half_ - 0.5 * n * std::log(2.0 * M_PI);
}

Forecast GpModel::predict(const std::vector<double>& test_inputs) const {
    if (test_inputs.empty()) throw std::invalid_argument("predict: empty test inputs");
    const int n = static_cast<int>(inputs_.size());
    const int m = static_cast<int>(test_inputs.size());

    Eigen::MatrixXd Kstar(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) Kstar(i, j) = (*kernel_)(inputs_[i], test_inputs[j]);
    Eigen::MatrixXd Kss(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j <= i; ++j) {
            double v = (*kernel_)(test_inputs[i], test_inputs[j]);
            Kss(i, j) = v;
            Kss(j, i) = v;
        }

    Forecast f;
    f.mean = Kstar.transpose() * alpha_;
    Eigen::MatrixXd V = llt_.matrixL().solve(Kstar);
    f.covariance = Kss - V.transpose() * V;
    // Symmetrize and clamp tiny negative diagonal from roundoff.
    f.covariance = 0.5 * (f.covariance + f.covariance.transpose()).eval();
    for (int i = 0; i < m; ++i)
        if (f.covariance(i, i) < 0 && f.covariance(i, i) > -1e-8) f.covariance(i, i) = 0;
    return f;
}

namespace {

double objective_for(const Kernel& kernel, const std::vector<double>& xs,
                     const std::vector<double>& ys, double sigma_n) {
    try {
        GpModel m(kernel.clone(), xs, ys, sigma_n);
        return m.log_marginal_likelihood();
    } catch (const std::exception&) {
        return -std::numeric_limits<double>::infinity();
    }
}

}  // namespace

GpModel fit(const GpModel& model, const FitOptions& opt) {
    KernelPtr kernel = model.kernel().clone();
    auto params = kernel->trainable_params();
    if (params.empty()) return GpModel(std::move(kernel), model.inputs(), model.targets(),
                                       model.sigma_n());

    const auto& xs = model.inputs();
    const auto& ys = model.targets();
    const std::size_t np = params.size();

    auto eval_current = [&]() { return objective_for(*kernel, xs, ys, model.sigma_n()); };

    // Grid seeding: all combinations of opt.grid over the trainable parameters.
    std::vector<double> best(np);
    for (std::size_t i = 0; i < np; ++i) best[i] = params[i]->value;
    double best_obj = eval_current();

    std::vector<std::size_t> idx(np, 0);
    if (!opt.grid.empty()) {
        while (true) {
            for (std::size_t i = 0; i < np; ++i) params[i]->value = opt.grid[idx[i]];
            double obj = eval_current();
            if (obj > best_obj) {
                best_obj = obj;
                for (std::size_t i = 0; i < np; ++i) best[i] = params[i]->value;
            }
            std::size_t i = 0;
            for (; i < np; ++i) {
                if (++idx[i] < opt.grid.size()) break;
                idx[i] = 0;
            }
            if (i == np) break;
        }
    }
    if (!std::isfinite(best_obj))
        throw std::runtime_error("fit: no positive-definite hyperparameter candidate found");

    // Derivative-free coordinate refinement with a shrinking multiplicative step.
    for (std::size_t i = 0; i < np; ++i) params[i]->value = best[i];
    double step = opt.initial_step;
    int iters = 0;
    while (step > opt.min_step && iters < opt.max_refine_iters) {
        bool improved = false;
        for (std::size_t i = 0; i < np; ++i) {
            const double v0 = best[i];
            for (double cand : {v0 * step, v0 / step}) {
                if (cand < opt.lower || cand > opt.upper) continue;
                params[i]->value = cand;
                double obj = eval_current();
                ++iters;
                if (obj > best_obj) {
                    best_obj = obj;
                    best[i] = cand;
                    improved = true;
                }
            }
            params[i]->value = best[i];
        }
        if (!improved) step = std::sqrt(step);
    }
    for (std::size_t i = 0; i < np; ++i) params[i]->value = best[i];
    return GpModel(std::move(kernel), xs, ys, model.sigma_n());
}

RollingResult rolling_forecast(const TimeSeries& series, const Kernel& kernel, int window,
                               int horizon, long refit_period, double sigma_n,
                               const FitOptions& opt) {
    const long T = static_cast<long>(series.size());
    if (window < 1 || horizon < 1)
        throw std::invalid_argument("rolling_forecast: window and horizon must be >= 1");
    if (T < window + horizon + 1)
        throw std::invalid_argument("rolling_forecast: series too short for window + horizon + 1");

    auto slice_inputs = [](long from, int count) {
        std::vector<double> xs(count);
        for (int i = 0; i < count; ++i) xs[i] = static_cast<double>(from + i);
        return xs;
    };
    auto slice_values = [&](long from, int count) {
        return std::vector<double>(series.values.begin() + from,
                                   series.values.begin() + from + count);
    };

    RollingResult out;

    // Pre-training on the first `window` points (W = N).
    GpModel pre(kernel.clone(), slice_inputs(0, window), slice_values(0, window), sigma_n);
    GpModel fitted = fit(pre, opt);
    KernelPtr theta0 = fitted.kernel().clone();
    for (auto* p : theta0->trainable_params()) out.fitted_params.push_back(p->value);

    KernelPtr theta = theta0->clone();
    double rmse_acc = 0.0;
    const long steps = T - (window + horizon);
    out.steps.reserve(steps);
    for (long t = 1; t <= steps; ++t) {
        const long lo = t - 1;
        if (refit_period > 0 && (t - 1) % refit_period == 0) {
            try {
                GpModel m(theta0->clone(), slice_inputs(lo, window), slice_values(lo, window),
                          sigma_n);
                theta = fit(m, opt).kernel().clone();
            } catch (const std::exception& e) {
                throw std::runtime_error("rolling_forecast: refit failed at step " +
                                         std::to_string(t) + ": " + e.what());
            }
        }
        RollingStep st;
        st.t = t;
        try {
            GpModel m(theta->clone(), slice_inputs(lo, window), slice_values(lo, window), sigma_n);
            st.forecast = m.predict(slice_inputs(lo + window, horizon));
        } catch (const std::exception& e) {
            throw std::runtime_error("rolling_forecast: prediction failed at step " +
                                     std::to_string(t) + ": " + e.what());
        }
        std::vector<double> mu(st.forecast.mean.data(), st.forecast.mean.data() + horizon);
        st.rmse = rmse(mu, slice_values(lo + window, horizon));
        rmse_acc += st.rmse;
        out.steps.push_back(std::move(st));
    }
    out.mean_rmse = rmse_acc / static_cast<double>(steps);
    return out;
}

}  // namespace ppg
