#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ppg {

struct HyperParam {
    std::string name;
    double value = 1.0;
    bool trainable = true;
};

// Covariance function tree: SE / RQ / SP leaves combined by Sum and Product.
// All scale and length parameters must stay positive; evaluation is symmetric
// and Gram matrices on distinct inputs are PSD up to roundoff.
class Kernel {
   public:
    virtual ~Kernel() = default;
    virtual double eval(double x, double xhat) const = 0;
    virtual std::unique_ptr<Kernel> clone() const = 0;
    virtual void collect_params(std::vector<HyperParam*>& out) = 0;
    virtual nlohmann::json to_json() const = 0;

    double operator()(double x, double xhat) const;

    std::vector<HyperParam*> trainable_params();
    void validate() const;

    static std::unique_ptr<Kernel> from_json(const nlohmann::json& j);
    static std::unique_ptr<Kernel> parse(const std::string& text);
};

using KernelPtr = std::unique_ptr<Kernel>;

// k = sigma^2 exp(-d^2 / (2 l^2))
KernelPtr make_se(double sigma, double length, bool train_sigma = true);
// k = sigma^2 (1 + d^2 / (2 a l^2))^-a
KernelPtr make_rq(double sigma, double alpha, double length, bool train_sigma = true);
// k = sigma^2 exp(-2 sin^2(pi d / p) / l^2); the period is frozen by default.
KernelPtr make_sp(double sigma, double period, double length, bool train_sigma = true,
                  bool train_period = false);
KernelPtr make_sum(KernelPtr a, KernelPtr b);
KernelPtr make_product(KernelPtr a, KernelPtr b);

// RQ x SP with sigma = sigma_RQ * sigma_SP on the SP factor, unit RQ scale,
// and the period frozen at `period` hours.
KernelPtr make_quasi_periodic(double sigma, double period, double len_sp,
                              double alpha_rq, double len_rq);

}  // namespace ppg
