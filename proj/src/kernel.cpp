#include "ppg/kernel.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ppg {

using nlohmann::json;

double Kernel::operator()(double x, double xhat) const {
    double v = eval(x, xhat);
    if (!std::isfinite(v))
        throw std::runtime_error("kernel evaluation is not finite (pathological hyperparameters)");
    return v;
}

std::vector<HyperParam*> Kernel::trainable_params() {
    std::vector<HyperParam*> all;
    collect_params(all);
    std::vector<HyperParam*> out;
    for (auto* p : all)
        if (p->trainable) out.push_back(p);
    return out;
}

void Kernel::validate() const {
    std::vector<HyperParam*> all;
    const_cast<Kernel*>(this)->collect_params(all);
    for (auto* p : all)
        if (!(p->value > 0) || !std::isfinite(p->value))
            throw std::invalid_argument("kernel hyperparameter '" + p->name + "' must be > 0");
}

namespace {

class SeKernel final : public Kernel {
   public:
    HyperParam sigma{"sigma_se", 1.0, true};
    HyperParam length{"len_se", 1.0, true};

    double eval(double x, double xhat) const override {
        double d = x - xhat;
        return sigma.value * sigma.value *
               std::exp(-d * d / (2.0 * length.value * length.value));
    }
    std::unique_ptr<Kernel> clone() const override { return std::make_unique<SeKernel>(*this); }
    void collect_params(std::vector<HyperParam*>& out) override {
        out.push_back(&sigma);
        out.push_back(&length);
    }
    json to_json() const override {
        return {{"type", "se"},
                {"sigma", sigma.value},
                {"length", length.value},
                {"train_sigma", sigma.trainable}};
    }
};

class RqKernel final : public Kernel {
   public:
    HyperParam sigma{"sigma_rq", 1.0, true};
    HyperParam alpha{"alpha_rq", 1.0, true};
    HyperParam length{"len_rq", 1.0, true};

    double eval(double x, double xhat) const override {
        double d = x - xhat;
        double base = 1.0 + d * d / (2.0 * alpha.value * length.value * length.value);
        return sigma.value * sigma.value * std::pow(base, -alpha.value);
    }
    std::unique_ptr<Kernel> clone() const override { return std::make_unique<RqKernel>(*this); }
    void collect_params(std::vector<HyperParam*>& out) override {
        out.push_back(&sigma);
        out.push_back(&alpha);
        out.push_back(&length);
    }
    json to_json() const override {
        return {{"type", "rq"},
                {"sigma", sigma.value},
                {"alpha", alpha.value},
                {"length", length.value},
                {"train_sigma", sigma.trainable}};
    }
};

class SpKernel final : public Kernel {
   public:
    HyperParam sigma{"sigma_sp", 1.0, true};
    HyperParam period{"period_sp", 24.0, false};
    HyperParam length{"len_sp", 1.0, true};

    double eval(double x, double xhat) const override {
        double d = std::abs(x - xhat);
        double s = std::sin(M_PI * d / period.value);
        return sigma.value * sigma.value *
               std::exp(-2.0 * s * s / (length.value * length.value));
    }
    std::unique_ptr<Kernel> clone() const override { return std::make_unique<SpKernel>(*this); }
    void collect_params(std::vector<HyperParam*>& out) override {
        out.push_back(&sigma);
        out.push_back(&period);
        out.push_back(&length);
    }
    json to_json() const override {
        return {{"type", "sp"},
                {"sigma", sigma.value},
                {"period", period.value},
                {"length", length.value},
                {"train_sigma", sigma.trainable},
                {"train_period", period.trainable}};
    }
};

class PairKernel : public Kernel {
   public:
    PairKernel(KernelPtr a, KernelPtr b) : left_(std::move(a)), right_(std::move(b)) {
        if (!left_ || !right_) throw std::invalid_argument("composite kernel needs two children");
    }
    PairKernel(const PairKernel& o) : left_(o.left_->clone()), right_(o.right_->clone()) {}
    void collect_params(std::vector<HyperParam*>& out) override {
        left_->collect_params(out);
        right_->collect_params(out);
    }

   protected:
    KernelPtr left_, right_;
};

class SumKernel final : public PairKernel {
   public:
    using PairKernel::PairKernel;
    double eval(double x, double xhat) const override {
        return left_->eval(x, xhat) + right_->eval(x, xhat);
    }
    std::unique_ptr<Kernel> clone() const override { return std::make_unique<SumKernel>(*this); }
    json to_json() const override {
        return {{"type", "sum"}, {"children", json::array({left_->to_json(), right_->to_json()})}};
    }
};

class ProductKernel final : public PairKernel {
   public:
    using PairKernel::PairKernel;
    double eval(double x, double xhat) const override {
        return left_->eval(x, xhat) * right_->eval(x, xhat);
    }
    std::unique_ptr<Kernel> clone() const override { return std::make_unique<ProductKernel>(*this); }
    json to_json() const override {
        return {{"type", "product"},
                {"children", json::array({left_->to_json(), right_->to_json()})}};
    }
};

}  // namespace

KernelPtr make_se(double sigma, double length, bool train_sigma) {
    auto k = std::make_unique<SeKernel>();
    k->sigma.value = sigma;
    k->sigma.trainable = train_sigma;
    k->length.value = length;
    k->validate();
    return k;
}

KernelPtr make_rq(double sigma, double alpha, double length, bool train_sigma) {
    auto k = std::make_unique<RqKernel>();
    k->sigma.value = sigma;
    k->sigma.trainable = train_sigma;
    k->alpha.value = alpha;
    k->length.value = length;
    k->validate();
    return k;
}

KernelPtr make_sp(double sigma, double period, double length, bool train_sigma,
                  bool train_period) {
    auto k = std::make_unique<SpKernel>();
    k->sigma.value = sigma;
    k->sigma.trainable = train_sigma;
    k->period.value = period;
    k->period.trainable = train_period;
    k->length.value = length;
    k->validate();
    return k;
}

KernelPtr make_sum(KernelPtr a, KernelPtr b) {
    return std::make_unique<SumKernel>(std::move(a), std::move(b));
}

KernelPtr make_product(KernelPtr a, KernelPtr b) {
    return std::make_unique<ProductKernel>(std::move(a), std::move(b));
}

KernelPtr make_quasi_periodic(double sigma, double period, double len_sp,
                              double alpha_rq, double len_rq) {
    return make_product(make_rq(1.0, alpha_rq, len_rq, /*train_sigma=*/false),
                        make_sp(sigma, period, len_sp, /*train_sigma=*/false));
}

KernelPtr Kernel::from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "se")
        return make_se(j.value("sigma", 1.0), j.at("length").get<double>(),
                       j.value("train_sigma", true));
    if (type == "rq")
        return make_rq(j.value("sigma", 1.0), j.at("alpha").get<double>(),
                       j.at("length").get<double>(), j.value("train_sigma", true));
    if (type == "sp")
        return make_sp(j.value("sigma", 1.0), j.value("period", 24.0),
                       j.at("length").get<double>(), j.value("train_sigma", true),
                       j.value("train_period", false));
    if (type == "sum" || type == "product") {
        const auto& ch = j.at("children");
        if (ch.size() != 2)
            throw std::invalid_argument("composite kernel nodes take exactly two children");
        auto a = from_json(ch[0]);
        auto b = from_json(ch[1]);
        return type == "sum" ? make_sum(std::move(a), std::move(b))
                             : make_product(std::move(a), std::move(b));
    }
    throw std::invalid_argument("unknown kernel type '" + type + "'");
}

KernelPtr Kernel::parse(const std::string& text) { return from_json(json::parse(text)); }

}  // namespace ppg
