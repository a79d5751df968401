#include "ppg/mpc.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ppg {

namespace {
constexpr double kBig = 1e20;
}

void MpcConfig::validate() const {
    if (horizon < 1) throw std::invalid_argument("MpcConfig: horizon must be >= 1");
    if (alpha < 0 || alpha > 1) throw std::invalid_argument("MpcConfig: alpha must be in [0,1]");
    if (!(0 < b_low && b_low < b_ref && b_ref < b_max))
        throw std::invalid_argument("MpcConfig: need 0 < B_low < B_ref < B_max");
}

void DisturbanceForecast::append_bs(const Eigen::VectorXd& m, const Eigen::VectorXd& v) {
    if (m.size() != v.size()) throw std::invalid_argument("disturbance mean/var size mismatch");
    if (mean.size() == 0) {
        mean.resize(m.size(), 1);
        var.resize(m.size(), 1);
        mean.col(0) = m;
        var.col(0) = v;
        return;
    }
    if (m.size() != mean.rows()) throw std::invalid_argument("disturbance horizon mismatch");
    mean.conservativeResize(Eigen::NoChange, mean.cols() + 1);
    var.conservativeResize(Eigen::NoChange, var.cols() + 1);
    mean.col(mean.cols() - 1) = m;
    var.col(var.cols() - 1) = v;
}

DisturbanceForecast make_disturbance(const Forecast& h_forecast, const Forecast& o_forecast) {
    if (h_forecast.horizon() != o_forecast.horizon())
        throw std::invalid_argument("make_disturbance: horizon mismatch");
    DisturbanceForecast d;
    d.append_bs(h_forecast.mean - o_forecast.mean,
                h_forecast.variances() + o_forecast.variances());
    return d;
}

HorizonQp build_horizon_qp(const Eigen::VectorXd& buffers, const DisturbanceForecast& dist,
                           const MpcConfig& cfg, const GridRefill& refill) {
    cfg.validate();
    const int M = cfg.horizon;
    const int n = dist.num_bs();
    if (dist.horizon() != M)
        throw std::invalid_argument("build_horizon_qp: disturbance horizon != config horizon");
    if (buffers.size() != n)
        throw std::invalid_argument("build_horizon_qp: buffer count != disturbance BS count");
    if (!refill.replenished.empty() && static_cast<int>(refill.replenished.size()) != n)
        throw std::invalid_argument("build_horizon_qp: replenished flag count != BS count");
    if (refill.remaining_today.size() && refill.remaining_today.size() != n)
        throw std::invalid_argument("build_horizon_qp: remaining_today size != BS count");

    HorizonQp qp;
    qp.cfg = cfg;
    qp.z0 = buffers;
    qp.wbar = dist.mean;
    qp.umin.resize(M, n);
    qp.umax.resize(M, n);
    qp.zlo.resize(M, n);
    qp.znom.resize(M, n);
    qp.softened.assign(n, false);
    qp.replenished.assign(n, false);
    for (int bs = 0; bs < n && !refill.replenished.empty(); ++bs)
        qp.replenished[bs] = refill.replenished[bs];

    for (int bs = 0; bs < n; ++bs) {
        const bool rep = qp.replenished[bs];
        // Nominal (u = 0) trajectory, clamped to the physical buffer range,
        // fixes the per-stage control bounds: a consumer may receive at most
        // B_ref - z and a source may give at most its surplus above B_ref.
        // Replenished BSs are topped back toward B_up at every slot start,
        // limited by the purchase budget; stage 0's purchase already happened.
        double z = buffers[bs];
        double cumvar = 0.0;
        double rem = refill.remaining_today.size() ? refill.remaining_today[bs]
                                                   : std::numeric_limits<double>::infinity();
        for (int k = 0; k < M; ++k) {
            if (rep && k > 0) {
                if ((refill.first_hour + k) % 24 == 0) rem = refill.daily_cap;
                double theta = std::min(std::max(0.0, cfg.b_up - z), rem);
                rem -= theta;
                z += theta;
            }
            qp.umax(k, bs) = std::clamp(cfg.b_ref - z, 0.0, cfg.b_max);
            qp.umin(k, bs) = -std::max(0.0, z - cfg.b_ref);
            cumvar += dist.var(k, bs);
            qp.zlo(k, bs) = cfg.b_low + cfg.backoff_c * std::sqrt(cumvar);
            z = std::clamp(z + dist.mean(k, bs), 0.0, cfg.b_max);
            qp.znom(k, bs) = z;  // nominal end-of-stage state
        }
        if (rep) continue;  // per-stage box is always feasible

        // Exact feasibility of the state box: the control bounds do not
        // depend on the state, so the reachable set of each z_k is an
        // interval. Propagate it and soften as soon as it misses the box.
        double rlo = buffers[bs], rhi = buffers[bs];
        for (int k = 0; k < M; ++k) {
            rlo += qp.umin(k, bs) + dist.mean(k, bs);
            rhi += qp.umax(k, bs) + dist.mean(k, bs);
            rlo = std::max(rlo, qp.zlo(k, bs));
            rhi = std::min(rhi, cfg.b_max);
            if (rlo > rhi) {
                qp.softened[bs] = true;
                break;
            }
        }
    }
    return qp;
}

QpProblem HorizonQp::bs_problem(int bs) const {
    const int M = horizon();
    const double scale = cfg.b_max;  // work in units of B_max
    const double bref = cfg.b_ref / scale;

    if (replenished[bs]) {
        // Per-stage dynamics z_k = znom_k + u_k: the state rows collapse into
        // the control box and the Hessian is diagonal.
        QpProblem p;
        p.P = (2.0 * cfg.alpha + 2.0 * (1.0 - cfg.alpha)) *
              Eigen::MatrixXd::Identity(M, M);
        p.q.resize(M);
        p.A = Eigen::MatrixXd::Identity(M, M);
        p.lo.resize(M);
        p.hi.resize(M);
        for (int k = 0; k < M; ++k) {
            const double zn = znom(k, bs) / scale;
            p.q[k] = 2.0 * (1.0 - cfg.alpha) * (zn - bref);
            double hi = std::min(umax(k, bs) / scale, cfg.b_max / scale - zn);
            double lo = std::min(std::max(umin(k, bs) / scale, zlo(k, bs) / scale - zn), hi);
            p.lo[k] = lo;
            p.hi[k] = hi;
        }
        return p;
    }

    const bool soft = softened[bs];
    const int nv = soft ? 2 * M : M;

    // z_k = z0 + sum_{j<k}(u_j + w_j), k = 1..M  ->  z = z0*1 + C(u + w)
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(M, M);
    for (int k = 0; k < M; ++k)
        for (int j = 0; j <= k; ++j) C(k, j) = 1.0;

    Eigen::VectorXd w = wbar.col(bs) / scale;
    const double z0s = z0[bs] / scale;
    Eigen::VectorXd zoff = Eigen::VectorXd::Constant(M, z0s) + C * w;  // state at u=0

    QpProblem p;
    p.P = Eigen::MatrixXd::Zero(nv, nv);
    p.q = Eigen::VectorXd::Zero(nv);
    p.P.topLeftCorner(M, M) =
        2.0 * cfg.alpha * Eigen::MatrixXd::Identity(M, M) +
        2.0 * (1.0 - cfg.alpha) * C.transpose() * C;
    p.q.head(M) = 2.0 * (1.0 - cfg.alpha) * C.transpose() *
                  (zoff - Eigen::VectorXd::Constant(M, bref));
    if (soft)
        p.P.bottomRightCorner(M, M).diagonal().setConstant(
            2.0 * cfg.soft_weight * (1.0 - cfg.alpha) + 1e-9);

    // Rows: u box (M), then the hard state box (M), or for a softened BS the
    // slack-aided floor rows (M), slack-aided cap rows (M) and slack
    // positivity (M). One slack per stage serves both sides: a stage cannot
    // be below the floor and above the cap at once.
    const int nc = soft ? 4 * M : 2 * M;
    p.A = Eigen::MatrixXd::Zero(nc, nv);
    p.lo.resize(nc);
    p.hi.resize(nc);
    p.A.topLeftCorner(M, M).setIdentity();
    p.lo.head(M) = umin.col(bs) / scale;
    p.hi.head(M) = umax.col(bs) / scale;

    if (!soft) {
        p.A.block(M, 0, M, M) = C;
        for (int k = 0; k < M; ++k) {
            p.lo[M + k] = zlo(k, bs) / scale - zoff[k];
            p.hi[M + k] = cfg.b_max / scale - zoff[k];
        }
    } else {
        p.A.block(M, 0, M, M) = C;
        p.A.block(M, M, M, M).setIdentity();
        p.A.block(2 * M, 0, M, M) = C;
        p.A.block(2 * M, M, M, M) = -Eigen::MatrixXd::Identity(M, M);
        for (int k = 0; k < M; ++k) {
            p.lo[M + k] = zlo(k, bs) / scale - zoff[k];
            p.hi[M + k] = kBig;
            p.lo[2 * M + k] = -kBig;
            p.hi[2 * M + k] = cfg.b_max / scale - zoff[k];
        }
        p.A.block(3 * M, M, M, M).setIdentity();
        p.lo.tail(M).setZero();
        p.hi.tail(M).setConstant(kBig);
    }
    return p;
}

std::string HorizonQp::dump_text() const {
    std::ostringstream os;
    os << "horizon=" << horizon() << " bs=" << num_bs() << "\n";
    for (int bs = 0; bs < num_bs(); ++bs)
        os << "# bs " << bs << (softened[bs] ? " (soft floor)" : "") << "\n"
           << bs_problem(bs).dump_text();
    return os.str();
}

ControlPlan solve_horizon(const HorizonQp& qp) {
    const int M = qp.horizon();
    const int n = qp.num_bs();
    HorizonQp work = qp;
    ControlPlan plan;
    plan.u.resize(M, n);
    for (int bs = 0; bs < n; ++bs) {
        try {
            QpResult r = solve_qp(work.bs_problem(bs));
            plan.u.col(bs) = r.x.head(M) * qp.cfg.b_max;
        } catch (const std::runtime_error&) {
            // The per-side reachability checks can miss a joint floor/cap
            // conflict; fall back to the softened box once.
            if (work.softened[bs] || work.replenished[bs]) throw;
            work.softened[bs] = true;
            QpResult r = solve_qp(work.bs_problem(bs));
            plan.u.col(bs) = r.x.head(M) * qp.cfg.b_max;
        }
    }
    return plan;
}

Eigen::MatrixXd mean_trajectory(const HorizonQp& qp, const Eigen::MatrixXd& u) {
    const int M = qp.horizon();
    const int n = qp.num_bs();
    Eigen::MatrixXd z(M, n);
    for (int bs = 0; bs < n; ++bs) {
        if (qp.replenished[bs]) {
            z.col(bs) = qp.znom.col(bs) + u.col(bs);
            continue;
        }
        double zc = qp.z0[bs];
        for (int k = 0; k < M; ++k) {
            zc += u(k, bs) + qp.wbar(k, bs);
            z(k, bs) = zc;
        }
    }
    return z;
}

double horizon_objective(const HorizonQp& qp, const Eigen::MatrixXd& u) {
    Eigen::MatrixXd z = mean_trajectory(qp, u);
    double f1 = u.array().square().sum();
    double f2 = (z.array() - qp.cfg.b_ref).square().sum();
    return qp.cfg.alpha * f1 + (1.0 - qp.cfg.alpha) * f2;
}

Eigen::VectorXd mpc_step(const Eigen::VectorXd& buffers, const DisturbanceForecast& dist,
                         const MpcConfig& cfg, const GridRefill& refill) {
    HorizonQp qp = build_horizon_qp(buffers, dist, cfg, refill);
    ControlPlan plan = solve_horizon(qp);
    return plan.u.row(0).transpose();
}

}  // namespace ppg
