#include "ppg/qp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace ppg {

std::string QpProblem::dump_text() const {
    std::ostringstream os;
    os << "qp vars=" << num_vars() << " constraints=" << num_constraints() << "\n";
    os << "P\n" << P << "\nq\n" << q.transpose() << "\nA\n" << A << "\nlo\n"
       << lo.transpose() << "\nhi\n" << hi.transpose() << "\n";
    return os.str();
}

namespace {

void residuals(const QpProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& z,
               const Eigen::VectorXd& y, double& rp, double& rd) {
    rp = p.num_constraints() ? (p.A * x - z).lpNorm<Eigen::Infinity>() : 0.0;
    Eigen::VectorXd d = p.P * x + p.q;
    if (p.num_constraints()) d += p.A.transpose() * y;
    rd = d.lpNorm<Eigen::Infinity>();
}

bool try_polish(const QpProblem& p, const QpSettings& s, QpResult& r) {
    const int n = p.num_vars();
    const int m = p.num_constraints();
    std::vector<int> act;
    std::vector<double> actb;
    Eigen::VectorXd z = p.A * r.x;
    for (int i = 0; i < m; ++i) {
        const double tol = 1e-7 * std::max(1.0, std::abs(p.hi[i]) + std::abs(p.lo[i]));
        if (r.y[i] < -s.eps_abs || z[i] <= p.lo[i] + tol) {
            if (z[i] - p.lo[i] < p.hi[i] - z[i]) {
                act.push_back(i);
                actb.push_back(p.lo[i]);
                continue;
            }
        }
        if (r.y[i] > s.eps_abs || z[i] >= p.hi[i] - tol) {
            act.push_back(i);
            actb.push_back(p.hi[i]);
        }
    }
    const int k = static_cast<int>(act.size());
    Eigen::MatrixXd M(n + k, n + k);
    M.setZero();
    M.topLeftCorner(n, n) = p.P;
    M.topLeftCorner(n, n).diagonal().array() += 1e-12;
    Eigen::VectorXd rhs(n + k);
    rhs.head(n) = -p.q;
    for (int j = 0; j < k; ++j) {
        M.block(n + j, 0, 1, n) = p.A.row(act[j]);
        M.block(0, n + j, n, 1) = p.A.row(act[j]).transpose();
        M(n + j, n + j) = -1e-12;
        rhs[n + j] = actb[j];
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    if (ldlt.info() != Eigen::Success) return false;
    Eigen::VectorXd sol = ldlt.solve(rhs);
    Eigen::VectorXd x = sol.head(n);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < k; ++j) y[act[j]] = sol[n + j];

    // Accept only if the polished point is feasible and no worse.
    Eigen::VectorXd zx = p.A * x;
    for (int i = 0; i < m; ++i) {
        const double tol = 1e-8 * std::max(1.0, std::abs(p.hi[i]) + std::abs(p.lo[i]));
        if (zx[i] < p.lo[i] - tol || zx[i] > p.hi[i] + tol) return false;
    }
    double rp, rd;
    residuals(p, x, zx.cwiseMax(p.lo).cwiseMin(p.hi), y, rp, rd);
    if (rp <= r.primal_residual + 1e-12 && rd <= r.dual_residual + 1e-12) {
        r.x = x;
        r.y = y;
        r.primal_residual = rp;
        r.dual_residual = rd;
        return true;
    }
    return false;
}

}  // namespace

QpResult solve_qp(const QpProblem& p, const QpSettings& s) {
    const int n = p.num_vars();
    const int m = p.num_constraints();
    if (p.P.rows() != n || p.P.cols() != n || p.A.rows() != m || (m && p.A.cols() != n) ||
        p.hi.size() != m)
        throw std::invalid_argument("solve_qp: inconsistent problem dimensions");
    for (int i = 0; i < m; ++i)
        if (p.lo[i] > p.hi[i]) throw std::invalid_argument("solve_qp: lo > hi");

    QpResult r;
    if (m == 0) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(p.P);
        if (ldlt.info() != Eigen::Success)
            throw std::runtime_error("solve_qp: unconstrained problem is not PD");
        r.x = ldlt.solve(-p.q);
        r.y.resize(0);
        r.converged = true;
        residuals(p, r.x, Eigen::VectorXd(), r.y, r.primal_residual, r.dual_residual);
        return r;
    }

    double rho = s.rho;
    Eigen::MatrixXd M(n + m, n + m);
    M.setZero();
    M.topLeftCorner(n, n) = p.P;
    M.topLeftCorner(n, n).diagonal().array() += s.sigma;
    M.topRightCorner(n, m) = p.A.transpose();
    M.bottomLeftCorner(m, n) = p.A;
    Eigen::LDLT<Eigen::MatrixXd> kkt;
    auto factorize = [&]() {
        M.bottomRightCorner(m, m).diagonal().setConstant(-1.0 / rho);
        kkt.compute(M);
        if (kkt.info() != Eigen::Success)
            throw std::runtime_error("solve_qp: KKT factorization failed");
    };
    factorize();

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(m).cwiseMax(p.lo).cwiseMin(p.hi);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    const double relax = 1.6;

    Eigen::VectorXd rhs(n + m), sol(n + m);
    for (int it = 1; it <= s.max_iters; ++it) {
        rhs.head(n) = s.sigma * x - p.q;
        rhs.tail(m) = z - y / rho;
        sol = kkt.solve(rhs);
        Eigen::VectorXd xt = sol.head(n);
        Eigen::VectorXd zt = z + (sol.tail(m) - y) / rho;

        x = relax * xt + (1.0 - relax) * x;
        Eigen::VectorXd z_prev = z;
        Eigen::VectorXd zr = relax * zt + (1.0 - relax) * z_prev;
        z = (zr + y / rho).cwiseMax(p.lo).cwiseMin(p.hi);
        y += rho * (zr - z);

        if (it % 10 == 0 || it == s.max_iters) {
            double rp, rd;
            residuals(p, x, z, y, rp, rd);
            double pri_scale = std::max({1.0, (p.A * x).lpNorm<Eigen::Infinity>(),
                                         z.lpNorm<Eigen::Infinity>()});
            double dua_scale = std::max({1.0, (p.P * x).lpNorm<Eigen::Infinity>(),
                                         p.q.lpNorm<Eigen::Infinity>(),
                                         (p.A.transpose() * y).lpNorm<Eigen::Infinity>()});
            if (rp <= s.eps_abs + s.eps_rel * pri_scale &&
                rd <= s.eps_abs + s.eps_rel * dua_scale) {
                r.x = x;
                r.y = y;
                r.converged = true;
                r.iters = it;
                r.primal_residual = rp;
                r.dual_residual = rd;
                if (s.polish) try_polish(p, s, r);
                return r;
            }
            // Residual balancing: scale rho toward whichever residual lags,
            // re-factorizing the KKT system when it moves materially.
            if (it % 25 == 0) {
                double ratio = (rp / pri_scale) / std::max(rd / dua_scale, 1e-16);
                if (ratio > 5.0 || ratio < 0.2) {
                    rho = std::clamp(rho * std::sqrt(ratio), 1e-6, 1e6);
                    factorize();
                }
            }
        }
    }
    double rp, rd;
    residuals(p, x, z, y, rp, rd);
    std::ostringstream os;
    os << "solve_qp: iteration limit reached (primal residual " << rp << ", dual residual "
       << rd << ")";
    throw std::runtime_error(os.str());
}

}  // namespace ppg
