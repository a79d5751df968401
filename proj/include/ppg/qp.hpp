#pragma once

#include <string>

#include <Eigen/Dense>

namespace ppg {

// Dense convex QP:  min 1/2 x'Px + q'x  s.t.  lo <= Ax <= hi.
// P must be symmetric PSD. Box constraints on x go in as identity rows of A.
struct QpProblem {
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    Eigen::MatrixXd A;
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    int num_vars() const { return static_cast<int>(q.size()); }
    int num_constraints() const { return static_cast<int>(lo.size()); }
    double objective(const Eigen::VectorXd& x) const {
        return 0.5 * x.dot(P * x) + q.dot(x);
    }
    std::string dump_text() const;
};

struct QpSettings {
    double rho = 0.1;
    double sigma = 1e-6;
    double eps_abs = 1e-7;
    double eps_rel = 1e-7;
    int max_iters = 50000;
    bool polish = true;
};

struct QpResult {
    Eigen::VectorXd x;
    Eigen::VectorXd y;  // dual for Ax
    bool converged = false;
    int iters = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
};

// Operator-splitting (ADMM) solve with an active-set polish step. Throws on
// the iteration limit with the best iterate's residuals in the message.
QpResult solve_qp(const QpProblem& p, const QpSettings& s = {});

}  // namespace ppg
