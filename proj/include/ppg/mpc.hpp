#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "ppg/gp.hpp"
#include "ppg/qp.hpp"

namespace ppg {

struct MpcConfig {
    int horizon = 24;      // M slots
    double alpha = 0.5;    // weight between transfer cost and B_ref tracking
    double b_ref = 180e3;
    double b_low = 36e3;
    double b_max = 360e3;
    double b_up = 0.0;           // refill level for replenished BSs (0 = none)
    double backoff_c = 0.0;      // safety back-off on B_low, in std units
    double soft_weight = 1e3;    // quadratic penalty scale for softened state bounds

    void validate() const;
};

// Per-horizon means/variances of w_kn = H_n(k) - O_n(k), one column per BS.
struct DisturbanceForecast {
    Eigen::MatrixXd mean;  // M x n
    Eigen::MatrixXd var;   // M x n

    int horizon() const { return static_cast<int>(mean.rows()); }
    int num_bs() const { return static_cast<int>(mean.cols()); }
    void append_bs(const Eigen::VectorXd& m, const Eigen::VectorXd& v);
};

// H and O forecasts over the same horizon, independent processes.
DisturbanceForecast make_disturbance(const Forecast& h_forecast, const Forecast& o_forecast);

// u_kn > 0: BS n receives energy in slot k; u_kn < 0: it provides.
struct ControlPlan {
    Eigen::MatrixXd u;  // M x n
};

// Which BSs the grid tops back up to B_up each slot, and how much purchase
// budget they have. Stage 0 of the horizon is the current slot, whose
// purchase has already happened; refills are modelled from stage 1 on,
// drawing down remaining_today until the daily cap resets at midnight.
struct GridRefill {
    std::vector<bool> replenished;    // per BS; empty = none
    Eigen::VectorXd remaining_today;  // per BS, joules; empty = unlimited
    double daily_cap = std::numeric_limits<double>::infinity();
    int first_hour = 0;  // hour-of-day of stage 0
};

// Certainty-equivalent QP over the mean buffer dynamics
// z_{k+1} = z_k + u_k + w_k, decoupled per BS. A "replenished" BS is topped
// back to B_up by grid purchases every slot, so its controls do not propagate:
// z_k = znom_k + u_k with znom following the refill nominal.
struct HorizonQp {
    MpcConfig cfg;
    Eigen::VectorXd z0;       // measured buffers, n
    Eigen::MatrixXd wbar;     // M x n
    Eigen::MatrixXd umin;     // M x n control bounds from the nominal trajectory
    Eigen::MatrixXd umax;
    Eigen::MatrixXd zlo;      // M x n state floor (B_low plus back-off)
    Eigen::MatrixXd znom;     // M x n nominal (u = 0) state, refill applied
    std::vector<bool> softened;     // per BS: state box penalized instead of hard
    std::vector<bool> replenished;  // per BS: per-stage refill dynamics

    int horizon() const { return static_cast<int>(wbar.rows()); }
    int num_bs() const { return static_cast<int>(wbar.cols()); }

    // Single-BS subproblem in units of B_max; slack variables appended when
    // the state box is softened.
    QpProblem bs_problem(int bs) const;
    std::string dump_text() const;
};

HorizonQp build_horizon_qp(const Eigen::VectorXd& buffers, const DisturbanceForecast& dist,
                           const MpcConfig& cfg, const GridRefill& refill = {});

ControlPlan solve_horizon(const HorizonQp& qp);

// alpha*sum(u^2) + (1-alpha)*sum((z-B_ref)^2) under the mean dynamics.
double horizon_objective(const HorizonQp& qp, const Eigen::MatrixXd& u);

// Mean buffer trajectory (M x n) implied by controls u: rows are z_1..z_M.
Eigen::MatrixXd mean_trajectory(const HorizonQp& qp, const Eigen::MatrixXd& u);

// Row 0 of the receding-horizon solution: the only control ever executed.
Eigen::VectorXd mpc_step(const Eigen::VectorXd& buffers, const DisturbanceForecast& dist,
                         const MpcConfig& cfg, const GridRefill& refill = {});

}  // namespace ppg
