#pragma once

#include <vector>

#include <Eigen/Dense>

namespace ppg {

// Minimum-cost perfect matching on a square finite cost matrix.
// Returns assignment[row] = column; deterministic for a given input.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

double assignment_cost(const Eigen::MatrixXd& cost, const std::vector<int>& assignment);

}  // namespace ppg
