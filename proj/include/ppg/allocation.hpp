#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ppg/grid.hpp"

namespace ppg {

// Per-slot matching of source offers to consumer demands.
struct AllocationProblem {
    std::vector<int> source_ids;    // BS node ids, size I
    std::vector<int> consumer_ids;  // size J
    Eigen::VectorXd offers;         // u_ti > 0, joules
    Eigen::VectorXd demands;        // d_j > 0, joules
    Eigen::MatrixXi hops;           // g_ij >= 1
    Eigen::MatrixXd avail;          // e_ij = offer_i * a(g_ij)
    double beta = 0.5;
    // Energies are expressed in these units inside the objectives so the
    // quadratic and route terms are commensurate; defaults to B_max upstream.
    double energy_scale = 1.0;

    int num_sources() const { return static_cast<int>(source_ids.size()); }
    int num_consumers() const { return static_cast<int>(consumer_ids.size()); }
    bool empty() const { return num_sources() == 0 || num_consumers() == 0; }
};

// Per-BS current-slot amounts: positive = consumer demand, negative = source
// offer, zero = idle. Indexed by BS node id.
AllocationProblem build_problem(const std::vector<double>& actions, const PpgTopology& topo,
                                double beta, double energy_scale = 1.0);

// Y: I x J fractions with 0 <= y_ij <= 1 and row sums <= 1.
using AllocationMatrix = Eigen::MatrixXd;

// beta * sum_j((sum_i y e - d)/scale)^2 + (1-beta) * sum_ij -exp(y/g)
double allocation_objective(const AllocationProblem& p, const AllocationMatrix& y);

bool allocation_feasible(const AllocationProblem& p, const AllocationMatrix& y,
                         double tol = 1e-9);

struct ConvexSolveOptions {
    int random_starts = 16;
    std::uint64_t seed = 12345;
    int max_iters = 2000;
    double tol = 1e-10;
};

// Multi-start projected descent (deterministic starts: zero, uniform, greedy
// demand-fill, plus seeded random starts). The route term is concave, so the
// contract is dominance over sampled feasible points, not global optimality.
AllocationMatrix solve_convex(const AllocationProblem& p, const ConvexSolveOptions& opt = {});

// Eq-style Hungarian cost: beta((e-d)/scale)^2 - (1-beta)exp(1/g), padded
// square with the matrix maximum.
Eigen::MatrixXd build_cost_matrix(const AllocationProblem& p);

// Pairs (i, j) over the unpadded problem, sorted by i.
std::vector<std::pair<int, int>> solve_assignment(const AllocationProblem& p);

// y_ij = min(1, d_j / e_ij) for matched pairs, 0 elsewhere.
AllocationMatrix assignment_to_allocation(const std::vector<std::pair<int, int>>& assignment,
                                          const AllocationProblem& p);

}  // namespace ppg
