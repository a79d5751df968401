#include "ppg/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>

#include "ppg/hungarian.hpp"

namespace ppg {

AllocationProblem build_problem(const std::vector<double>& actions, const PpgTopology& topo,
                                double beta, double energy_scale) {
    if (beta < 0 || beta > 1) throw std::invalid_argument("build_problem: beta must be in [0,1]");
    if (static_cast<int>(actions.size()) != topo.num_nodes())
        throw std::invalid_argument("build_problem: actions size != node count");

    AllocationProblem p;
    p.beta = beta;
    p.energy_scale = energy_scale;
    std::vector<double> offers, demands;
    for (int n = 0; n < topo.num_nodes(); ++n) {
        if (n == topo.router) continue;
        if (actions[n] < 0) {
            p.source_ids.push_back(n);
            offers.push_back(-actions[n]);
        } else if (actions[n] > 0) {
            p.consumer_ids.push_back(n);
            demands.push_back(actions[n]);
        }
    }
    const int I = p.num_sources(), J = p.num_consumers();
    p.offers = Eigen::Map<Eigen::VectorXd>(offers.data(), I);
    p.demands = Eigen::Map<Eigen::VectorXd>(demands.data(), J);
    p.hops.resize(I, J);
    p.avail.resize(I, J);
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j) {
            Route r = unique_route(topo, p.source_ids[i], p.consumer_ids[j]);
            if (r.hops() < 1)
                throw std::logic_error("build_problem: zero-hop route between distinct BSs");
            p.hops(i, j) = r.hops();
            p.avail(i, j) = p.offers[i] * attenuation(topo, r.hops());
        }
    return p;
}

double allocation_objective(const AllocationProblem& p, const AllocationMatrix& y) {
    const int I = p.num_sources(), J = p.num_consumers();
    const double s = p.energy_scale;
    double f1 = 0.0;
    for (int j = 0; j < J; ++j) {
        double delivered = 0.0;
        for (int i = 0; i < I; ++i) delivered += y(i, j) * p.avail(i, j);
        double diff = (delivered - p.demands[j]) / s;
        f1 += diff * diff;
    }
    double f2 = 0.0;
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j) f2 -= std::exp(y(i, j) / p.hops(i, j));
    return p.beta * f1 + (1.0 - p.beta) * f2;
}

bool allocation_feasible(const AllocationProblem& p, const AllocationMatrix& y, double tol) {
    if (y.rows() != p.num_sources() || y.cols() != p.num_consumers()) return false;
    for (int i = 0; i < y.rows(); ++i) {
        double row = 0.0;
        for (int j = 0; j < y.cols(); ++j) {
            if (y(i, j) < -tol || y(i, j) > 1.0 + tol) return false;
            row += y(i, j);
        }
        if (row > 1.0 + tol) return false;
    }
    return true;
}

namespace {

// Euclidean projection of one row onto {0 <= y <= 1, sum(y) <= 1}.
void project_row(Eigen::RowVectorXd& row) {
    for (int j = 0; j < row.size(); ++j) row[j] = std::clamp(row[j], 0.0, 1.0);
    double sum = row.sum();
    if (sum <= 1.0) return;
    // Bisection on the shift tau so that sum(clip(y - tau, 0, 1)) = 1.
    double lo = 0.0, hi = row.maxCoeff();
    for (int it = 0; it < 100; ++it) {
        double tau = 0.5 * (lo + hi);
        double s = 0.0;
        for (int j = 0; j < row.size(); ++j) s += std::clamp(row[j] - tau, 0.0, 1.0);
        (s > 1.0 ? lo : hi) = tau;
    }
    double tau = 0.5 * (lo + hi);
    for (int j = 0; j < row.size(); ++j) row[j] = std::clamp(row[j] - tau, 0.0, 1.0);
}

void project(AllocationMatrix& y) {
    for (int i = 0; i < y.rows(); ++i) {
        Eigen::RowVectorXd row = y.row(i);
        project_row(row);
        y.row(i) = row;
    }
}

AllocationMatrix gradient(const AllocationProblem& p, const AllocationMatrix& y) {
    const int I = p.num_sources(), J = p.num_consumers();
    const double s2 = p.energy_scale * p.energy_scale;
    AllocationMatrix g(I, J);
    Eigen::VectorXd resid(J);
    for (int j = 0; j < J; ++j) {
        double delivered = 0.0;
        for (int i = 0; i < I; ++i) delivered += y(i, j) * p.avail(i, j);
        resid[j] = delivered - p.demands[j];
    }
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j)
            g(i, j) = 2.0 * p.beta * p.avail(i, j) * resid[j] / s2 -
                      (1.0 - p.beta) * std::exp(y(i, j) / p.hops(i, j)) / p.hops(i, j);
    return g;
}

AllocationMatrix descend(const AllocationProblem& p, AllocationMatrix y,
                         const ConvexSolveOptions& opt) {
    project(y);
    double f = allocation_objective(p, y);
    double step = 0.5;
    int stalled = 0;
    for (int it = 0; it < opt.max_iters; ++it) {
        AllocationMatrix g = gradient(p, y);
        bool moved = false;
        double s = step;
        for (int tries = 0; tries < 40; ++tries) {
            AllocationMatrix cand = y - s * g;
            project(cand);
            double fc = allocation_objective(p, cand);
            if (fc < f - 1e-15) {
                double delta = (cand - y).cwiseAbs().maxCoeff();
                double gain = f - fc;
                y = std::move(cand);
                f = fc;
                moved = true;
                step = std::min(4.0, s * 2.0);
                if (delta < opt.tol) return y;
                stalled = gain < 1e-12 * (1.0 + std::abs(f)) ? stalled + 1 : 0;
                break;
            }
            s *= 0.5;
        }
        if (!moved || stalled >= 5) break;
    }
    return y;
}

// Global 1-D minimization of a smooth objective slice over [tlo, thi]:
// coarse scan, then golden-section refinement around the best sample.
double segment_min(const std::function<double(double)>& f, double tlo, double thi) {
    const int K = 32;
    double best_t = 0.0, best_f = f(0.0);
    for (int k = 0; k <= K; ++k) {
        double t = tlo + (thi - tlo) * k / K;
        double v = f(t);
        if (v < best_f) {
            best_f = v;
            best_t = t;
        }
    }
    double cell = (thi - tlo) / K;
    double a = std::max(tlo, best_t - cell), b = std::min(thi, best_t + cell);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    double mid = 0.5 * (a + b), fm = f(mid);
    return fm < best_f ? mid : best_t;
}

// Coordinate polish: exact 1-D searches along single entries and along
// mass-preserving column pairs of each row. The projected gradient can stall
// at points that are stationary on a simplex face yet not minimal along these
// segments (the route term is concave), so this pass escapes them.
void polish_rows(const AllocationProblem& p, AllocationMatrix& y) {
    const int I = p.num_sources(), J = p.num_consumers();
    const double s2 = p.energy_scale * p.energy_scale;
    Eigen::VectorXd delivered = Eigen::VectorXd::Zero(J);
    for (int j = 0; j < J; ++j)
        for (int i = 0; i < I; ++i) delivered[j] += y(i, j) * p.avail(i, j);

    auto col_delta = [&](int j, double de) {
        double r0 = delivered[j] - p.demands[j];
        double r1 = r0 + de;
        return p.beta * (r1 * r1 - r0 * r0) / s2;
    };
    auto exp_delta = [&](int i, int j, double dy) {
        return -(1.0 - p.beta) *
               (std::exp((y(i, j) + dy) / p.hops(i, j)) - std::exp(y(i, j) / p.hops(i, j)));
    };

    for (int sweep = 0; sweep < 50; ++sweep) {
        double gain = 0.0;
        for (int i = 0; i < I; ++i) {
            double row = y.row(i).sum();
            for (int j = 0; j < J; ++j) {
                double tlo = -y(i, j);
                double thi = std::min(1.0 - y(i, j), 1.0 - row);
                if (thi - tlo < 1e-12) continue;
                auto f = [&](double t) {
                    return col_delta(j, t * p.avail(i, j)) + exp_delta(i, j, t);
                };
                double t = segment_min(f, tlo, thi);
                double v = f(t);
                if (v < -1e-14) {
                    delivered[j] += t * p.avail(i, j);
                    y(i, j) += t;
                    row += t;
                    gain -= v;
                }
            }
            for (int j = 0; j < J; ++j)
                for (int k = j + 1; k < J; ++k) {
                    double tlo = std::max(-y(i, j), y(i, k) - 1.0);
                    double thi = std::min(1.0 - y(i, j), y(i, k));
                    if (thi - tlo < 1e-12) continue;
                    auto f = [&](double t) {
                        return col_delta(j, t * p.avail(i, j)) +
                               col_delta(k, -t * p.avail(i, k)) + exp_delta(i, j, t) +
                               exp_delta(i, k, -t);
                    };
                    double t = segment_min(f, tlo, thi);
                    double v = f(t);
                    if (v < -1e-14) {
                        delivered[j] += t * p.avail(i, j);
                        delivered[k] -= t * p.avail(i, k);
                        y(i, j) += t;
                        y(i, k) -= t;
                        gain -= v;
                    }
                }
        }
        if (gain < 1e-13) break;
    }
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j) y(i, j) = std::clamp(y(i, j), 0.0, 1.0);
}

AllocationMatrix greedy_fill(const AllocationProblem& p) {
    const int I = p.num_sources(), J = p.num_consumers();
    AllocationMatrix y = AllocationMatrix::Zero(I, J);
    Eigen::VectorXd row_used = Eigen::VectorXd::Zero(I);
    for (int j = 0; j < J; ++j) {
        double remaining = p.demands[j];
        std::vector<int> order(I);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return p.avail(a, j) > p.avail(b, j); });
        for (int i : order) {
            if (remaining <= 0 || p.avail(i, j) <= 0) break;
            double frac = std::min({1.0 - row_used[i], remaining / p.avail(i, j), 1.0});
            if (frac <= 0) continue;
            y(i, j) = frac;
            row_used[i] += frac;
            remaining -= frac * p.avail(i, j);
        }
    }
    return y;
}

}  // namespace

AllocationMatrix solve_convex(const AllocationProblem& p, const ConvexSolveOptions& opt) {
    const int I = p.num_sources(), J = p.num_consumers();
    if (I < 1 || J < 1) throw std::invalid_argument("solve_convex: empty problem");

    std::vector<AllocationMatrix> starts;
    starts.push_back(AllocationMatrix::Zero(I, J));
    starts.push_back(AllocationMatrix::Constant(I, J, 1.0 / J));
    starts.push_back(greedy_fill(p));
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int r = 0; r < opt.random_starts; ++r) {
        AllocationMatrix y(I, J);
        for (int i = 0; i < I; ++i)
            for (int j = 0; j < J; ++j) y(i, j) = uni(rng);
        project(y);
        starts.push_back(std::move(y));
    }

    AllocationMatrix best;
    double best_f = std::numeric_limits<double>::infinity();
    for (auto& s : starts) {
        AllocationMatrix y = descend(p, s, opt);
        double f = allocation_objective(p, y);
        if (f < best_f) {
            best_f = f;
            best = y;
        }
    }
    polish_rows(p, best);
    return best;
}

Eigen::MatrixXd build_cost_matrix(const AllocationProblem& p) {
    const int I = p.num_sources(), J = p.num_consumers();
    if (I < 1 || J < 1) throw std::invalid_argument("build_cost_matrix: empty problem");
    const int A = std::max(I, J);
    const double s = p.energy_scale;
    Eigen::MatrixXd c(A, A);
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j) {
            double diff = (p.avail(i, j) - p.demands[j]) / s;
            c(i, j) = p.beta * diff * diff -
                      (1.0 - p.beta) * std::exp(1.0 / p.hops(i, j));
            mx = std::max(mx, c(i, j));
        }
    for (int i = 0; i < A; ++i)
        for (int j = 0; j < A; ++j)
            if (i >= I || j >= J) c(i, j) = mx;
    return c;
}

std::vector<std::pair<int, int>> solve_assignment(const AllocationProblem& p) {
    Eigen::MatrixXd c = build_cost_matrix(p);
    std::vector<int> a = hungarian(c);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < p.num_sources(); ++i)
        if (a[i] >= 0 && a[i] < p.num_consumers()) pairs.emplace_back(i, a[i]);
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

AllocationMatrix assignment_to_allocation(const std::vector<std::pair<int, int>>& assignment,
                                          const AllocationProblem& p) {
    AllocationMatrix y = AllocationMatrix::Zero(p.num_sources(), p.num_consumers());
    for (auto [i, j] : assignment) {
        if (i < 0 || i >= p.num_sources() || j < 0 || j >= p.num_consumers())
            throw std::invalid_argument("assignment_to_allocation: pair out of range");
        if (p.avail(i, j) > 0) y(i, j) = std::min(1.0, p.demands[j] / p.avail(i, j));
    }
    return y;
}

}  // namespace ppg
