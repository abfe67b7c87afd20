// Test-only oracles, independent of the production solve paths:
//  - dense regression-matrix assembly of H and t
//  - exact 1-D total-variation prox (direct non-iterative algorithm)
//  - accelerated proximal-gradient minimizer of the same objectives
//  - plain gradient descent for the all-quadratic cost

#pragma once

#include "qus/assembly.hpp"
#include "qus/solvers.hpp"

#include <utility>

namespace qus::test {

// Materializes Q row by row from the regressors (-4 f z, 1, ln f) and the
// vectorized map Y, then forms Q' W Q and Q' W Y densely.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> dense_normal_system(const LogRatioMap& x_map,
                                                                const SpectralGrid& grid,
                                                                const Eigen::MatrixXd& weights);

// argmin_x 1/2 ||x - y||^2 + lam * sum_i |x_{i+1} - x_i|, exact.
Eigen::VectorXd tv_prox(const Eigen::VectorXd& y, double lam);

// Necessary-and-sufficient optimality check for a claimed tv_prox solution;
// returns the worst constraint violation (0 at the exact optimum).
double tv_prox_optimality_gap(const Eigen::VectorXd& y, const Eigen::VectorXd& x, double lam);

struct ProxGradResult {
    Eigen::VectorXd x;
    double objective = 0.0;
    int iterations = 0;
};

// FISTA with function-value restart on
//   data(x) + lambda (w_a TV(a) + w_b TV(b) + w_n TV(n))          (all-L1)
ProxGradResult prox_grad_l1(const NormalSystem& sys, const PenaltyOperator& penalty, double lambda,
                            DataMode mode, int max_iter = 1000000, double tol = 1e-14);

// ... and on
//   data(x) + lambda1 ||w_a B a||^2 + lambda2 (w_b TV(b) + w_n TV(n))  (mixed)
ProxGradResult prox_grad_l1l2(const NormalSystem& sys, const PenaltyOperator& penalty, double lambda1,
                              double lambda2, DataMode mode, int max_iter = 1000000, double tol = 1e-14);

// Fixed-step gradient descent on the all-quadratic cost, run to a target
// gradient norm.
Eigen::VectorXd grad_descent_l2l2(const NormalSystem& sys, const PenaltyOperator& penalty, double lam,
                                  DataMode mode, double grad_tol = 1e-10, int max_iter = 5000000);

}  // namespace qus::test
