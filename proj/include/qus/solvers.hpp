// The four estimators over the assembled system:
//   solve_lsq    unregularized, per-depth 3x3 solves of H x = t
//   solve_l2l2   closed-form quadratic penalty baseline
//   admm_l1      L1 on all parameter differences (fused-lasso style)
//   admm_l1l2    L2 on attenuation differences, L1 on BSC differences
//
// Two data modes share the lambda = 0 minimizer:
//   paper_literal      minimize 1/2 ||H x - t||^2 (H treated as the data matrix)
//   normal_equations   minimize 1/2 x'H x - t'x   (better conditioned)

#pragma once

#include "qus/assembly.hpp"
#include "qus/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace qus {

enum class DataMode { paper_literal, normal_equations };
enum class ProxVariant { derived, paper_literal };

struct SolverConfig {
    double rho = 1.0;      // ADMM penalty
    double lambda = 0.0;   // L1 strength (admm_l1)
    double lambda1 = 0.0;  // L2 strength on attenuation block (admm_l1l2)
    double lambda2 = 0.0;  // L1 strength on BSC blocks (admm_l1l2)
    int max_iter = 5000;
    double eps_abs = 1e-6;
    double eps_rel = 1e-4;
    DataMode data_mode = DataMode::paper_literal;
    ProxVariant prox_variant = ProxVariant::derived;

    void validate() const;
};

struct SolveReport {
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    std::vector<double> objective_trace;  // one entry per iteration
    bool converged = false;
    DataMode data_mode = DataMode::paper_literal;
    Eigen::VectorXd scaled_dual;  // final y, feeds the stationarity certificate
};

// Direct solve of H x = t. Throws on singular or ill-conditioned H with the
// condition estimate in the message.
ParamColumn solve_lsq(const NormalSystem& sys);

// Closed-form minimizer of the all-quadratic cost:
//   paper_literal:     x = (H'H + 2 lam K'K)^-1 H't
//   normal_equations:  x = (H  + 2 lam K'K)^-1 t
ParamColumn solve_l2l2(const NormalSystem& sys, const PenaltyOperator& penalty, double lam,
                       DataMode mode = DataMode::paper_literal);

// Element-wise sgn(v) max(|v| - kappa, 0).
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double kappa);

std::pair<ParamColumn, SolveReport> admm_l1(const NormalSystem& sys, const PenaltyOperator& penalty,
                                            const SolverConfig& cfg);

std::pair<ParamColumn, SolveReport> admm_l1l2(const NormalSystem& sys, const PenaltyOperator& penalty,
                                              const SolverConfig& cfg);

// Cost evaluation, for traces and oracle comparison.
double data_term(const NormalSystem& sys, const Eigen::VectorXd& x, DataMode mode);
// lambda ||K x||_1 penalty with s implied by x, or with an explicit s.
double objective_l1(const NormalSystem& sys, const PenaltyOperator& penalty, const Eigen::VectorXd& x,
                    double lambda, DataMode mode);
double objective_l1(const NormalSystem& sys, const PenaltyOperator& penalty, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& s, double lambda, DataMode mode);
double objective_l2(const NormalSystem& sys, const PenaltyOperator& penalty, const Eigen::VectorXd& x,
                    double lam, DataMode mode);
double objective_l1l2(const NormalSystem& sys, const PenaltyOperator& penalty, const Eigen::VectorXd& x,
                      double lambda1, double lambda2, DataMode mode);

// || grad_quad(x) + K' g || for the subgradient certificate g built from the
// scaled dual y: g_j = lambda sgn((Kx)_j) on clearly-active L1 rows,
// clamp(rho y_j, +-lambda) on the rest, and 2 lambda1 (K1 x1) on L2 rows.
double stationarity_residual_l1(const NormalSystem& sys, const PenaltyOperator& penalty,
                                const Eigen::VectorXd& x, const Eigen::VectorXd& y, double lambda,
                                double rho, DataMode mode);
double stationarity_residual_l1l2(const NormalSystem& sys, const PenaltyOperator& penalty,
                                  const Eigen::VectorXd& x, const Eigen::VectorXd& y, double lambda1,
                                  double lambda2, double rho, DataMode mode);

// ---- per-column fan-out over a multi-column dataset ----

enum class Method { lsq, l2l2, admm_l1, admm_l1l2 };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct EstimateConfig {
    Method method = Method::admm_l1l2;
    SolverConfig solver;
    double reg_wa = 1.0, reg_wb = 1.0, reg_wn = 1.0;  // K_j = w_j B
    int threads = 0;                                  // 0 = hardware concurrency
};

struct MapEstimate {
    Eigen::MatrixXd a, b, n;                    // N_R x n_cols
    Eigen::MatrixXd alpha_eff_db, beta, nu;     // reconstructed physical maps
    Eigen::MatrixXd bsc_fc;                     // BSC at the requested frequency
    std::vector<SolveReport> reports;           // per column
    std::vector<std::string> failures;          // "column 7: <what>"
};

// Solves each lateral column independently (parallel map, results ordered by
// column index). Per-column failures produce NaN columns and an entry in
// `failures` instead of aborting the map.
MapEstimate estimate_map(const std::vector<LogRatioMap>& columns, const SpectralGrid& grid,
                         const Eigen::MatrixXd& weights, const ReferenceCalibration& calib,
                         double center_freq_mhz, const EstimateConfig& cfg);

}  // namespace qus
