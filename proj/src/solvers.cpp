#include "qus/solvers.hpp"

#include "qus/model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace qus {

void SolverConfig::validate() const {
    if (!(rho > 0)) throw std::invalid_argument("SolverConfig: rho must be > 0");
    if (lambda < 0 || lambda1 < 0 || lambda2 < 0)
        throw std::invalid_argument("SolverConfig: lambdas must be >= 0");
    if (!(eps_abs > 0) || !(eps_rel > 0))
        throw std::invalid_argument("SolverConfig: tolerances must be > 0");
    if (max_iter < 1) throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
}

ParamColumn solve_lsq(const NormalSystem& sys) {
    const int nr = sys.n_depths();
    Eigen::VectorXd x(3 * nr);
    double ev_max = 0.0, ev_min = std::numeric_limits<double>::infinity();

    // H permutes to independent 3x3 blocks, one per depth.
    for (int i = 0; i < nr; ++i) {
        Eigen::Matrix3d m;
        m << sys.h1[i], sys.h2[i], sys.h3[i],
             sys.h2[i], sys.h4[i], sys.h5[i],
             sys.h3[i], sys.h5[i], sys.h6[i];
        Eigen::Vector3d rhs(sys.t[i], sys.t[nr + i], sys.t[2 * nr + i]);

        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
        ev_max = std::max(ev_max, es.eigenvalues().maxCoeff());
        ev_min = std::min(ev_min, es.eigenvalues().minCoeff());
        if (!(es.eigenvalues().minCoeff() > 0)) {
            std::ostringstream msg;
            msg << "solve_lsq: H is not positive definite at depth index " << i
                << " (min eigenvalue " << es.eigenvalues().minCoeff() << ")";
            throw std::runtime_error(msg.str());
        }
        Eigen::Vector3d sol =
            es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose() * rhs;
        x[i] = sol[0];
        x[nr + i] = sol[1];
        x[2 * nr + i] = sol[2];
    }

    const double cond = ev_max / ev_min;
    const double resid = (sys.apply(x) - sys.t).norm();
    if (cond > 1e14 || resid > 1e-8 * std::max(sys.t.norm(), 1e-300)) {
        std::ostringstream msg;
        msg << "solve_lsq: system too ill-conditioned (condition estimate " << cond
            << ", relative residual " << resid / std::max(sys.t.norm(), 1e-300) << ")";
        throw std::runtime_error(msg.str());
    }
    return ParamColumn::from_stacked(x);
}

namespace {

// System matrix and right-hand side of the regularized x-solve for each mode.
struct QuadForm {
    SparseMat mat;       // H'H (paper_literal) or H
    Eigen::VectorXd c;   // H't or t
};

QuadForm quad_form(const NormalSystem& sys, DataMode mode) {
    QuadForm q;
    if (mode == DataMode::paper_literal) {
        SparseMat h = sys.sparse();
        q.mat = (h * h).pruned();
        q.c = sys.apply(sys.t);
    } else {
        q.mat = sys.sparse();
        q.c = sys.t;
    }
    return q;
}

Eigen::VectorXd factor_and_solve(const SparseMat& a, const Eigen::VectorXd& rhs, const char* who) {
    Eigen::SimplicialLDLT<SparseMat> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error(std::string(who) + ": factorization failed");
    Eigen::VectorXd x = ldlt.solve(rhs);
    if (!x.allFinite()) throw std::runtime_error(std::string(who) + ": singular system");
    return x;
}

}  // namespace

ParamColumn solve_l2l2(const NormalSystem& sys, const PenaltyOperator& penalty, double lam, DataMode mode) {
    if (lam < 0) throw std::invalid_argument("solve_l2l2: lam must be >= 0");
    QuadForm q = quad_form(sys, mode);
    SparseMat ktk = SparseMat(penalty.joint.transpose()) * penalty.joint;
    SparseMat a = (q.mat + 2.0 * lam * ktk).pruned();
    return ParamColumn::from_stacked(factor_and_solve(a, q.c, "solve_l2l2"));
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double kappa) {
    if (kappa < 0) throw std::invalid_argument("soft_threshold: kappa must be >= 0");
    return v.unaryExpr([kappa](double x) {
        const double m = std::abs(x) - kappa;
        return m > 0 ? (x > 0 ? m : -m) : 0.0;
    });
}

double data_term(const NormalSystem& sys, const Eigen::VectorXd& x, DataMode mode) {
    if (x.size() != sys.dim()) throw std::invalid_argument("data_term: dimension mismatch");
    if (mode == DataMode::paper_literal) {
        return 0.5 * (sys.apply(x) - sys.t).squaredNorm();
    }
    return 0.5 * x.dot(sys.apply(x)) - sys.t.dot(x);
}

double objective_l1(const NormalSystem& sys, const PenaltyOperator& penalty, const Eigen::VectorXd& x,
                    double lambda, DataMode mode) {
    return data_term(sys, x, mode) + lambda * (penalty.joint * x).lpNorm<1>();
}

double objective_l1(const NormalSystem& sys, const PenaltyOperator& penalty, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& s, double lambda, DataMode mode) {
    if (s.size() != penalty.joint.rows()) throw std::invalid_argument("objective_l1: s dimension mismatch");
    return data_term(sys, x, mode) + lambda * s.lpNorm<1>();
}

double objective_l2(const NormalSystem& sys, const PenaltyOperator& penalty, const Eigen::VectorXd& x,
                    double lam, DataMode mode) {
    return data_term(sys, x, mode) + lam * (penalty.joint * x).squaredNorm();
}

double objective_l1l2(const NormalSystem& sys, const PenaltyOperator& penalty, const Eigen::VectorXd& x,
                      double lambda1, double lambda2, DataMode mode) {
    const int nr = sys.n_depths();
    Eigen::VectorXd x1 = x.segment(0, nr);
    Eigen::VectorXd x2 = x.segment(nr, 2 * nr);
    return data_term(sys, x, mode) + lambda1 * (penalty.k1 * x1).squaredNorm() +
           lambda2 * (penalty.k2 * x2).lpNorm<1>();
}

namespace {

// Shared scaled-dual ADMM loop; the penalty prox is the only moving part.
template <typename SUpdate, typename Objective>
std::pair<ParamColumn, SolveReport> admm_core(const NormalSystem& sys, const PenaltyOperator& penalty,
                                              const SolverConfig& cfg, SUpdate s_update, Objective objective) {
    cfg.validate();
    const SparseMat& k = penalty.joint;
    const int n = sys.dim();
    const int m = static_cast<int>(k.rows());

    QuadForm q = quad_form(sys, cfg.data_mode);
    SparseMat kt = k.transpose();
    SparseMat a = (q.mat + cfg.rho * (kt * k)).pruned();
    Eigen::SimplicialLDLT<SparseMat> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("admm: x-update factorization failed");

    Eigen::VectorXd x;
    try {
        x = solve_lsq(sys).stacked();
    } catch (const std::runtime_error&) {
        x = Eigen::VectorXd::Zero(n);
    }
    Eigen::VectorXd s = k * x;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

    SolveReport report;
    report.data_mode = cfg.data_mode;
    report.objective_trace.reserve(cfg.max_iter);

    for (int it = 0; it < cfg.max_iter; ++it) {
        x = ldlt.solve(q.c + cfg.rho * (kt * (s - y)));
        if (!x.allFinite()) throw std::runtime_error("admm: singular x-update system");
        const Eigen::VectorXd kx = k * x;
        const Eigen::VectorXd s_prev = s;
        s = s_update(kx + y);
        y += kx - s;

        report.iterations = it + 1;
        report.objective_trace.push_back(objective(x));
        report.primal_residual = (kx - s).norm();
        report.dual_residual = cfg.rho * (kt * (s - s_prev)).norm();
        const double eps_pri = std::sqrt(double(m)) * cfg.eps_abs +
                               cfg.eps_rel * std::max(kx.norm(), s.norm());
        const double eps_dual = std::sqrt(double(n)) * cfg.eps_abs +
                                cfg.eps_rel * cfg.rho * (kt * y).norm();
        if (report.primal_residual <= eps_pri && report.dual_residual <= eps_dual) {
            report.converged = true;
            break;
        }
    }

    report.scaled_dual = std::move(y);
    return std::make_pair(ParamColumn::from_stacked(x), std::move(report));
}

}  // namespace

std::pair<ParamColumn, SolveReport> admm_l1(const NormalSystem& sys, const PenaltyOperator& penalty,
                                            const SolverConfig& cfg) {
    const double kappa = cfg.lambda / cfg.rho;
    return admm_core(
        sys, penalty, cfg, [kappa](const Eigen::VectorXd& v) { return soft_threshold(v, kappa); },
        [&](const Eigen::VectorXd& x) { return objective_l1(sys, penalty, x, cfg.lambda, cfg.data_mode); });
}

std::pair<ParamColumn, SolveReport> admm_l1l2(const NormalSystem& sys, const PenaltyOperator& penalty,
                                              const SolverConfig& cfg) {
    const int nd = sys.n_depths() - 1;  // rows of each difference block
    const double l2_denom =
        cfg.prox_variant == ProxVariant::derived ? cfg.rho + 2.0 * cfg.lambda1 : cfg.rho + cfg.lambda1;
    const double l2_numer = cfg.prox_variant == ProxVariant::derived ? cfg.rho : 1.0;
    const double kappa = cfg.lambda2 / cfg.rho;
    auto s_update = [=](const Eigen::VectorXd& v) {
        Eigen::VectorXd s(v.size());
        s.head(nd) = (l2_numer / l2_denom) * v.head(nd);
        s.tail(2 * nd) = soft_threshold(v.tail(2 * nd), kappa);
        return s;
    };
    return admm_core(sys, penalty, cfg, s_update, [&](const Eigen::VectorXd& x) {
        return objective_l1l2(sys, penalty, x, cfg.lambda1, cfg.lambda2, cfg.data_mode);
    });
}

namespace {

Eigen::VectorXd quad_gradient(const NormalSystem& sys, const Eigen::VectorXd& x, DataMode mode) {
    if (mode == DataMode::paper_literal) return sys.apply(sys.apply(x) - sys.t);
    return sys.apply(x) - sys.t;
}

// L1-row certificate: lambda sgn on clearly active rows, clamped dual elsewhere.
Eigen::VectorXd l1_certificate(const Eigen::VectorXd& kx, const Eigen::VectorXd& rho_y, double lambda) {
    const double zeta = 1e-6 * (1.0 + kx.cwiseAbs().maxCoeff());
    Eigen::VectorXd g(kx.size());
    for (int j = 0; j < kx.size(); ++j) {
        if (std::abs(kx[j]) > zeta)
            g[j] = lambda * (kx[j] > 0 ? 1.0 : -1.0);
        else
            g[j] = std::clamp(rho_y[j], -lambda, lambda);
    }
    return g;
}

}  // namespace

double stationarity_residual_l1(const NormalSystem& sys, const PenaltyOperator& penalty,
                                const Eigen::VectorXd& x, const Eigen::VectorXd& y, double lambda,
                                double rho, DataMode mode) {
    const Eigen::VectorXd kx = penalty.joint * x;
    const Eigen::VectorXd g = l1_certificate(kx, rho * y, lambda);
    return (quad_gradient(sys, x, mode) + penalty.joint.transpose() * g).norm();
}

double stationarity_residual_l1l2(const NormalSystem& sys, const PenaltyOperator& penalty,
                                  const Eigen::VectorXd& x, const Eigen::VectorXd& y, double lambda1,
                                  double lambda2, double rho, DataMode mode) {
    const int nr = sys.n_depths();
    const int nd = nr - 1;
    const Eigen::VectorXd kx = penalty.joint * x;
    Eigen::VectorXd g(kx.size());
    g.head(nd) = 2.0 * lambda1 * (penalty.k1 * x.segment(0, nr));
    g.tail(2 * nd) = l1_certificate(kx.tail(2 * nd), rho * y.tail(2 * nd), lambda2);
    return (quad_gradient(sys, x, mode) + penalty.joint.transpose() * g).norm();
}

std::string method_name(Method m) {
    switch (m) {
        case Method::lsq: return "lsq";
        case Method::l2l2: return "l2l2";
        case Method::admm_l1: return "admm_l1";
        case Method::admm_l1l2: return "admm_l1l2";
    }
    throw std::logic_error("method_name: unknown method");
}

Method method_from_name(const std::string& name) {
    if (name == "lsq") return Method::lsq;
    if (name == "l2l2") return Method::l2l2;
    if (name == "admm_l1") return Method::admm_l1;
    if (name == "admm_l1l2") return Method::admm_l1l2;
    throw std::invalid_argument("unknown solver method '" + name + "'");
}

MapEstimate estimate_map(const std::vector<LogRatioMap>& columns, const SpectralGrid& grid,
                         const Eigen::MatrixXd& weights, const ReferenceCalibration& calib,
                         double center_freq_mhz, const EstimateConfig& cfg) {
    if (columns.empty()) throw std::invalid_argument("estimate_map: no columns");
    grid.validate();
    calib.validate();
    const int nr = grid.n_depths();
    const int nc = static_cast<int>(columns.size());
    for (const auto& col : columns)
        if (col.rows() != grid.n_freqs() || col.cols() != nr)
            throw std::invalid_argument("estimate_map: column shape mismatch");

    MapEstimate out;
    out.a.setConstant(nr, nc, std::nan(""));
    out.b.setConstant(nr, nc, std::nan(""));
    out.n.setConstant(nr, nc, std::nan(""));
    out.alpha_eff_db.setConstant(nr, nc, std::nan(""));
    out.beta.setConstant(nr, nc, std::nan(""));
    out.nu.setConstant(nr, nc, std::nan(""));
    out.bsc_fc.setConstant(nr, nc, std::nan(""));
    out.reports.resize(nc);
    std::vector<std::string> failures(nc);

    const PenaltyOperator penalty = build_penalty(cfg.reg_wa, cfg.reg_wb, cfg.reg_wn, nr);

    auto solve_one = [&](int c) {
        const NormalSystem sys = build_normal_system(columns[c], grid, weights);
        ParamColumn p;
        SolveReport rep;
        rep.data_mode = cfg.solver.data_mode;
        switch (cfg.method) {
            case Method::lsq:
                p = solve_lsq(sys);
                rep.converged = true;
                break;
            case Method::l2l2:
                p = solve_l2l2(sys, penalty, cfg.solver.lambda, cfg.solver.data_mode);
                rep.converged = true;
                break;
            case Method::admm_l1:
                std::tie(p, rep) = admm_l1(sys, penalty, cfg.solver);
                break;
            case Method::admm_l1l2:
                std::tie(p, rep) = admm_l1l2(sys, penalty, cfg.solver);
                break;
        }
        out.a.col(c) = p.a;
        out.b.col(c) = p.b;
        out.n.col(c) = p.n;
        const TissueField field = reconstruct(p, calib);
        out.alpha_eff_db.col(c) = field.alpha_eff_db;
        out.beta.col(c) = field.beta;
        out.nu.col(c) = field.nu;
        for (int i = 0; i < nr; ++i) out.bsc_fc(i, c) = bsc_at(field.beta[i], field.nu[i], center_freq_mhz);
        out.reports[c] = std::move(rep);
    };

    int n_threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::max(1, std::min(n_threads, nc));

    if (n_threads == 1) {
        for (int c = 0; c < nc; ++c) {
            try {
                solve_one(c);
            } catch (const std::exception& e) {
                failures[c] = "column " + std::to_string(c) + ": " + e.what();
            }
        }
    } else {
        std::atomic<int> next{0};
        auto worker = [&] {
            for (int c = next.fetch_add(1); c < nc; c = next.fetch_add(1)) {
                try {
                    solve_one(c);
                } catch (const std::exception& e) {
                    failures[c] = "column " + std::to_string(c) + ": " + e.what();
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (auto& f : failures)
        if (!f.empty()) out.failures.push_back(std::move(f));
    return out;
}

}  // namespace qus
