#include "oracles.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace qus::test {

std::pair<Eigen::MatrixXd, Eigen::VectorXd> dense_normal_system(const LogRatioMap& x_map,
                                                                const SpectralGrid& grid,
                                                                const Eigen::MatrixXd& weights) {
    const int nf = grid.n_freqs();
    const int nr = grid.n_depths();
    const int rows = nf * nr;
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(rows, 3 * nr);
    Eigen::VectorXd y(rows);
    Eigen::VectorXd w(rows);
    for (int l = 0; l < nf; ++l) {
        const double f = grid.freqs_mhz[l];
        const double lnf = std::log(f);
        for (int i = 0; i < nr; ++i) {
            const int row = l * nr + i;
            q(row, i) = -4.0 * f * grid.depths_cm[i];
            q(row, nr + i) = 1.0;
            q(row, 2 * nr + i) = lnf;
            y[row] = x_map(l, i);
            w[row] = weights(l, i);
        }
    }
    const Eigen::MatrixXd qtw = q.transpose() * w.asDiagonal();
    return {qtw * q, qtw * y};
}

// Direct 1-D TV denoiser (single forward pass with segment fusion).
Eigen::VectorXd tv_prox(const Eigen::VectorXd& y, double lam) {
    const int n = static_cast<int>(y.size());
    Eigen::VectorXd x(n);
    if (n == 0) return x;
    if (n == 1 || lam <= 0.0) return y;

    int k = 0, k0 = 0, kminus = 0, kplus = 0;
    double vmin = y[0] - lam, vmax = y[0] + lam;
    double umin = lam, umax = -lam;

    while (true) {
        if (k == n - 1) {
            // tail segment: flush whichever bound the running sum violates
            if (umin < 0.0) {
                for (int j = k0; j <= kminus; ++j) x[j] = vmin;
                k = k0 = kminus = kminus + 1;
                vmin = y[k];
                umin = lam;
                umax = y[k] + lam - vmax;
                continue;
            }
            if (umax > 0.0) {
                for (int j = k0; j <= kplus; ++j) x[j] = vmax;
                k = k0 = kplus = kplus + 1;
                vmax = y[k];
                umax = -lam;
                umin = y[k] - lam - vmin;
                continue;
            }
            const double v = vmin + umin / (k - k0 + 1);
            for (int j = k0; j <= n - 1; ++j) x[j] = v;
            return x;
        }

        if (y[k + 1] + umin < vmin - lam) {
            // negative jump: the minorant segment is final
            for (int j = k0; j <= kminus; ++j) x[j] = vmin;
            k = k0 = kminus = kplus = kminus + 1;
            vmin = y[k];
            vmax = y[k] + 2.0 * lam;
            umin = lam;
            umax = -lam;
        } else if (y[k + 1] + umax > vmax + lam) {
            // positive jump: the majorant segment is final
            for (int j = k0; j <= kplus; ++j) x[j] = vmax;
            k = k0 = kminus = kplus = kplus + 1;
            vmin = y[k] - 2.0 * lam;
            vmax = y[k];
            umin = lam;
            umax = -lam;
        } else {
            // extend the current segment, tightening both bounds
            ++k;
            umin += y[k] - vmin;
            umax += y[k] - vmax;
            if (umin >= lam) {
                vmin += (umin - lam) / (k - k0 + 1);
                umin = lam;
                kminus = k;
            }
            if (umax <= -lam) {
                vmax += (umax + lam) / (k - k0 + 1);
                umax = -lam;
                kplus = k;
            }
        }
    }
}

double tv_prox_optimality_gap(const Eigen::VectorXd& y, const Eigen::VectorXd& x, double lam) {
    // x optimal iff the running residual sums u_j = sum_{i<=j}(y_i - x_i)
    // stay in [-lam, lam], close at zero, and pin to -lam sgn(jump) at every
    // jump of x.
    const int n = static_cast<int>(y.size());
    double gap = 0.0;
    double u = 0.0;
    for (int j = 0; j < n; ++j) {
        u += y[j] - x[j];
        if (j == n - 1) {
            gap = std::max(gap, std::abs(u));
            break;
        }
        gap = std::max(gap, std::abs(u) - lam);
        const double jump = x[j + 1] - x[j];
        if (jump > 1e-12) gap = std::max(gap, std::abs(u + lam));
        if (jump < -1e-12) gap = std::max(gap, std::abs(u - lam));
    }
    return gap;
}

namespace {

struct Smooth {
    Eigen::MatrixXd hessian;
    Eigen::VectorXd linear;  // gradient = hessian * x + linear
    double constant = 0.0;
    double lipschitz = 0.0;

    double value(const Eigen::VectorXd& x) const {
        return 0.5 * x.dot(hessian * x) + linear.dot(x) + constant;
    }
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const { return hessian * x + linear; }
};

// data(x) [+ lambda1 ||K1 x1||^2] as an explicit quadratic.
Smooth make_smooth(const NormalSystem& sys, const PenaltyOperator& penalty, double lambda1, DataMode mode) {
    Smooth s;
    const Eigen::MatrixXd h = sys.dense();
    if (mode == DataMode::paper_literal) {
        s.hessian = h * h;
        s.linear = -(h * sys.t);
        s.constant = 0.5 * sys.t.squaredNorm();
    } else {
        s.hessian = h;
        s.linear = -sys.t;
        s.constant = 0.0;
    }
    if (lambda1 > 0) {
        const int nr = sys.n_depths();
        const Eigen::MatrixXd k1 = Eigen::MatrixXd(penalty.k1);
        s.hessian.topLeftCorner(nr, nr) += 2.0 * lambda1 * (k1.transpose() * k1);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.hessian);
    s.lipschitz = std::max(es.eigenvalues().maxCoeff(), 1e-12);
    return s;
}

// tv weights per parameter block; zero-weight blocks pass through.
struct TvBlocks {
    double ca = 0.0, cb = 0.0, cn = 0.0;  // absolute TV strengths

    Eigen::VectorXd prox(const Eigen::VectorXd& v, double step, int nr) const {
        Eigen::VectorXd out(v.size());
        auto one = [&](int offset, double c) {
            if (c > 0)
                out.segment(offset, nr) = tv_prox(v.segment(offset, nr), step * c);
            else
                out.segment(offset, nr) = v.segment(offset, nr);
        };
        one(0, ca);
        one(nr, cb);
        one(2 * nr, cn);
        return out;
    }
    double value(const Eigen::VectorXd& x, int nr) const {
        auto tv = [&](int offset) {
            double s = 0;
            for (int i = 0; i + 1 < nr; ++i) s += std::abs(x[offset + i + 1] - x[offset + i]);
            return s;
        };
        return ca * tv(0) + cb * tv(nr) + cn * tv(2 * nr);
    }
};

ProxGradResult fista(const Smooth& smooth, const TvBlocks& tv, int nr, int max_iter, double tol) {
    const int dim = 3 * nr;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd z = x;
    double theta = 1.0;
    const double step = 1.0 / smooth.lipschitz;

    auto objective = [&](const Eigen::VectorXd& v) { return smooth.value(v) + tv.value(v, nr); };

    ProxGradResult best;
    best.x = x;
    best.objective = objective(x);

    double prev_obj = best.objective;
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd x_new = tv.prox(z - step * smooth.gradient(z), step, nr);
        const double theta_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        const double obj = objective(x_new);
        if (obj > prev_obj) {
            // function-value restart keeps the momentum honest
            z = x;
            theta = 1.0;
        } else {
            z = x_new + ((theta - 1.0) / theta_new) * (x_new - x);
            theta = theta_new;
            const double change = (x_new - x).lpNorm<Eigen::Infinity>();
            x = x_new;
            if (obj < best.objective) {
                best.objective = obj;
                best.x = x;
            }
            best.iterations = it + 1;
            if (change < tol && it > 10) break;
            prev_obj = obj;
        }
    }
    return best;
}

}  // namespace

ProxGradResult prox_grad_l1(const NormalSystem& sys, const PenaltyOperator& penalty, double lambda,
                            DataMode mode, int max_iter, double tol) {
    const Smooth smooth = make_smooth(sys, penalty, 0.0, mode);
    TvBlocks tv{lambda * penalty.w_a, lambda * penalty.w_b, lambda * penalty.w_n};
    return fista(smooth, tv, sys.n_depths(), max_iter, tol);
}

ProxGradResult prox_grad_l1l2(const NormalSystem& sys, const PenaltyOperator& penalty, double lambda1,
                              double lambda2, DataMode mode, int max_iter, double tol) {
    const Smooth smooth = make_smooth(sys, penalty, lambda1, mode);
    TvBlocks tv{0.0, lambda2 * penalty.w_b, lambda2 * penalty.w_n};
    return fista(smooth, tv, sys.n_depths(), max_iter, tol);
}

Eigen::VectorXd grad_descent_l2l2(const NormalSystem& sys, const PenaltyOperator& penalty, double lam,
                                  DataMode mode, double grad_tol, int max_iter) {
    Smooth smooth = make_smooth(sys, penalty, 0.0, mode);
    const Eigen::MatrixXd k = Eigen::MatrixXd(penalty.joint);
    smooth.hessian += 2.0 * lam * (k.transpose() * k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(smooth.hessian);
    const double step = 1.0 / std::max(es.eigenvalues().maxCoeff(), 1e-12);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.dim());
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd g = smooth.gradient(x);
        if (g.norm() <= grad_tol) break;
        x -= step * g;
    }
    return x;
}

}  // namespace qus::test
