#include "qus/assembly.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace qus {

SparseMat build_difference(int n) {
    if (n < 2) throw std::invalid_argument("build_difference: need n >= 2");
    SparseMat b(n - 1, n);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * (n - 1));
    for (int r = 0; r < n - 1; ++r) {
        trip.emplace_back(r, r, 1.0);
        trip.emplace_back(r, r + 1, -1.0);
    }
    b.setFromTriplets(trip.begin(), trip.end());
    return b;
}

Eigen::VectorXd NormalSystem::apply(const Eigen::VectorXd& x) const {
    const int nr = n_depths();
    if (x.size() != 3 * nr) throw std::invalid_argument("NormalSystem::apply: dimension mismatch");
    const auto xa = x.segment(0, nr);
    const auto xb = x.segment(nr, nr);
    const auto xn = x.segment(2 * nr, nr);
    Eigen::VectorXd y(3 * nr);
    y.segment(0, nr) = h1.cwiseProduct(xa) + h2.cwiseProduct(xb) + h3.cwiseProduct(xn);
    y.segment(nr, nr) = h2.cwiseProduct(xa) + h4.cwiseProduct(xb) + h5.cwiseProduct(xn);
    y.segment(2 * nr, nr) = h3.cwiseProduct(xa) + h5.cwiseProduct(xb) + h6.cwiseProduct(xn);
    return y;
}

SparseMat NormalSystem::sparse() const {
    const int nr = n_depths();
    SparseMat h(3 * nr, 3 * nr);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * nr);
    for (int i = 0; i < nr; ++i) {
        trip.emplace_back(i, i, h1[i]);
        trip.emplace_back(i, nr + i, h2[i]);
        trip.emplace_back(nr + i, i, h2[i]);
        trip.emplace_back(i, 2 * nr + i, h3[i]);
        trip.emplace_back(2 * nr + i, i, h3[i]);
        trip.emplace_back(nr + i, nr + i, h4[i]);
        trip.emplace_back(nr + i, 2 * nr + i, h5[i]);
        trip.emplace_back(2 * nr + i, nr + i, h5[i]);
        trip.emplace_back(2 * nr + i, 2 * nr + i, h6[i]);
    }
    h.setFromTriplets(trip.begin(), trip.end());
    return h;
}

Eigen::MatrixXd NormalSystem::dense() const { return Eigen::MatrixXd(sparse()); }

NormalSystem build_normal_system(const LogRatioMap& x_map, const SpectralGrid& grid,
                                 const Eigen::MatrixXd& weights) {
    const int nf = grid.n_freqs();
    const int nr = grid.n_depths();
    if (x_map.rows() != nf || x_map.cols() != nr)
        throw std::invalid_argument("build_normal_system: X map is " + std::to_string(x_map.rows()) + "x" +
                                    std::to_string(x_map.cols()) + ", grid wants " + std::to_string(nf) + "x" +
                                    std::to_string(nr));
    if (weights.rows() != nf || weights.cols() != nr)
        throw std::invalid_argument("build_normal_system: weight map shape mismatch");
    if ((weights.array() < 0.0).any() || !weights.allFinite())
        throw std::invalid_argument("build_normal_system: weights must be finite and >= 0");

    NormalSystem sys;
    sys.h1.resize(nr); sys.h2.resize(nr); sys.h3.resize(nr);
    sys.h4.resize(nr); sys.h5.resize(nr); sys.h6.resize(nr);
    sys.t.resize(3 * nr);

    std::vector<double> lnf(nf);
    for (int l = 0; l < nf; ++l) lnf[l] = std::log(grid.freqs_mhz[l]);

    for (int i = 0; i < nr; ++i) {
        const double z = grid.depths_cm[i];
        double sw = 0, swf = 0, swf2 = 0, swlf = 0, swflf = 0, swlf2 = 0;
        double sxf = 0, sx = 0, sxlf = 0;
        for (int l = 0; l < nf; ++l) {
            const double w = weights(l, i);
            const double f = grid.freqs_mhz[l];
            const double lf = lnf[l];
            const double x = x_map(l, i);
            sw += w;
            swf += w * f;
            swf2 += w * f * f;
            swlf += w * lf;
            swflf += w * f * lf;
            swlf2 += w * lf * lf;
            sxf += w * x * f;
            sx += w * x;
            sxlf += w * x * lf;
        }
        sys.h1[i] = 16.0 * z * z * swf2;
        sys.h2[i] = -4.0 * z * swf;
        sys.h3[i] = -4.0 * z * swflf;
        sys.h4[i] = sw;
        sys.h5[i] = swlf;
        sys.h6[i] = swlf2;
        sys.t[i] = -4.0 * z * sxf;
        sys.t[nr + i] = sx;
        sys.t[2 * nr + i] = sxlf;
    }
    return sys;
}

NormalSystem build_normal_system(const LogRatioMap& x_map, const SpectralGrid& grid) {
    return build_normal_system(x_map, grid, Eigen::MatrixXd::Ones(x_map.rows(), x_map.cols()));
}

PenaltyOperator build_penalty(double w_a, double w_b, double w_n, int n_depths) {
    if (n_depths < 2) throw std::invalid_argument("build_penalty: need n_depths >= 2");
    if (w_a < 0 || w_b < 0 || w_n < 0) throw std::invalid_argument("build_penalty: weights must be >= 0");
    const int nr = n_depths;
    const int nd = nr - 1;

    PenaltyOperator p;
    p.w_a = w_a; p.w_b = w_b; p.w_n = w_n;

    std::vector<Eigen::Triplet<double>> joint, k1, k2;
    joint.reserve(6 * nd);
    k1.reserve(2 * nd);
    k2.reserve(4 * nd);
    for (int r = 0; r < nd; ++r) {
        joint.emplace_back(r, r, w_a);
        joint.emplace_back(r, r + 1, -w_a);
        joint.emplace_back(nd + r, nr + r, w_b);
        joint.emplace_back(nd + r, nr + r + 1, -w_b);
        joint.emplace_back(2 * nd + r, 2 * nr + r, w_n);
        joint.emplace_back(2 * nd + r, 2 * nr + r + 1, -w_n);
        k1.emplace_back(r, r, w_a);
        k1.emplace_back(r, r + 1, -w_a);
        k2.emplace_back(r, r, w_b);
        k2.emplace_back(r, r + 1, -w_b);
        k2.emplace_back(nd + r, nr + r, w_n);
        k2.emplace_back(nd + r, nr + r + 1, -w_n);
    }
    p.joint.resize(3 * nd, 3 * nr);
    p.joint.setFromTriplets(joint.begin(), joint.end());
    p.k1.resize(nd, nr);
    p.k1.setFromTriplets(k1.begin(), k1.end());
    p.k2.resize(2 * nd, 2 * nr);
    p.k2.setFromTriplets(k2.begin(), k2.end());
    return p;
}

}  // namespace qus
