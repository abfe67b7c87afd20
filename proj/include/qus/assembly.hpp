// Quadratic-system assembly: the normal system (H, t) from closed-form
// per-depth sums, the first-difference operator B, and the penalty
// operators K, K1, K2.
//
// H is 3N_R x 3N_R with six distinct diagonal blocks; it is stored as six
// diagonal vectors. The dense regression matrix is never materialized in
// production paths (a test oracle rebuilds it row by row).

#pragma once

#include "qus/types.hpp"

#include <Eigen/Sparse>

namespace qus {

using SparseMat = Eigen::SparseMatrix<double>;

// (n-1) x n first difference, row r = e_r - e_{r+1}. Constant vectors are
// in its nullspace.
SparseMat build_difference(int n);

// H = Q' W Q and t = Q' W Y without forming Q, as per-depth weighted sums
// over frequency. Block layout over the stacked unknowns [a; b; n]:
//
//        [ H1 H2 H3 ]        [ t1 ]
//    H = [ H2 H4 H5 ]    t = [ t2 ]
//        [ H3 H5 H6 ]        [ t3 ]
//
// every block an N_R x N_R diagonal.
struct NormalSystem {
    Eigen::VectorXd h1, h2, h3, h4, h5, h6;  // block diagonals
    Eigen::VectorXd t;                       // stacked length 3*N_R

    int n_depths() const { return static_cast<int>(h1.size()); }
    int dim() const { return 3 * n_depths(); }

    // y = H x in O(N_R) using the diagonal blocks.
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

    // Sparse H (<= 9 N_R nonzeros); used to factor regularized systems.
    SparseMat sparse() const;

    // Dense H, test/diagnostic only.
    Eigen::MatrixXd dense() const;
};

// Weighted assembly. `weights` is N_F x N_R with entries in [0, 1]-ish
// scale; any nonnegative finite values are accepted (zero removes the cell
// from the fit, scaling all weights rescales (H, t) linearly).
NormalSystem build_normal_system(const LogRatioMap& x_map, const SpectralGrid& grid,
                                 const Eigen::MatrixXd& weights);

// Uniform-weight assembly (w == 1).
NormalSystem build_normal_system(const LogRatioMap& x_map, const SpectralGrid& grid);

// Depth-difference penalties. Joint form stacks all three parameters,
//   K = blockdiag(w_a B, w_b B, w_n B),
// the split form separates the attenuation block from the BSC blocks,
//   K1 = w_a B,   K2 = blockdiag(w_b B, w_n B).
struct PenaltyOperator {
    double w_a = 1.0, w_b = 1.0, w_n = 1.0;
    SparseMat joint;  // 3(N_R-1) x 3N_R
    SparseMat k1;     //  (N_R-1) x  N_R   acts on a
    SparseMat k2;     // 2(N_R-1) x 2N_R   acts on [b; n]

    int n_depths() const { return static_cast<int>(joint.cols()) / 3; }
};

PenaltyOperator build_penalty(double w_a, double w_b, double w_n, int n_depths);

}  // namespace qus
