// Core domain types shared by every stage of the pipeline.
//
// Unit conventions (fixed, no alternatives accepted):
//   frequency   MHz
//   depth       cm
//   attenuation Np/cm/MHz internally, dB/cm/MHz at every I/O boundary
//   BSC         1/(cm sr)

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace qus {

// Log-spectrum ratio X(f_l, z_i): row l = frequency bin, column i = depth.
using LogRatioMap = Eigen::MatrixXd;

namespace units {

// 1 Np = 20/ln(10) dB, from the natural exponential in the two-way
// attenuation model versus the dB convention of calibration reports.
inline constexpr double kNpPerDb = 2.302585092994045684017991 / 20.0;

inline double db_to_np(double alpha_db) { return alpha_db * kNpPerDb; }
inline double np_to_db(double alpha_np) { return alpha_np / kNpPerDb; }

}  // namespace units

// Frequency bins (MHz) and depth positions (cm) everything is indexed over.
struct SpectralGrid {
    std::vector<double> freqs_mhz;
    std::vector<double> depths_cm;

    int n_freqs() const { return static_cast<int>(freqs_mhz.size()); }
    int n_depths() const { return static_cast<int>(depths_cm.size()); }

    // Strictly increasing, strictly positive axes; at least two bins each.
    // Low-level assembly routines tolerate degenerate grids, pipeline entry
    // points must call this.
    void validate() const;
};

// Builds a uniformly spaced grid over [f_min, f_max] x [z_min, z_max].
SpectralGrid make_grid(double f_min_mhz, double f_max_mhz, int n_freqs,
                       double z_min_cm, double z_max_cm, int n_depths);

// Acoustic properties of the calibrated reference phantom.
struct ReferenceCalibration {
    double alpha0_db = 0.0;  // attenuation slope, dB/cm/MHz
    double beta = 1.0;       // BSC magnitude, 1/(cm sr MHz^nu)
    double nu = 0.0;         // BSC frequency exponent

    void validate() const {
        if (!(beta > 0.0)) throw std::invalid_argument("ReferenceCalibration: beta must be > 0");
        if (!(alpha0_db >= 0.0)) throw std::invalid_argument("ReferenceCalibration: alpha0 must be >= 0");
    }
};

// The solver unknowns per depth for one lateral column:
//   a  differential attenuation slope, Np/cm/MHz
//   b  log BSC magnitude difference
//   n  BSC exponent difference
struct ParamColumn {
    Eigen::VectorXd a;
    Eigen::VectorXd b;
    Eigen::VectorXd n;

    ParamColumn() = default;
    explicit ParamColumn(int n_depths)
        : a(Eigen::VectorXd::Zero(n_depths)),
          b(Eigen::VectorXd::Zero(n_depths)),
          n(Eigen::VectorXd::Zero(n_depths)) {}

    int n_depths() const { return static_cast<int>(a.size()); }

    // Stacked vector [a; b; n], the ordering used by the normal system.
    Eigen::VectorXd stacked() const;
    static ParamColumn from_stacked(const Eigen::VectorXd& x);

    void check_consistent() const {
        if (a.size() != b.size() || a.size() != n.size())
            throw std::invalid_argument("ParamColumn: a, b, n must share length");
        if (!a.allFinite() || !b.allFinite() || !n.allFinite())
            throw std::invalid_argument("ParamColumn: entries must be finite");
    }
};

// Per-depth physical ground truth (or reconstruction).
struct TissueField {
    Eigen::VectorXd alpha_eff_db;  // dB/cm/MHz
    Eigen::VectorXd beta;          // 1/(cm sr MHz^nu)
    Eigen::VectorXd nu;

    int n_depths() const { return static_cast<int>(alpha_eff_db.size()); }
};

}  // namespace qus
