// SNR-motivated data-term weights from contour levels of log spectra, plus
// per-depth bandwidth selection.

#pragma once

#include "qus/types.hpp"

namespace qus {

struct WeightConfig {
    double band_fraction = 0.8;   // per-depth bandwidth rule
    double upper_fraction = 0.9;  // T1 = upper_fraction * global max
    double lower_fraction = 1.67; // T2 = lower_fraction * global min
    double floor = 0.05;          // shift applied before renormalizing
    enum class CombineMode { both, reference_only };
    CombineMode combine = CombineMode::both;

    void validate() const {
        if (!(floor > 0 && floor < 1)) throw std::invalid_argument("WeightConfig: floor must be in (0,1)");
        if (!(band_fraction > 0) || !(upper_fraction > 0) || !(lower_fraction > 0))
            throw std::invalid_argument("WeightConfig: fractions must be > 0");
    }
};

// Inclusive frequency-index range [lo, hi] selected at one depth.
struct BandRange {
    int lo = 0;
    int hi = 0;
};

// Per depth: the contiguous run around the argmax where the log spectrum
// stays >= band_fraction * (per-depth max).
std::vector<BandRange> select_band(const Eigen::MatrixXd& s_log, double band_fraction);

// Piecewise contour-level weights from a log-spectrum map. Thresholds are
// global over the map: w = 1 above T1, 0 below T2, linear ramp between
// (clamped to [0,1], ties assigned to the ramp branch).
// Throws on degenerate dynamic range (T1 <= T2).
Eigen::MatrixXd phantom_weights(const Eigen::MatrixXd& s_log, double upper_fraction, double lower_fraction);

// w_d = w_s .* w_r, or just w_r when the sample spectra are untrustworthy.
Eigen::MatrixXd combine_weights(const Eigen::MatrixXd& w_s, const Eigen::MatrixXd& w_r,
                                WeightConfig::CombineMode mode);

// w' = (w + floor) / max(w + floor): strictly positive, max exactly 1,
// ordering preserved.
Eigen::MatrixXd normalize_floor(const Eigen::MatrixXd& w, double floor);

}  // namespace qus
