// Optional RF front-end: windowed periodograms averaged across lateral
// lines, and the reference-phantom log ratio. Estimation can bypass this
// module entirely by loading precomputed spectra or log-ratio maps.

#pragma once

#include "qus/types.hpp"

namespace qus {

struct RFFrame {
    Eigen::MatrixXd samples;        // axial sample x lateral line
    double sampling_rate_mhz = 0.0;
    double sound_speed_mps = 1540.0;
};

struct SpectrumMap {
    Eigen::MatrixXd values;  // N_F x N_R, power units, >= 0
    SpectralGrid grid;
};

// Hann-tapered, mean-detrended periodogram per depth window, averaged
// across lateral lines, evaluated at exactly `band_freqs_mhz` (DFT per
// requested bin). Window centers map to depth via the two-way travel time.
SpectrumMap power_spectrum(const RFFrame& frame, int window_len, double overlap,
                           const std::vector<double>& band_freqs_mhz);

// X = ln(S_s / S_r), element-wise. Grids must match; nonpositive power in
// the band is a data error naming the offending cell.
LogRatioMap rpm_log_ratio(const SpectrumMap& s_sample, const SpectrumMap& s_reference);

// Element-wise arithmetic mean of a stack of spectra on one grid.
SpectrumMap lateral_average(const std::vector<SpectrumMap>& maps);

}  // namespace qus
