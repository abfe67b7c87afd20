#include "qus/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <string>

namespace qus {

SpectrumMap power_spectrum(const RFFrame& frame, int window_len, double overlap,
                           const std::vector<double>& band_freqs_mhz) {
    const int n_samples = static_cast<int>(frame.samples.rows());
    const int n_lines = static_cast<int>(frame.samples.cols());
    if (window_len < 2 || window_len > n_samples)
        throw std::invalid_argument("power_spectrum: window length must be in [2, axial sample count]");
    if (!(overlap >= 0.0 && overlap < 1.0))
        throw std::invalid_argument("power_spectrum: overlap must be in [0, 1)");
    if (band_freqs_mhz.empty()) throw std::invalid_argument("power_spectrum: empty analysis band");
    if (!(frame.sampling_rate_mhz > 0)) throw std::invalid_argument("power_spectrum: sampling rate must be > 0");
    const double f_max = *std::max_element(band_freqs_mhz.begin(), band_freqs_mhz.end());
    if (!(frame.sampling_rate_mhz > 2.0 * f_max))
        throw std::invalid_argument("power_spectrum: band exceeds Nyquist (fs = " +
                                    std::to_string(frame.sampling_rate_mhz) + " MHz, max bin " +
                                    std::to_string(f_max) + " MHz)");
    if (frame.sound_speed_mps < 1400.0 || frame.sound_speed_mps > 1650.0)
        std::cerr << "power_spectrum: warning: sound speed " << frame.sound_speed_mps
                  << " m/s outside plausible tissue range [1400, 1650]\n";

    const int nf = static_cast<int>(band_freqs_mhz.size());
    const int step = std::max(1, static_cast<int>(std::lround(window_len * (1.0 - overlap))));
    std::vector<int> starts;
    for (int s0 = 0; s0 + window_len <= n_samples; s0 += step) starts.push_back(s0);

    Eigen::VectorXd hann(window_len);
    for (int n = 0; n < window_len; ++n)
        hann[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * n / (window_len - 1)));
    const double u = hann.squaredNorm();  // window energy, PSD normalization

    // DFT kernels at exactly the requested bins.
    Eigen::MatrixXd cos_k(nf, window_len), sin_k(nf, window_len);
    for (int l = 0; l < nf; ++l) {
        const double omega = 2.0 * std::numbers::pi * band_freqs_mhz[l] / frame.sampling_rate_mhz;
        for (int n = 0; n < window_len; ++n) {
            cos_k(l, n) = std::cos(omega * n);
            sin_k(l, n) = std::sin(omega * n);
        }
    }

    SpectrumMap out;
    out.values.setZero(nf, static_cast<int>(starts.size()));
    out.grid.freqs_mhz = band_freqs_mhz;
    out.grid.depths_cm.resize(starts.size());

    const double cm_per_us = frame.sound_speed_mps * 1e-4;
    Eigen::VectorXd seg(window_len);
    for (size_t w = 0; w < starts.size(); ++w) {
        const double center = starts[w] + 0.5 * (window_len - 1);
        out.grid.depths_cm[w] = cm_per_us * (center / frame.sampling_rate_mhz) / 2.0;
        for (int line = 0; line < n_lines; ++line) {
            seg = frame.samples.block(starts[w], line, window_len, 1);
            seg.array() -= seg.mean();
            seg.array() *= hann.array();
            for (int l = 0; l < nf; ++l) {
                const double re = cos_k.row(l).dot(seg);
                const double im = sin_k.row(l).dot(seg);
                out.values(l, static_cast<int>(w)) += re * re + im * im;
            }
        }
    }
    out.values /= double(n_lines) * u * frame.sampling_rate_mhz;
    return out;
}

namespace {

bool same_grid(const SpectralGrid& a, const SpectralGrid& b) {
    return a.freqs_mhz == b.freqs_mhz && a.depths_cm == b.depths_cm;
}

}  // namespace

LogRatioMap rpm_log_ratio(const SpectrumMap& s_sample, const SpectrumMap& s_reference) {
    if (!same_grid(s_sample.grid, s_reference.grid))
        throw std::invalid_argument("rpm_log_ratio: sample and reference grids differ");
    const auto& ss = s_sample.values;
    const auto& sr = s_reference.values;
    if (ss.rows() != sr.rows() || ss.cols() != sr.cols())
        throw std::invalid_argument("rpm_log_ratio: map shapes differ");
    LogRatioMap x(ss.rows(), ss.cols());
    for (int l = 0; l < ss.rows(); ++l) {
        for (int i = 0; i < ss.cols(); ++i) {
            if (!(sr(l, i) > 0.0))
                throw std::runtime_error("rpm_log_ratio: nonpositive reference power at (freq " +
                                         std::to_string(l) + ", depth " + std::to_string(i) + ")");
            if (!(ss(l, i) > 0.0))
                throw std::runtime_error("rpm_log_ratio: nonpositive sample power at (freq " +
                                         std::to_string(l) + ", depth " + std::to_string(i) + ")");
            x(l, i) = std::log(ss(l, i) / sr(l, i));
        }
    }
    return x;
}

SpectrumMap lateral_average(const std::vector<SpectrumMap>& maps) {
    if (maps.empty()) throw std::invalid_argument("lateral_average: empty stack");
    SpectrumMap out = maps.front();
    for (size_t k = 1; k < maps.size(); ++k) {
        if (!same_grid(maps[k].grid, out.grid))
            throw std::invalid_argument("lateral_average: grids differ at map " + std::to_string(k));
        out.values += maps[k].values;
    }
    out.values /= double(maps.size());
    return out;
}

}  // namespace qus
