#include "qus/weighting.hpp"

#include <cmath>
#include <string>

namespace qus {

std::vector<BandRange> select_band(const Eigen::MatrixXd& s_log, double band_fraction) {
    if (s_log.size() == 0) throw std::invalid_argument("select_band: empty map");
    const int nf = static_cast<int>(s_log.rows());
    const int nr = static_cast<int>(s_log.cols());
    std::vector<BandRange> bands(nr);
    for (int i = 0; i < nr; ++i) {
        int peak = 0;
        s_log.col(i).maxCoeff(&peak);
        const double level = band_fraction * s_log(peak, i);
        BandRange r{peak, peak};
        while (r.lo > 0 && s_log(r.lo - 1, i) >= level) --r.lo;
        while (r.hi < nf - 1 && s_log(r.hi + 1, i) >= level) ++r.hi;
        bands[i] = r;
    }
    return bands;
}

Eigen::MatrixXd phantom_weights(const Eigen::MatrixXd& s_log, double upper_fraction, double lower_fraction) {
    if (!s_log.allFinite()) throw std::invalid_argument("phantom_weights: map must be finite");
    const double t1 = upper_fraction * s_log.maxCoeff();
    const double t2 = lower_fraction * s_log.minCoeff();
    if (!(t1 > t2))
        throw std::runtime_error("phantom_weights: degenerate dynamic range (T1 = " + std::to_string(t1) +
                                 " <= T2 = " + std::to_string(t2) + ")");
    return s_log.unaryExpr([t1, t2](double s) {
        if (s > t1) return 1.0;
        if (s < t2) return 0.0;
        return std::clamp((s - t2) / (t1 - t2), 0.0, 1.0);
    });
}

Eigen::MatrixXd combine_weights(const Eigen::MatrixXd& w_s, const Eigen::MatrixXd& w_r,
                                WeightConfig::CombineMode mode) {
    if (w_s.rows() != w_r.rows() || w_s.cols() != w_r.cols())
        throw std::invalid_argument("combine_weights: weight map shapes differ");
    if (mode == WeightConfig::CombineMode::reference_only) return w_r;
    return w_s.cwiseProduct(w_r);
}

Eigen::MatrixXd normalize_floor(const Eigen::MatrixXd& w, double floor) {
    if (!(floor > 0)) throw std::invalid_argument("normalize_floor: floor must be > 0");
    if (!(w.maxCoeff() > 0)) throw std::invalid_argument("normalize_floor: all-zero weight map");
    const Eigen::MatrixXd shifted = w.array() + floor;
    return shifted / shifted.maxCoeff();
}

}  // namespace qus
