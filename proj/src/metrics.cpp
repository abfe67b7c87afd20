#include "qus/metrics.hpp"

#include <cmath>
#include <numeric>

namespace qus {

void ROISpec::validate(int n_depths, int n_lateral) const {
    if (depth_lo < 0 || depth_hi >= n_depths || depth_lo > depth_hi || lat_lo < 0 || lat_hi >= n_lateral ||
        lat_lo > lat_hi)
        throw std::invalid_argument("ROI '" + name + "': range [" + std::to_string(depth_lo) + "," +
                                    std::to_string(depth_hi) + "]x[" + std::to_string(lat_lo) + "," +
                                    std::to_string(lat_hi) + "] invalid for " + std::to_string(n_depths) + "x" +
                                    std::to_string(n_lateral) + " map");
}

double bsc_to_db(double bsc) {
    if (!(bsc > 0)) throw std::invalid_argument("bsc_to_db: nonpositive BSC value");
    return 10.0 * std::log10(bsc / 1e-4);
}

Eigen::MatrixXd frame_average(const std::vector<Eigen::MatrixXd>& frames) {
    if (frames.empty()) throw std::invalid_argument("frame_average: empty input");
    Eigen::MatrixXd m = frames.front();
    for (size_t k = 1; k < frames.size(); ++k) {
        if (frames[k].rows() != m.rows() || frames[k].cols() != m.cols())
            throw std::invalid_argument("frame_average: frame shapes differ");
        m += frames[k];
    }
    return m / double(frames.size());
}

namespace {

// Collect ROI cells through an optional per-cell transform.
template <typename Transform>
std::pair<double, double> roi_bias_variance(const Eigen::MatrixXd& m, const ROISpec& roi, double gt,
                                            Transform tf) {
    roi.validate(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
    const int n = roi.n_cells();
    double sum = 0.0;
    std::vector<double> vals;
    vals.reserve(n);
    for (int i = roi.depth_lo; i <= roi.depth_hi; ++i)
        for (int c = roi.lat_lo; c <= roi.lat_hi; ++c) {
            const double v = tf(m(i, c), i, c);
            vals.push_back(v);
            sum += v;
        }
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    const double variance = n > 1 ? ss / (n - 1) : 0.0;  // sample form
    return {std::abs(mean - gt), variance};
}

}  // namespace

std::pair<double, double> bias_variance_attenuation(const Eigen::MatrixXd& m, const ROISpec& roi,
                                                    double gt_alpha_db) {
    return roi_bias_variance(m, roi, gt_alpha_db, [](double v, int, int) { return v; });
}

std::pair<double, double> bias_variance_bsc_db(const Eigen::MatrixXd& m_bsc, const ROISpec& roi,
                                               double gt_bsc) {
    return roi_bias_variance(m_bsc, roi, bsc_to_db(gt_bsc), [&roi](double v, int i, int c) {
        if (!(v > 0))
            throw std::runtime_error("bias_variance_bsc_db: nonpositive BSC in ROI '" + roi.name + "' at (" +
                                     std::to_string(i) + "," + std::to_string(c) + ")");
        return bsc_to_db(v);
    });
}

namespace {

template <typename Transform>
std::pair<double, double> frames_bias_variance(const std::vector<Eigen::MatrixXd>& frames, const ROISpec& roi,
                                               double gt, Transform tf) {
    if (frames.empty()) throw std::invalid_argument("bias_variance (frames mode): empty input");
    std::vector<double> means;
    means.reserve(frames.size());
    for (const auto& frame : frames) {
        roi.validate(static_cast<int>(frame.rows()), static_cast<int>(frame.cols()));
        double sum = 0.0;
        for (int i = roi.depth_lo; i <= roi.depth_hi; ++i)
            for (int c = roi.lat_lo; c <= roi.lat_hi; ++c) sum += tf(frame(i, c), i, c);
        means.push_back(sum / roi.n_cells());
    }
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / means.size();
    double ss = 0.0;
    for (double v : means) ss += (v - grand) * (v - grand);
    const double variance = means.size() > 1 ? ss / (means.size() - 1) : 0.0;
    return {std::abs(grand - gt), variance};
}

}  // namespace

std::pair<double, double> bias_variance_attenuation_frames(const std::vector<Eigen::MatrixXd>& frames,
                                                           const ROISpec& roi, double gt_alpha_db) {
    return frames_bias_variance(frames, roi, gt_alpha_db, [](double v, int, int) { return v; });
}

std::pair<double, double> bias_variance_bsc_db_frames(const std::vector<Eigen::MatrixXd>& frames,
                                                      const ROISpec& roi, double gt_bsc) {
    return frames_bias_variance(frames, roi, bsc_to_db(gt_bsc), [&roi](double v, int i, int c) {
        if (!(v > 0))
            throw std::runtime_error("bias_variance_bsc_db: nonpositive BSC in ROI '" + roi.name + "' at (" +
                                     std::to_string(i) + "," + std::to_string(c) + ")");
        return bsc_to_db(v);
    });
}

}  // namespace qus
