// ROI bias/variance evaluation of frame-averaged estimate maps, and the dB
// scaling convention for BSC values (re 1e-4).

#pragma once

#include "qus/types.hpp"

#include <string>
#include <vector>

namespace qus {

// Inclusive index ranges into an N_R x n_lateral map.
struct ROISpec {
    std::string name;
    int depth_lo = 0, depth_hi = 0;
    int lat_lo = 0, lat_hi = 0;

    void validate(int n_depths, int n_lateral) const;
    int n_cells() const { return (depth_hi - depth_lo + 1) * (lat_hi - lat_lo + 1); }
};

// 10 log10(v / 1e-4), the dB scale used for every BSC report.
double bsc_to_db(double bsc);

// Element-wise mean across per-frame estimate maps.
Eigen::MatrixXd frame_average(const std::vector<Eigen::MatrixXd>& frames);

// bias = |mean over ROI - gt|, variance = sample variance over ROI cells.
std::pair<double, double> bias_variance_attenuation(const Eigen::MatrixXd& m, const ROISpec& roi,
                                                    double gt_alpha_db);

// Same on 10 log10(./1e-4)-transformed BSC values; throws on nonpositive
// BSC naming the cell.
std::pair<double, double> bias_variance_bsc_db(const Eigen::MatrixXd& m_bsc, const ROISpec& roi,
                                               double gt_bsc);

// Across-frames alternative: variance of the per-frame ROI means, bias of
// their average.
std::pair<double, double> bias_variance_attenuation_frames(const std::vector<Eigen::MatrixXd>& frames,
                                                           const ROISpec& roi, double gt_alpha_db);
std::pair<double, double> bias_variance_bsc_db_frames(const std::vector<Eigen::MatrixXd>& frames,
                                                      const ROISpec& roi, double gt_bsc);

}  // namespace qus
