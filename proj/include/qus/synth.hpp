// Synthetic phantoms: per-column layered ground truth, noisy log-ratio
// frames, raw spectra pairs, and the disk-inclusion map geometry reduced to
// per-column layouts.

#pragma once

#include "qus/types.hpp"

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace qus {

// Deterministic normal generator (mt19937_64 + Box-Muller); the standard
// distributions are implementation-defined, this one is not.
class GaussianRng {
  public:
    explicit GaussianRng(std::uint64_t seed) : state_(seed) {}
    double uniform();  // (0, 1]
    double normal();

  private:
    std::mt19937_64 state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// One homogeneous depth interval [z_begin, z_end) of a column phantom.
struct Layer {
    double z_begin_cm = 0.0;
    double z_end_cm = 0.0;
    double alpha_eff_db = 0.0;  // dB/cm/MHz
    double beta = 1.0;
    double nu = 0.0;
};

struct PhantomSpec {
    std::vector<Layer> layout;  // must cover the grid depth span, no overlap
    SpectralGrid grid;
    ReferenceCalibration background;

    void validate() const;
    // Index of the layer owning depth z (last layer owns its upper edge).
    int layer_at(double z_cm) const;
};

// Additive Gaussian noise on log spectra, std = sigma0 + slope_fz * f * z.
struct NoiseSpec {
    double sigma0 = 0.0;    // nepers
    double slope_fz = 0.0;  // nepers / (MHz cm)
    std::uint64_t seed = 0;

    void validate() const;
    double sigma(double f_mhz, double z_cm) const { return sigma0 + slope_fz * f_mhz * z_cm; }
};

TissueField true_field(const PhantomSpec& spec);
ParamColumn true_params(const PhantomSpec& spec);

// n_frames independent noisy realizations of the exact log-ratio surface.
std::vector<LogRatioMap> generate_column(const PhantomSpec& spec, const NoiseSpec& noise, int n_frames);

// Raw sample/reference power spectra with a shared system response curve
// (length N_F) and multiplicative log-normal noise on each map.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> generate_spectra_pair(const PhantomSpec& spec,
                                                                  const std::vector<double>& system_response,
                                                                  const NoiseSpec& noise);

// Multiplies the listed depth indices of a spectra map by `boost`,
// emulating coherent specular contamination.
Eigen::MatrixXd inject_specular(const Eigen::MatrixXd& spectra, const std::vector<int>& depth_indices,
                                double boost);

// ---- disk-inclusion maps, reduced to per-column layouts ----

struct InclusionDisk {
    double center_z_cm = 0.0;
    double center_x_cm = 0.0;
    double radius_cm = 0.0;
    double alpha_eff_db = 0.0;
    double beta = 1.0;
    double nu = 0.0;
};

struct MapPhantomSpec {
    SpectralGrid grid;
    ReferenceCalibration background;       // also the tissue outside the disks
    int n_lateral = 1;
    double lateral_pitch_cm = 0.1;         // column c sits at x = c * pitch
    std::vector<InclusionDisk> disks;

    void validate() const;
    double lateral_x(int col) const { return col * lateral_pitch_cm; }
};

// The 1-D layered spec seen by lateral column `col`.
PhantomSpec column_spec(const MapPhantomSpec& spec, int col);

struct MapTruth {
    Eigen::MatrixXd alpha_eff_db, beta, nu;  // N_R x n_lateral
    Eigen::MatrixXd a, b, n;
};

MapTruth map_truth(const MapPhantomSpec& spec);

}  // namespace qus
