#include "qus/synth.hpp"

#include "qus/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace qus {

double GaussianRng::uniform() {
    // 53-bit mantissa, shifted into (0, 1] so the log below is always finite.
    return (double((state_() >> 11)) + 1.0) * 0x1.0p-53;
}

double GaussianRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

void PhantomSpec::validate() const {
    grid.validate();
    background.validate();
    if (layout.empty()) throw std::invalid_argument("PhantomSpec: empty layout");
    std::vector<Layer> sorted = layout;
    std::sort(sorted.begin(), sorted.end(),
              [](const Layer& l, const Layer& r) { return l.z_begin_cm < r.z_begin_cm; });
    const double eps = 1e-9;
    for (size_t k = 0; k < sorted.size(); ++k) {
        if (!(sorted[k].z_end_cm > sorted[k].z_begin_cm))
            throw std::invalid_argument("PhantomSpec: layer has nonpositive extent");
        if (!(sorted[k].beta > 0)) throw std::invalid_argument("PhantomSpec: layer beta must be > 0");
        if (k > 0 && sorted[k].z_begin_cm < sorted[k - 1].z_end_cm - eps)
            throw std::invalid_argument("PhantomSpec: layers overlap");
        if (k > 0 && sorted[k].z_begin_cm > sorted[k - 1].z_end_cm + eps)
            throw std::invalid_argument("PhantomSpec: gap between layers");
    }
    if (sorted.front().z_begin_cm > grid.depths_cm.front() + eps ||
        sorted.back().z_end_cm < grid.depths_cm.back() - eps)
        throw std::invalid_argument("PhantomSpec: layout does not cover the grid depth span");
}

int PhantomSpec::layer_at(double z_cm) const {
    int best = -1;
    for (size_t k = 0; k < layout.size(); ++k) {
        const Layer& l = layout[k];
        if (z_cm >= l.z_begin_cm && (z_cm < l.z_end_cm || (best < 0 && z_cm <= l.z_end_cm + 1e-9)))
            best = static_cast<int>(k);
    }
    if (best < 0) throw std::invalid_argument("PhantomSpec: depth " + std::to_string(z_cm) + " not covered");
    return best;
}

void NoiseSpec::validate() const {
    if (sigma0 < 0 || slope_fz < 0) throw std::invalid_argument("NoiseSpec: sigma0 and slope_fz must be >= 0");
}

TissueField true_field(const PhantomSpec& spec) {
    spec.validate();
    const int nr = spec.grid.n_depths();
    TissueField f;
    f.alpha_eff_db.resize(nr);
    f.beta.resize(nr);
    f.nu.resize(nr);
    for (int i = 0; i < nr; ++i) {
        const Layer& l = spec.layout[spec.layer_at(spec.grid.depths_cm[i])];
        f.alpha_eff_db[i] = l.alpha_eff_db;
        f.beta[i] = l.beta;
        f.nu[i] = l.nu;
    }
    return f;
}

ParamColumn true_params(const PhantomSpec& spec) { return parameterize(true_field(spec), spec.background); }

std::vector<LogRatioMap> generate_column(const PhantomSpec& spec, const NoiseSpec& noise, int n_frames) {
    if (n_frames < 1) throw std::invalid_argument("generate_column: n_frames must be >= 1");
    noise.validate();
    const LogRatioMap exact = forward_log_ratio(true_params(spec), spec.grid);
    const int nf = spec.grid.n_freqs();
    const int nr = spec.grid.n_depths();

    GaussianRng rng(noise.seed);
    std::vector<LogRatioMap> frames;
    frames.reserve(n_frames);
    for (int k = 0; k < n_frames; ++k) {
        LogRatioMap frame = exact;
        if (noise.sigma0 > 0 || noise.slope_fz > 0) {
            for (int l = 0; l < nf; ++l)
                for (int i = 0; i < nr; ++i)
                    frame(l, i) += noise.sigma(spec.grid.freqs_mhz[l], spec.grid.depths_cm[i]) * rng.normal();
        }
        frames.push_back(std::move(frame));
    }
    return frames;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> generate_spectra_pair(const PhantomSpec& spec,
                                                                  const std::vector<double>& system_response,
                                                                  const NoiseSpec& noise) {
    noise.validate();
    const TissueField field = true_field(spec);
    const int nf = spec.grid.n_freqs();
    const int nr = spec.grid.n_depths();
    if (static_cast<int>(system_response.size()) != nf)
        throw std::invalid_argument("generate_spectra_pair: system response length != N_F");
    for (double r : system_response)
        if (!(r > 0)) throw std::invalid_argument("generate_spectra_pair: system response must be > 0");

    const double alpha_r_np = units::db_to_np(spec.background.alpha0_db);
    Eigen::MatrixXd s_sample(nf, nr), s_reference(nf, nr);
    for (int l = 0; l < nf; ++l) {
        const double f = spec.grid.freqs_mhz[l];
        const double bsc_r = bsc_at(spec.background.beta, spec.background.nu, f);
        for (int i = 0; i < nr; ++i) {
            const double z = spec.grid.depths_cm[i];
            s_reference(l, i) = system_response[l] * bsc_r * attenuation_factor(alpha_r_np, f, z);
            const double alpha_s_np = units::db_to_np(field.alpha_eff_db[i]);
            s_sample(l, i) = system_response[l] * bsc_at(field.beta[i], field.nu[i], f) *
                             attenuation_factor(alpha_s_np, f, z);
        }
    }
    if (noise.sigma0 > 0 || noise.slope_fz > 0) {
        GaussianRng rng(noise.seed);
        for (int l = 0; l < nf; ++l)
            for (int i = 0; i < nr; ++i)
                s_sample(l, i) *= std::exp(noise.sigma(spec.grid.freqs_mhz[l], spec.grid.depths_cm[i]) * rng.normal());
        for (int l = 0; l < nf; ++l)
            for (int i = 0; i < nr; ++i)
                s_reference(l, i) *=
                    std::exp(noise.sigma(spec.grid.freqs_mhz[l], spec.grid.depths_cm[i]) * rng.normal());
    }
    return {std::move(s_sample), std::move(s_reference)};
}

Eigen::MatrixXd inject_specular(const Eigen::MatrixXd& spectra, const std::vector<int>& depth_indices,
                                double boost) {
    if (!(boost > 1.0)) throw std::invalid_argument("inject_specular: boost must be > 1");
    Eigen::MatrixXd out = spectra;
    for (int i : depth_indices) {
        if (i < 0 || i >= spectra.cols())
            throw std::invalid_argument("inject_specular: depth index " + std::to_string(i) + " out of range");
        out.col(i) *= boost;
    }
    return out;
}

void MapPhantomSpec::validate() const {
    grid.validate();
    background.validate();
    if (n_lateral < 1) throw std::invalid_argument("MapPhantomSpec: n_lateral must be >= 1");
    if (!(lateral_pitch_cm > 0)) throw std::invalid_argument("MapPhantomSpec: lateral pitch must be > 0");
    for (const auto& d : disks) {
        if (!(d.radius_cm > 0)) throw std::invalid_argument("MapPhantomSpec: disk radius must be > 0");
        if (!(d.beta > 0)) throw std::invalid_argument("MapPhantomSpec: disk beta must be > 0");
    }
}

PhantomSpec column_spec(const MapPhantomSpec& spec, int col) {
    spec.validate();
    if (col < 0 || col >= spec.n_lateral) throw std::invalid_argument("column_spec: column out of range");
    const double x = spec.lateral_x(col);
    const double z_lo = std::min(spec.grid.depths_cm.front(), 0.0);
    const double z_hi = spec.grid.depths_cm.back() + 1.0;

    struct Chord {
        double z0, z1;
        const InclusionDisk* disk;
    };
    std::vector<Chord> chords;
    for (const auto& d : spec.disks) {
        const double dx = x - d.center_x_cm;
        if (std::abs(dx) >= d.radius_cm) continue;
        const double h = std::sqrt(d.radius_cm * d.radius_cm - dx * dx);
        chords.push_back({d.center_z_cm - h, d.center_z_cm + h, &d});
    }
    std::sort(chords.begin(), chords.end(), [](const Chord& a, const Chord& b) { return a.z0 < b.z0; });
    for (size_t k = 1; k < chords.size(); ++k)
        if (chords[k].z0 < chords[k - 1].z1)
            throw std::invalid_argument("column_spec: overlapping inclusions on one column");

    PhantomSpec out;
    out.grid = spec.grid;
    out.background = spec.background;
    auto background_layer = [&](double z0, double z1) {
        return Layer{z0, z1, spec.background.alpha0_db, spec.background.beta, spec.background.nu};
    };
    double cursor = z_lo;
    for (const auto& c : chords) {
        const double c0 = std::max(c.z0, z_lo);
        const double c1 = std::min(c.z1, z_hi);
        if (c1 <= cursor) continue;
        if (c0 > cursor) out.layout.push_back(background_layer(cursor, c0));
        out.layout.push_back(Layer{c0, c1, c.disk->alpha_eff_db, c.disk->beta, c.disk->nu});
        cursor = c1;
    }
    if (cursor < z_hi) out.layout.push_back(background_layer(cursor, z_hi));
    return out;
}

MapTruth map_truth(const MapPhantomSpec& spec) {
    spec.validate();
    const int nr = spec.grid.n_depths();
    MapTruth t;
    t.alpha_eff_db.resize(nr, spec.n_lateral);
    t.beta.resize(nr, spec.n_lateral);
    t.nu.resize(nr, spec.n_lateral);
    t.a.resize(nr, spec.n_lateral);
    t.b.resize(nr, spec.n_lateral);
    t.n.resize(nr, spec.n_lateral);
    for (int c = 0; c < spec.n_lateral; ++c) {
        const PhantomSpec col = column_spec(spec, c);
        const TissueField f = true_field(col);
        const ParamColumn p = parameterize(f, spec.background);
        t.alpha_eff_db.col(c) = f.alpha_eff_db;
        t.beta.col(c) = f.beta;
        t.nu.col(c) = f.nu;
        t.a.col(c) = p.a;
        t.b.col(c) = p.b;
        t.n.col(c) = p.n;
    }
    return t;
}

}  // namespace qus
