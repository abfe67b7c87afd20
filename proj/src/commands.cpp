#include "qus/commands.hpp"

#include "qus/metrics.hpp"
#include "qus/model.hpp"
#include "qus/solvers.hpp"
#include "qus/synth.hpp"
#include "qus/weighting.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace qus::cmd {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
    }
    while (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

double to_num(const std::string& s, const std::string& what) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse number '" + s + "' in " + what);
    }
}

std::string frame_col_name(int frame, int col) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "x_f%03d_c%03d.csv", frame, col);
    return buf;
}

SpectralGrid grid_from_config(const Config& cfg) {
    SpectralGrid g = make_grid(cfg.get_num("grid", "f_min"), cfg.get_num("grid", "f_max"),
                               static_cast<int>(cfg.get_int("grid", "n_freqs")), cfg.get_num("grid", "z_min"),
                               cfg.get_num("grid", "z_max"), static_cast<int>(cfg.get_int("grid", "n_depths")));
    return g;
}

ReferenceCalibration calib_from_config(const Config& cfg) {
    ReferenceCalibration c;
    c.alpha0_db = cfg.get_num_or("calibration", "alpha0_db", 0.6035);
    c.beta = cfg.get_num_or("calibration", "beta", 2.9966e-6);
    c.nu = cfg.get_num_or("calibration", "nu", 3.4281);
    c.validate();
    return c;
}

MapPhantomSpec phantom_from_config(const Config& cfg) {
    MapPhantomSpec spec;
    spec.grid = grid_from_config(cfg);
    spec.background = calib_from_config(cfg);
    spec.n_lateral = static_cast<int>(cfg.get_int_or("phantom", "n_lateral", 1));
    spec.lateral_pitch_cm = cfg.get_num_or("phantom", "lateral_pitch", 0.1);
    for (const std::string& item : split(cfg.get_str_or("phantom", "disks", ""), ';')) {
        if (item.empty()) continue;
        const auto f = split(item, ':');
        if (f.size() != 6) throw ConfigError("phantom disk '" + item + "' wants cz:cx:r:alpha_db:beta:nu");
        InclusionDisk d;
        d.center_z_cm = to_num(f[0], "disks");
        d.center_x_cm = to_num(f[1], "disks");
        d.radius_cm = to_num(f[2], "disks");
        d.alpha_eff_db = to_num(f[3], "disks");
        d.beta = to_num(f[4], "disks");
        d.nu = to_num(f[5], "disks");
        spec.disks.push_back(d);
    }
    spec.validate();
    return spec;
}

// Column phantom with explicit layers (overrides disk geometry when given).
std::optional<PhantomSpec> layers_from_config(const Config& cfg, const MapPhantomSpec& map_spec) {
    const std::string text = cfg.get_str_or("phantom", "layers", "");
    if (text.empty()) return std::nullopt;
    PhantomSpec spec;
    spec.grid = map_spec.grid;
    spec.background = map_spec.background;
    for (const std::string& item : split(text, ';')) {
        if (item.empty()) continue;
        const auto f = split(item, ':');
        if (f.size() != 5) throw ConfigError("phantom layer '" + item + "' wants z0:z1:alpha_db:beta:nu");
        spec.layout.push_back(Layer{to_num(f[0], "layers"), to_num(f[1], "layers"), to_num(f[2], "layers"),
                                    to_num(f[3], "layers"), to_num(f[4], "layers")});
    }
    spec.validate();
    return spec;
}

NoiseSpec noise_from_config(const Config& cfg, const GlobalOptions& opts) {
    NoiseSpec n;
    n.sigma0 = cfg.get_num_or("noise", "sigma0", 0.0);
    n.slope_fz = cfg.get_num_or("noise", "slope_fz", 0.0);
    n.seed = static_cast<std::uint64_t>(opts.seed ? *opts.seed : cfg.get_int_or("noise", "seed", 1));
    n.validate();
    return n;
}

std::vector<double> response_from_config(const Config& cfg, const SpectralGrid& grid) {
    const std::string text = cfg.get_str_or("synth", "response", "flat");
    const int nf = grid.n_freqs();
    std::vector<double> r(nf, 1.0);
    if (text == "flat") return r;
    const auto f = split(text, ':');
    if (f.size() == 3 && f[0] == "gauss") {
        const double f0 = to_num(f[1], "response");
        const double width = to_num(f[2], "response");
        if (!(width > 0)) throw ConfigError("response gauss width must be > 0");
        for (int l = 0; l < nf; ++l) {
            const double d = grid.freqs_mhz[l] - f0;
            r[l] = std::exp(-d * d / (2.0 * width * width));
        }
        return r;
    }
    throw ConfigError("response must be 'flat' or 'gauss:<f0>:<width>', got '" + text + "'");
}

std::vector<double> lateral_axis(int n_lateral) {
    std::vector<double> axis(n_lateral);
    for (int c = 0; c < n_lateral; ++c) axis[c] = c;
    return axis;
}

// Maps are stored freq-major in memory (N_F x N_R); files are depth-major.
void write_fz_map(const fs::path& path, const Eigen::MatrixXd& values, const SpectralGrid& grid,
                  const std::string& command, const std::string& hash) {
    write_map(path, values.transpose(), grid.depths_cm, grid.freqs_mhz, "freq(MHz)", command, hash);
}

Eigen::MatrixXd read_fz_map(const fs::path& path, const SpectralGrid& grid) {
    const MapFile mf = read_map(path);
    if (mf.row_axis != grid.depths_cm || mf.col_axis != grid.freqs_mhz)
        throw DataError("'" + path.string() + "': axes do not match the dataset grid");
    return mf.values.transpose();
}

void write_lateral_map(const fs::path& path, const Eigen::MatrixXd& values, const SpectralGrid& grid,
                       const std::string& command, const std::string& hash) {
    write_map(path, values, grid.depths_cm, lateral_axis(static_cast<int>(values.cols())), "lateral", command,
              hash);
}

struct ResolvedSynth {
    MapPhantomSpec map_spec;
    std::optional<PhantomSpec> layered;  // explicit per-column layers
    NoiseSpec noise;
    int n_frames = 1;
    double center_frequency = 8.0;
    bool emit_spectra = false;
    std::vector<double> response;

    PhantomSpec column(int c) const {
        if (layered) return *layered;
        return column_spec(map_spec, c);
    }
};

ResolvedSynth resolve_synth(const Config& cfg, const GlobalOptions& opts) {
    ResolvedSynth r;
    r.map_spec = phantom_from_config(cfg);
    r.layered = layers_from_config(cfg, r.map_spec);
    r.noise = noise_from_config(cfg, opts);
    r.n_frames = static_cast<int>(cfg.get_int_or("synth", "n_frames", 1));
    if (r.n_frames < 1) throw ConfigError("[synth] n_frames must be >= 1");
    r.center_frequency = cfg.get_num_or("synth", "center_frequency", 8.0);
    r.emit_spectra = cfg.get_bool_or("synth", "emit_spectra", false);
    r.response = response_from_config(cfg, r.map_spec.grid);
    return r;
}

// Full resolved parameter echo; feeding this back through run_synth
// reproduces the dataset byte for byte.
Config synth_manifest(const Config& cfg, const ResolvedSynth& r) {
    Config m;
    m.set("tool", "name", kToolName);
    m.set("tool", "version", kToolVersion);
    const SpectralGrid& g = r.map_spec.grid;
    m.set_num("grid", "f_min", g.freqs_mhz.front());
    m.set_num("grid", "f_max", g.freqs_mhz.back());
    m.set_int("grid", "n_freqs", g.n_freqs());
    m.set_num("grid", "z_min", g.depths_cm.front());
    m.set_num("grid", "z_max", g.depths_cm.back());
    m.set_int("grid", "n_depths", g.n_depths());
    m.set_num("calibration", "alpha0_db", r.map_spec.background.alpha0_db);
    m.set_num("calibration", "beta", r.map_spec.background.beta);
    m.set_num("calibration", "nu", r.map_spec.background.nu);
    m.set_int("phantom", "n_lateral", r.map_spec.n_lateral);
    m.set_num("phantom", "lateral_pitch", r.map_spec.lateral_pitch_cm);
    if (cfg.has("phantom", "disks")) m.set("phantom", "disks", cfg.get_str("phantom", "disks"));
    if (cfg.has("phantom", "layers")) m.set("phantom", "layers", cfg.get_str("phantom", "layers"));
    m.set_num("noise", "sigma0", r.noise.sigma0);
    m.set_num("noise", "slope_fz", r.noise.slope_fz);
    m.set_int("noise", "seed", static_cast<long>(r.noise.seed));
    m.set_int("synth", "n_frames", r.n_frames);
    m.set_num("synth", "center_frequency", r.center_frequency);
    m.set("synth", "emit_spectra", r.emit_spectra ? "true" : "false");
    m.set("synth", "response", cfg.get_str_or("synth", "response", "flat"));
    return m;
}

}  // namespace

int run_synth(Config cfg, const GlobalOptions& opts) {
    const ResolvedSynth r = resolve_synth(cfg, opts);
    const SpectralGrid& grid = r.map_spec.grid;
    const int n_lat = r.map_spec.n_lateral;

    const Config manifest = synth_manifest(cfg, r);
    const std::string hash = config_hash(manifest);
    fs::create_directories(opts.out_dir);
    manifest.save(opts.out_dir / "manifest.cfg", std::string("qus-manifest v1, cmd=synth, cfg=") + hash);

    // ground truth maps
    MapTruth truth;
    if (r.layered) {
        const TissueField f = true_field(*r.layered);
        const ParamColumn p = true_params(*r.layered);
        const int nr = grid.n_depths();
        truth.alpha_eff_db = f.alpha_eff_db.replicate(1, n_lat);
        truth.beta = f.beta.replicate(1, n_lat);
        truth.nu = f.nu.replicate(1, n_lat);
        truth.a = p.a.replicate(1, n_lat);
        truth.b = p.b.replicate(1, n_lat);
        truth.n = p.n.replicate(1, n_lat);
        (void)nr;
    } else {
        truth = map_truth(r.map_spec);
    }
    Eigen::MatrixXd gt_bsc(grid.n_depths(), n_lat);
    for (int c = 0; c < n_lat; ++c)
        for (int i = 0; i < grid.n_depths(); ++i)
            gt_bsc(i, c) = bsc_at(truth.beta(i, c), truth.nu(i, c), r.center_frequency);

    write_lateral_map(opts.out_dir / "gt_a.csv", truth.a, grid, "synth", hash);
    write_lateral_map(opts.out_dir / "gt_b.csv", truth.b, grid, "synth", hash);
    write_lateral_map(opts.out_dir / "gt_n.csv", truth.n, grid, "synth", hash);
    write_lateral_map(opts.out_dir / "gt_alpha_eff.csv", truth.alpha_eff_db, grid, "synth", hash);
    write_lateral_map(opts.out_dir / "gt_beta.csv", truth.beta, grid, "synth", hash);
    write_lateral_map(opts.out_dir / "gt_nu.csv", truth.nu, grid, "synth", hash);
    write_lateral_map(opts.out_dir / "gt_bsc_fc.csv", gt_bsc, grid, "synth", hash);

    // log-ratio frames, one file per (frame, column); column seeds derive
    // from the base seed so columns stay independent and reproducible
    for (int c = 0; c < n_lat; ++c) {
        NoiseSpec col_noise = r.noise;
        col_noise.seed = r.noise.seed + static_cast<std::uint64_t>(c);
        const std::vector<LogRatioMap> frames = generate_column(r.column(c), col_noise, r.n_frames);
        for (int f = 0; f < r.n_frames; ++f)
            write_fz_map(opts.out_dir / frame_col_name(f, c), frames[f], grid, "synth", hash);
    }

    if (r.emit_spectra) {
        // lateral-averaged raw spectra pair for the weighting pipeline
        Eigen::MatrixXd s_sum, r_sum;
        for (int c = 0; c < n_lat; ++c) {
            NoiseSpec col_noise = r.noise;
            col_noise.seed = r.noise.seed + 1000000007ull + static_cast<std::uint64_t>(c);
            auto [s_s, s_r] = generate_spectra_pair(r.column(c), r.response, col_noise);
            if (c == 0) {
                s_sum = s_s;
                r_sum = s_r;
            } else {
                s_sum += s_s;
                r_sum += s_r;
            }
        }
        s_sum /= double(n_lat);
        r_sum /= double(n_lat);
        write_fz_map(opts.out_dir / "spec_sample.csv", s_sum, grid, "synth", hash);
        write_fz_map(opts.out_dir / "spec_reference.csv", r_sum, grid, "synth", hash);
    }
    return 0;
}

namespace {

struct ResolvedEstimate {
    fs::path input_dir;
    Config dataset;  // the synth manifest
    SpectralGrid grid;
    ReferenceCalibration calib;
    int n_frames = 1;
    int n_lateral = 1;
    EstimateConfig est;
    Eigen::MatrixXd weights;  // N_F x N_R
    double center_frequency = 8.0;
    bool emit_per_frame = false;
};

ResolvedEstimate resolve_estimate(const Config& cfg) {
    ResolvedEstimate r;
    r.input_dir = cfg.get_str("estimate", "input_dir");
    const fs::path manifest_path = r.input_dir / "manifest.cfg";
    if (!fs::exists(manifest_path))
        throw DataError("missing dataset manifest '" + manifest_path.string() + "'");
    r.dataset = Config::load(manifest_path);
    r.grid = grid_from_config(r.dataset);
    r.calib = calib_from_config(r.dataset);
    r.n_frames = static_cast<int>(r.dataset.get_int_or("synth", "n_frames", 1));
    r.n_lateral = static_cast<int>(r.dataset.get_int_or("phantom", "n_lateral", 1));

    r.est.method = method_from_name(cfg.get_str_or("estimate", "method", "admm_l1l2"));
    SolverConfig& s = r.est.solver;
    s.rho = cfg.get_num_or("estimate", "rho", 1.0);
    s.lambda = cfg.get_num_or("estimate", "lambda", 0.0);
    s.lambda1 = cfg.get_num_or("estimate", "lambda1", 0.0);
    s.lambda2 = cfg.get_num_or("estimate", "lambda2", 0.0);
    s.max_iter = static_cast<int>(cfg.get_int_or("estimate", "max_iter", 5000));
    s.eps_abs = cfg.get_num_or("estimate", "eps_abs", 1e-6);
    s.eps_rel = cfg.get_num_or("estimate", "eps_rel", 1e-4);
    const std::string mode = cfg.get_str_or("estimate", "data_mode", "paper_literal");
    if (mode == "paper_literal")
        s.data_mode = DataMode::paper_literal;
    else if (mode == "normal_equations")
        s.data_mode = DataMode::normal_equations;
    else
        throw ConfigError("[estimate] data_mode must be paper_literal or normal_equations");
    const std::string prox = cfg.get_str_or("estimate", "prox_variant", "derived");
    if (prox == "derived")
        s.prox_variant = ProxVariant::derived;
    else if (prox == "paper_literal")
        s.prox_variant = ProxVariant::paper_literal;
    else
        throw ConfigError("[estimate] prox_variant must be derived or paper_literal");
    s.validate();
    r.est.reg_wa = cfg.get_num_or("estimate", "reg_wa", 1.0);
    r.est.reg_wb = cfg.get_num_or("estimate", "reg_wb", 1.0);
    r.est.reg_wn = cfg.get_num_or("estimate", "reg_wn", 1.0);
    r.est.threads = static_cast<int>(cfg.get_int_or("estimate", "threads", 0));

    const std::string weights = cfg.get_str_or("estimate", "weights", "uniform");
    if (weights == "uniform") {
        r.weights = Eigen::MatrixXd::Ones(r.grid.n_freqs(), r.grid.n_depths());
    } else {
        r.weights = read_fz_map(weights, r.grid);
        if ((r.weights.array() < 0).any() || !r.weights.allFinite())
            throw DataError("weight map '" + weights + "' has negative or non-finite entries");
    }
    r.center_frequency = cfg.get_num_or("estimate", "center_frequency",
                                        r.dataset.get_num_or("synth", "center_frequency", 8.0));
    r.emit_per_frame = cfg.get_bool_or("estimate", "emit_per_frame", false);
    return r;
}

Config estimate_manifest(const ResolvedEstimate& r) {
    Config m;
    m.set("tool", "name", kToolName);
    m.set("tool", "version", kToolVersion);
    m.set("estimate", "input_dir", r.input_dir.string());
    m.set("estimate", "method", method_name(r.est.method));
    m.set_num("estimate", "rho", r.est.solver.rho);
    m.set_num("estimate", "lambda", r.est.solver.lambda);
    m.set_num("estimate", "lambda1", r.est.solver.lambda1);
    m.set_num("estimate", "lambda2", r.est.solver.lambda2);
    m.set_int("estimate", "max_iter", r.est.solver.max_iter);
    m.set_num("estimate", "eps_abs", r.est.solver.eps_abs);
    m.set_num("estimate", "eps_rel", r.est.solver.eps_rel);
    m.set("estimate", "data_mode",
          r.est.solver.data_mode == DataMode::paper_literal ? "paper_literal" : "normal_equations");
    m.set("estimate", "prox_variant",
          r.est.solver.prox_variant == ProxVariant::derived ? "derived" : "paper_literal");
    m.set_num("estimate", "reg_wa", r.est.reg_wa);
    m.set_num("estimate", "reg_wb", r.est.reg_wb);
    m.set_num("estimate", "reg_wn", r.est.reg_wn);
    m.set_num("estimate", "center_frequency", r.center_frequency);
    m.set("estimate", "emit_per_frame", r.emit_per_frame ? "true" : "false");
    m.set("dataset", "cfg", config_hash(r.dataset));
    return m;
}

}  // namespace

int run_estimate(Config cfg, const GlobalOptions& opts) {
    const ResolvedEstimate r = resolve_estimate(cfg);
    const Config manifest = estimate_manifest(r);
    const std::string hash = config_hash(manifest);
    fs::create_directories(opts.out_dir);
    manifest.save(opts.out_dir / "manifest.cfg", std::string("qus-manifest v1, cmd=estimate, cfg=") + hash);

    const int nr = r.grid.n_depths();
    std::vector<Eigen::MatrixXd> per_frame_alpha, per_frame_bsc;
    Eigen::MatrixXd sum_a = Eigen::MatrixXd::Zero(nr, r.n_lateral);
    Eigen::MatrixXd sum_b = sum_a, sum_n = sum_a, sum_alpha = sum_a, sum_beta = sum_a, sum_nu = sum_a,
                    sum_bsc = sum_a;

    std::ofstream reports(opts.out_dir / "reports.csv", std::ios::binary);
    if (!reports) throw DataError("cannot write reports.csv");
    reports << "# qus-report v1, cmd=estimate, cfg=" << hash << "\n";
    reports << "frame,column,method,data_mode,iterations,converged,primal_residual,dual_residual,objective\n";

    bool all_converged = true;
    for (int f = 0; f < r.n_frames; ++f) {
        std::vector<LogRatioMap> columns;
        columns.reserve(r.n_lateral);
        for (int c = 0; c < r.n_lateral; ++c) {
            const fs::path path = r.input_dir / frame_col_name(f, c);
            if (!fs::exists(path)) throw DataError("missing input map '" + path.string() + "'");
            columns.push_back(read_fz_map(path, r.grid));
        }
        const MapEstimate est =
            estimate_map(columns, r.grid, r.weights, r.calib, r.center_frequency, r.est);
        for (const auto& failure : est.failures) std::cerr << "estimate: frame " << f << ": " << failure << "\n";
        for (int c = 0; c < r.n_lateral; ++c) {
            const SolveReport& rep = est.reports[c];
            if (!rep.converged) all_converged = false;
            reports << f << "," << c << "," << method_name(r.est.method) << ","
                    << (rep.data_mode == DataMode::paper_literal ? "paper_literal" : "normal_equations") << ","
                    << rep.iterations << "," << (rep.converged ? 1 : 0) << ","
                    << format_double(rep.primal_residual) << "," << format_double(rep.dual_residual) << ","
                    << format_double(rep.objective_trace.empty() ? 0.0 : rep.objective_trace.back()) << "\n";
        }
        sum_a += est.a;
        sum_b += est.b;
        sum_n += est.n;
        sum_alpha += est.alpha_eff_db;
        sum_beta += est.beta;
        sum_nu += est.nu;
        sum_bsc += est.bsc_fc;
        if (r.emit_per_frame) {
            char buf[48];
            std::snprintf(buf, sizeof buf, "est_f%03d_alpha_eff.csv", f);
            write_lateral_map(opts.out_dir / buf, est.alpha_eff_db, r.grid, "estimate", hash);
            std::snprintf(buf, sizeof buf, "est_f%03d_bsc_fc.csv", f);
            write_lateral_map(opts.out_dir / buf, est.bsc_fc, r.grid, "estimate", hash);
        }
    }

    const double nf = r.n_frames;
    write_lateral_map(opts.out_dir / "est_a.csv", sum_a / nf, r.grid, "estimate", hash);
    write_lateral_map(opts.out_dir / "est_b.csv", sum_b / nf, r.grid, "estimate", hash);
    write_lateral_map(opts.out_dir / "est_n.csv", sum_n / nf, r.grid, "estimate", hash);
    write_lateral_map(opts.out_dir / "est_alpha_eff.csv", sum_alpha / nf, r.grid, "estimate", hash);
    write_lateral_map(opts.out_dir / "est_beta.csv", sum_beta / nf, r.grid, "estimate", hash);
    write_lateral_map(opts.out_dir / "est_nu.csv", sum_nu / nf, r.grid, "estimate", hash);
    write_lateral_map(opts.out_dir / "est_bsc_fc.csv", sum_bsc / nf, r.grid, "estimate", hash);

    if (!all_converged && opts.strict) {
        std::cerr << "estimate: convergence failure under --strict\n";
        return 3;
    }
    return 0;
}

int run_weights(Config cfg, const GlobalOptions& opts) {
    const std::string sample_path = cfg.get_str("weights", "sample_file");
    const std::string reference_path = cfg.get_str("weights", "reference_file");
    if (!fs::exists(sample_path)) throw DataError("missing sample spectra file '" + sample_path + "'");
    if (!fs::exists(reference_path)) throw DataError("missing reference spectra file '" + reference_path + "'");

    WeightConfig wc;
    wc.band_fraction = cfg.get_num_or("weights", "band_fraction", 0.8);
    wc.upper_fraction = cfg.get_num_or("weights", "upper_fraction", 0.9);
    wc.lower_fraction = cfg.get_num_or("weights", "lower_fraction", 1.67);
    wc.floor = cfg.get_num_or("weights", "floor", 0.05);
    const std::string combine = cfg.get_str_or("weights", "combine", "both");
    if (combine == "both")
        wc.combine = WeightConfig::CombineMode::both;
    else if (combine == "reference_only")
        wc.combine = WeightConfig::CombineMode::reference_only;
    else
        throw ConfigError("[weights] combine must be both or reference_only");
    wc.validate();

    const MapFile sample = read_map(sample_path);
    const MapFile reference = read_map(reference_path);
    if (sample.row_axis != reference.row_axis || sample.col_axis != reference.col_axis)
        throw DataError("sample and reference spectra grids differ");
    if ((sample.values.array() <= 0).any() || (reference.values.array() <= 0).any())
        throw DataError("spectra must be strictly positive to take logs");

    Config manifest;
    manifest.set("tool", "name", kToolName);
    manifest.set("tool", "version", kToolVersion);
    manifest.set("weights", "sample_file", sample_path);
    manifest.set("weights", "reference_file", reference_path);
    manifest.set_num("weights", "band_fraction", wc.band_fraction);
    manifest.set_num("weights", "upper_fraction", wc.upper_fraction);
    manifest.set_num("weights", "lower_fraction", wc.lower_fraction);
    manifest.set_num("weights", "floor", wc.floor);
    manifest.set("weights", "combine", combine);
    const std::string hash = config_hash(manifest);
    fs::create_directories(opts.out_dir);
    manifest.save(opts.out_dir / "manifest.cfg", std::string("qus-manifest v1, cmd=weights, cfg=") + hash);

    // file maps are depth-major; weighting runs freq-major like the solver
    const Eigen::MatrixXd s_log = sample.values.transpose().array().log();
    const Eigen::MatrixXd r_log = reference.values.transpose().array().log();

    const Eigen::MatrixXd w_s = phantom_weights(s_log, wc.upper_fraction, wc.lower_fraction);
    const Eigen::MatrixXd w_r = phantom_weights(r_log, wc.upper_fraction, wc.lower_fraction);
    const Eigen::MatrixXd w_d = combine_weights(w_s, w_r, wc.combine);

    SpectralGrid grid;
    grid.depths_cm = sample.row_axis;
    grid.freqs_mhz = sample.col_axis;

    write_fz_map(opts.out_dir / "w_sample_raw.csv", w_s, grid, "weights", hash);
    write_fz_map(opts.out_dir / "w_reference_raw.csv", w_r, grid, "weights", hash);
    write_fz_map(opts.out_dir / "w_d_raw.csv", w_d, grid, "weights", hash);
    write_fz_map(opts.out_dir / "w_sample.csv", normalize_floor(w_s, wc.floor), grid, "weights", hash);
    write_fz_map(opts.out_dir / "w_reference.csv", normalize_floor(w_r, wc.floor), grid, "weights", hash);
    write_fz_map(opts.out_dir / "w_d.csv", normalize_floor(w_d, wc.floor), grid, "weights", hash);

    // per-depth selected band, sample and reference
    std::ofstream bands(opts.out_dir / "bands.csv", std::ios::binary);
    if (!bands) throw DataError("cannot write bands.csv");
    bands << "# qus-report v1, cmd=weights, cfg=" << hash << "\n";
    bands << "depth,sample_lo,sample_hi,reference_lo,reference_hi\n";
    const auto sample_band = select_band(s_log, wc.band_fraction);
    const auto reference_band = select_band(r_log, wc.band_fraction);
    for (size_t i = 0; i < sample_band.size(); ++i)
        bands << format_double(grid.depths_cm[i]) << "," << sample_band[i].lo << "," << sample_band[i].hi << ","
              << reference_band[i].lo << "," << reference_band[i].hi << "\n";
    return 0;
}

int run_evaluate(Config cfg, const GlobalOptions& opts) {
    const std::string gt_dir = cfg.get_str("evaluate", "gt_dir");
    const std::string methods_text = cfg.get_str("evaluate", "methods");
    const std::string rois_text = cfg.get_str("evaluate", "rois");
    const std::string variance_mode = cfg.get_str_or("evaluate", "variance_mode", "roi_cells");
    if (variance_mode != "roi_cells" && variance_mode != "across_frames")
        throw ConfigError("[evaluate] variance_mode must be roi_cells or across_frames");

    const MapFile gt_alpha = read_map(fs::path(gt_dir) / "gt_alpha_eff.csv");
    const MapFile gt_bsc = read_map(fs::path(gt_dir) / "gt_bsc_fc.csv");

    std::vector<ROISpec> rois;
    for (const std::string& item : split(rois_text, ';')) {
        if (item.empty()) continue;
        const auto f = split(item, ':');
        if (f.size() != 5) throw ConfigError("roi '" + item + "' wants name:d0:d1:l0:l1");
        ROISpec roi;
        roi.name = f[0];
        roi.depth_lo = static_cast<int>(to_num(f[1], "rois"));
        roi.depth_hi = static_cast<int>(to_num(f[2], "rois"));
        roi.lat_lo = static_cast<int>(to_num(f[3], "rois"));
        roi.lat_hi = static_cast<int>(to_num(f[4], "rois"));
        roi.validate(static_cast<int>(gt_alpha.values.rows()), static_cast<int>(gt_alpha.values.cols()));
        rois.push_back(roi);
    }
    if (rois.empty()) throw ConfigError("[evaluate] rois is empty");

    Config manifest;
    manifest.set("tool", "name", kToolName);
    manifest.set("tool", "version", kToolVersion);
    manifest.set("evaluate", "gt_dir", gt_dir);
    manifest.set("evaluate", "methods", methods_text);
    manifest.set("evaluate", "rois", rois_text);
    manifest.set("evaluate", "variance_mode", variance_mode);
    const std::string hash = config_hash(manifest);
    fs::create_directories(opts.out_dir);
    manifest.save(opts.out_dir / "manifest.cfg", std::string("qus-manifest v1, cmd=evaluate, cfg=") + hash);

    std::ofstream out(opts.out_dir / "metrics.csv", std::ios::binary);
    if (!out) throw DataError("cannot write metrics.csv");
    out << "# qus-report v1, cmd=evaluate, cfg=" << hash << "\n";
    out << "method,roi,parameter,metric,value\n";

    auto roi_mean = [](const Eigen::MatrixXd& m, const ROISpec& roi) {
        double sum = 0;
        for (int i = roi.depth_lo; i <= roi.depth_hi; ++i)
            for (int c = roi.lat_lo; c <= roi.lat_hi; ++c) sum += m(i, c);
        return sum / roi.n_cells();
    };

    for (const std::string& item : split(methods_text, ';')) {
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError("method '" + item + "' wants name:directory");
        const std::string name = item.substr(0, colon);
        const fs::path dir = item.substr(colon + 1);
        const MapFile est_alpha = read_map(dir / "est_alpha_eff.csv");
        const MapFile est_bsc = read_map(dir / "est_bsc_fc.csv");
        if (est_alpha.values.rows() != gt_alpha.values.rows() ||
            est_alpha.values.cols() != gt_alpha.values.cols())
            throw DataError("estimate maps in '" + dir.string() + "' do not match ground truth shape");

        std::vector<Eigen::MatrixXd> frames_alpha, frames_bsc;
        if (variance_mode == "across_frames") {
            for (int f = 0;; ++f) {
                char buf[48];
                std::snprintf(buf, sizeof buf, "est_f%03d_alpha_eff.csv", f);
                const fs::path pa = dir / buf;
                std::snprintf(buf, sizeof buf, "est_f%03d_bsc_fc.csv", f);
                const fs::path pb = dir / buf;
                if (!fs::exists(pa) || !fs::exists(pb)) break;
                frames_alpha.push_back(read_map(pa).values);
                frames_bsc.push_back(read_map(pb).values);
            }
            if (frames_alpha.empty())
                throw DataError("variance_mode=across_frames needs per-frame maps in '" + dir.string() +
                                "' (estimate with emit_per_frame = true)");
        }

        for (const ROISpec& roi : rois) {
            const double gt_a = roi_mean(gt_alpha.values, roi);
            const double gt_b = roi_mean(gt_bsc.values, roi);
            std::pair<double, double> alpha, bsc;
            if (variance_mode == "roi_cells") {
                alpha = bias_variance_attenuation(est_alpha.values, roi, gt_a);
                bsc = bias_variance_bsc_db(est_bsc.values, roi, gt_b);
            } else {
                alpha = bias_variance_attenuation_frames(frames_alpha, roi, gt_a);
                bsc = bias_variance_bsc_db_frames(frames_bsc, roi, gt_b);
            }
            out << name << "," << roi.name << ",alpha,bias," << format_double(alpha.first) << "\n";
            out << name << "," << roi.name << ",alpha,variance," << format_double(alpha.second) << "\n";
            out << name << "," << roi.name << ",bsc,bias," << format_double(bsc.first) << "\n";
            out << name << "," << roi.name << ",bsc,variance," << format_double(bsc.second) << "\n";
        }
    }
    return 0;
}

int run_sweep(Config cfg, const GlobalOptions& opts) {
    // ladder per the tuning heuristic: 0.1, 10, 1e2, ..., 1e8
    std::vector<double> ladder;
    const std::string ladder_text = cfg.get_str_or("sweep", "ladder", "0.1,10,1e2,1e3,1e4,1e5,1e6,1e7,1e8");
    for (const std::string& item : split(ladder_text, ',')) ladder.push_back(to_num(item, "[sweep] ladder"));
    if (ladder.empty()) throw ConfigError("[sweep] ladder is empty");
    for (size_t k = 0; k < ladder.size(); ++k)
        if (!(ladder[k] > 0) || (k > 0 && ladder[k] <= ladder[k - 1]))
            throw ConfigError("[sweep] ladder must be strictly increasing and positive");

    ResolvedEstimate r = resolve_estimate(cfg);
    if (r.est.method == Method::lsq) throw ConfigError("sweep needs a regularized method, not lsq");

    Config manifest = estimate_manifest(r);
    manifest.set("sweep", "ladder", ladder_text);
    const std::string hash = config_hash(manifest);
    fs::create_directories(opts.out_dir);
    manifest.save(opts.out_dir / "manifest.cfg", std::string("qus-manifest v1, cmd=sweep, cfg=") + hash);

    // sweep on the frame-averaged map: cheap and low-noise
    std::vector<LogRatioMap> columns;
    for (int c = 0; c < r.n_lateral; ++c) {
        Eigen::MatrixXd sum;
        for (int f = 0; f < r.n_frames; ++f) {
            const Eigen::MatrixXd m = read_fz_map(r.input_dir / frame_col_name(f, c), r.grid);
            if (f == 0)
                sum = m;
            else
                sum += m;
        }
        columns.push_back(sum / double(r.n_frames));
    }

    struct ParamMaps {
        Eigen::MatrixXd a, b, n;
    };
    auto solve_at = [&](double w) {
        EstimateConfig e = r.est;
        switch (e.method) {
            case Method::lsq: break;
            case Method::l2l2:
            case Method::admm_l1: e.solver.lambda = w; break;
            case Method::admm_l1l2: e.solver.lambda1 = e.solver.lambda2 = w; break;
        }
        const MapEstimate est = estimate_map(columns, r.grid, r.weights, r.calib, r.center_frequency, e);
        if (!est.failures.empty()) throw DataError("sweep: " + est.failures.front());
        return ParamMaps{est.a, est.b, est.n};
    };
    EstimateConfig lsq_cfg = r.est;
    lsq_cfg.method = Method::lsq;
    const MapEstimate lsq_est = estimate_map(columns, r.grid, r.weights, r.calib, r.center_frequency, lsq_cfg);
    if (!lsq_est.failures.empty()) throw DataError("sweep: " + lsq_est.failures.front());
    const ParamMaps lsq{lsq_est.a, lsq_est.b, lsq_est.n};

    auto rel_diff = [](const ParamMaps& x, const ParamMaps& ref) {
        auto one = [](const Eigen::MatrixXd& m, const Eigen::MatrixXd& q) {
            const double denom = std::max(q.norm(), 1e-300);
            return (m - q).norm() / denom;
        };
        return std::max({one(x.a, ref.a), one(x.b, ref.b), one(x.n, ref.n)});
    };
    auto spread = [](const Eigen::MatrixXd& m) {
        double worst = 0;
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            worst = std::max(worst, m.col(c).maxCoeff() - m.col(c).minCoeff());
        return worst;
    };

    const double dyn_a = std::max(spread(lsq.a), 1e-300);
    const double dyn_b = std::max(spread(lsq.b), 1e-300);
    const double dyn_n = std::max(spread(lsq.n), 1e-300);

    std::ofstream out(opts.out_dir / "sweep.csv", std::ios::binary);
    if (!out) throw DataError("cannot write sweep.csv");
    out << "# qus-report v1, cmd=sweep, cfg=" << hash << "\n";
    out << "weight,classification,rel_vs_lsq,spread_a,spread_b,spread_n\n";
    out << "0,lsq_anchor,0," << format_double(spread(lsq.a)) << "," << format_double(spread(lsq.b)) << ","
        << format_double(spread(lsq.n)) << "\n";

    double largest_too_small = 0, smallest_too_large = 0;
    bool have_small = false, have_large = false;
    for (double w : ladder) {
        const ParamMaps maps = solve_at(w);
        const double diff = rel_diff(maps, lsq);
        const double sa = spread(maps.a), sb = spread(maps.b), sn = spread(maps.n);
        const bool too_small = diff < 0.01;
        const bool too_large = sa < 0.01 * dyn_a && sb < 0.01 * dyn_b && sn < 0.01 * dyn_n;
        std::string cls = "candidate_range";
        if (too_small) {
            cls = "too_small";
            largest_too_small = w;
            have_small = true;
        } else if (too_large) {
            cls = "too_large";
            if (!have_large) smallest_too_large = w;
            have_large = true;
        }
        out << format_double(w) << "," << cls << "," << format_double(diff) << "," << format_double(sa) << ","
            << format_double(sb) << "," << format_double(sn) << "\n";
    }

    Config verdict;
    if (have_small && have_large && largest_too_small < smallest_too_large) {
        const double candidate = std::sqrt(largest_too_small * smallest_too_large);
        const ParamMaps at = solve_at(candidate);
        const ParamMaps doubled = solve_at(2.0 * candidate);
        const double diff = rel_diff(doubled, at);
        verdict.set_num("sweep_result", "candidate", candidate);
        verdict.set_num("sweep_result", "doubling_rel_diff", diff);
        verdict.set("sweep_result", "verdict", diff < 0.05 ? "stable" : "unstable");
    } else {
        verdict.set("sweep_result", "verdict", "inconclusive");
        verdict.set("sweep_result", "reason",
                    have_small ? "no ladder weight produced depth-constant maps"
                               : "no ladder weight reproduced the LSQ maps");
    }
    verdict.save(opts.out_dir / "verdict.cfg", std::string("qus-report v1, cmd=sweep, cfg=") + hash);
    return 0;
}

}  // namespace qus::cmd
