// qus — reference-phantom-normalized attenuation / backscatter estimation.
//
//   qus synth    --config run.cfg --out data/
//   qus estimate --config run.cfg --out est/
//   qus weights  --config run.cfg --out w/
//   qus evaluate --config run.cfg --out metrics/
//   qus sweep    --config run.cfg --out sweep/
//
// Exit codes: 0 ok, 1 usage/config error, 2 data error, 3 convergence
// failure under --strict.

#include "qus/commands.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"reference-phantom quantitative ultrasound estimation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    long seed = 0;
    bool seed_set = false;
    bool strict = false;

    app.add_option("--config", config_path, "config file (key = value, [section] headers)")->required();
    app.add_option("--out", out_dir, "output directory (created if missing)");
    app.add_option("--seed", seed, "override [noise] seed")->each([&](const std::string&) { seed_set = true; });
    app.add_flag("--strict", strict, "exit 3 when any column fails to converge");

    std::function<int(qus::Config, const qus::cmd::GlobalOptions&)> runner;
    app.add_subcommand("synth", "generate a synthetic dataset")
        ->callback([&] { runner = qus::cmd::run_synth; });
    app.add_subcommand("estimate", "estimate parameter maps from a dataset")
        ->callback([&] { runner = qus::cmd::run_estimate; });
    app.add_subcommand("weights", "build SNR weight maps from spectra")
        ->callback([&] { runner = qus::cmd::run_weights; });
    app.add_subcommand("evaluate", "ROI bias/variance metrics")
        ->callback([&] { runner = qus::cmd::run_evaluate; });
    app.add_subcommand("sweep", "regularization-weight ladder sweep")
        ->callback([&] { runner = qus::cmd::run_sweep; });

    CLI11_PARSE(app, argc, argv);

    qus::cmd::GlobalOptions opts;
    opts.out_dir = out_dir;
    opts.strict = strict;
    if (seed_set) opts.seed = seed;

    try {
        const qus::Config cfg = qus::Config::load(config_path);
        return runner(cfg, opts);
    } catch (const qus::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const qus::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
