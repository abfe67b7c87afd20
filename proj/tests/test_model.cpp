#include "qus/model.hpp"
#include "qus/synth.hpp"

#include <doctest.h>

#include <cmath>

using namespace qus;

TEST_CASE("db/np conversion") {
    CHECK(units::db_to_np(0.0) == 0.0);
    // 20/ln(10) dB is one neper
    CHECK(units::db_to_np(8.685889638065035) == doctest::Approx(1.0).epsilon(1e-14));
    // reference phantom slope
    CHECK(units::db_to_np(0.6035) == doctest::Approx(0.6035 * std::log(10.0) / 20.0).epsilon(1e-14));
    CHECK(units::db_to_np(0.6035) == doctest::Approx(0.069480505181095341).epsilon(1e-13));

    for (double v : {0.1, 0.5, 0.7, 3.2, 100.0}) {
        CHECK(units::np_to_db(units::db_to_np(v)) == doctest::Approx(v).epsilon(1e-12));
    }
}

TEST_CASE("spectral grid validation") {
    CHECK_NOTHROW(make_grid(2, 8, 16, 0.5, 4, 32).validate());
    SpectralGrid g;
    g.freqs_mhz = {2, 3};
    g.depths_cm = {1.0};
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.depths_cm = {1.0, 0.5};
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.depths_cm = {1.0, 2.0};
    g.freqs_mhz = {-1, 3};
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("forward log ratio") {
    SUBCASE("zero parameters give the zero surface") {
        const SpectralGrid grid = make_grid(1, 8, 8, 0.5, 4, 6);
        const LogRatioMap x = forward_log_ratio(ParamColumn(6), grid);
        CHECK(x.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("single cell hand evaluation") {
        SpectralGrid grid;
        grid.freqs_mhz = {2.0};
        grid.depths_cm = {3.0};
        ParamColumn p(1);
        p.a[0] = 0.1;
        p.b[0] = 1.0;
        const LogRatioMap x = forward_log_ratio(p, grid);
        CHECK(x(0, 0) == doctest::Approx(-1.4).epsilon(1e-15));
    }
    SUBCASE("n-term vanishes at 1 MHz") {
        SpectralGrid grid;
        grid.freqs_mhz = {1.0};
        grid.depths_cm = {2.0};
        ParamColumn p(1);
        p.n[0] = 7.5;
        CHECK(forward_log_ratio(p, grid)(0, 0) == 0.0);
    }
    SUBCASE("dimension mismatch throws") {
        const SpectralGrid grid = make_grid(1, 8, 8, 0.5, 4, 6);
        CHECK_THROWS_AS(forward_log_ratio(ParamColumn(5), grid), std::invalid_argument);
    }
    SUBCASE("linearity in the parameters") {
        const SpectralGrid grid = make_grid(2, 9, 7, 0.4, 3.5, 5);
        GaussianRng rng(77);
        ParamColumn p(5), q(5);
        for (int i = 0; i < 5; ++i) {
            p.a[i] = 0.05 * rng.normal();
            p.b[i] = rng.normal();
            p.n[i] = rng.normal();
            q.a[i] = 0.05 * rng.normal();
            q.b[i] = rng.normal();
            q.n[i] = rng.normal();
        }
        const double c = 2.7;
        ParamColumn cp(5), pq(5);
        cp.a = c * p.a; cp.b = c * p.b; cp.n = c * p.n;
        pq.a = p.a + q.a; pq.b = p.b + q.b; pq.n = p.n + q.n;
        const LogRatioMap xp = forward_log_ratio(p, grid);
        const LogRatioMap xq = forward_log_ratio(q, grid);
        CHECK((forward_log_ratio(cp, grid) - c * xp).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((forward_log_ratio(pq, grid) - (xp + xq)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("pointwise physics") {
    SUBCASE("bsc_at") {
        // calibration sheet: sigma_b,r(8 MHz) = 3.74e-3
        CHECK(bsc_at(2.9966e-6, 3.4281, 8.0) == doctest::Approx(3.74e-3).epsilon(2e-3));
        CHECK(bsc_at(0.5, 2.2, 1.0) == 0.5);
        CHECK(bsc_at(0.5, 0.0, 17.0) == 0.5);
        CHECK_THROWS_AS(bsc_at(-1.0, 2.0, 5.0), std::invalid_argument);
        CHECK_THROWS_AS(bsc_at(1.0, 2.0, 0.0), std::invalid_argument);
    }
    SUBCASE("attenuation_factor") {
        CHECK(attenuation_factor(0.0, 5.0, 3.0) == 1.0);
        CHECK(attenuation_factor(0.1, 5.0, 0.0) == 1.0);
        CHECK(attenuation_factor(0.05, 5.0, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
        // monotone decreasing in each argument
        CHECK(attenuation_factor(0.05, 6.0, 2.0) < attenuation_factor(0.05, 5.0, 2.0));
        CHECK(attenuation_factor(0.05, 5.0, 2.5) < attenuation_factor(0.05, 5.0, 2.0));
        CHECK(attenuation_factor(0.06, 5.0, 2.0) < attenuation_factor(0.05, 5.0, 2.0));
        CHECK(attenuation_factor(0.05, 5.0, 2.0) <= 1.0);
    }
}

TEST_CASE("reconstruct") {
    ReferenceCalibration calib;
    calib.alpha0_db = 0.6035;
    calib.beta = 2.9966e-6;
    calib.nu = 3.4281;

    SUBCASE("zero parameters reproduce the reference") {
        const TissueField f = reconstruct(ParamColumn(4), calib);
        for (int i = 0; i < 4; ++i) {
            CHECK(f.alpha_eff_db[i] == doctest::Approx(calib.alpha0_db));
            CHECK(f.beta[i] == doctest::Approx(calib.beta));
            CHECK(f.nu[i] == doctest::Approx(calib.nu));
        }
    }
    SUBCASE("unit b scales beta by e") {
        ParamColumn p(2);
        p.b[0] = 1.0;
        const TissueField f = reconstruct(p, calib);
        CHECK(f.beta[0] == doctest::Approx(std::exp(1.0) * calib.beta).epsilon(1e-14));
        CHECK(f.beta[1] == doctest::Approx(calib.beta).epsilon(1e-14));
    }
    SUBCASE("round trip with parameterize") {
        GaussianRng rng(5);
        TissueField f;
        f.alpha_eff_db.resize(6);
        f.beta.resize(6);
        f.nu.resize(6);
        for (int i = 0; i < 6; ++i) {
            f.alpha_eff_db[i] = 0.6 + 0.2 * rng.normal();
            f.beta[i] = calib.beta * std::exp(rng.normal());
            f.nu[i] = 3.0 + 0.3 * rng.normal();
        }
        const TissueField back = reconstruct(parameterize(f, calib), calib);
        for (int i = 0; i < 6; ++i) {
            CHECK(back.alpha_eff_db[i] == doctest::Approx(f.alpha_eff_db[i]).epsilon(1e-12));
            CHECK(back.beta[i] == doctest::Approx(f.beta[i]).epsilon(1e-12));
            CHECK(back.nu[i] == doctest::Approx(f.nu[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("composed physical ratio reproduces the linear model") {
    // synthesize both spectra through the physics, take the log ratio, and
    // compare against the linear surface
    const SpectralGrid grid = make_grid(2, 9, 12, 0.5, 4, 9);
    ReferenceCalibration calib;
    calib.alpha0_db = 0.6035;
    calib.beta = 2.9966e-6;
    calib.nu = 3.4281;

    GaussianRng rng(11);
    TissueField f;
    f.alpha_eff_db.resize(9);
    f.beta.resize(9);
    f.nu.resize(9);
    for (int i = 0; i < 9; ++i) {
        f.alpha_eff_db[i] = 0.7 + 0.1 * rng.normal();
        f.beta[i] = calib.beta * std::exp(0.5 * rng.normal());
        f.nu[i] = calib.nu + 0.2 * rng.normal();
    }
    const ParamColumn p = parameterize(f, calib);
    const LogRatioMap linear = forward_log_ratio(p, grid);

    const double alpha_r = units::db_to_np(calib.alpha0_db);
    for (int l = 0; l < grid.n_freqs(); ++l) {
        const double freq = grid.freqs_mhz[l];
        for (int i = 0; i < grid.n_depths(); ++i) {
            const double z = grid.depths_cm[i];
            const double s_ref = bsc_at(calib.beta, calib.nu, freq) * attenuation_factor(alpha_r, freq, z);
            const double s_smp = bsc_at(f.beta[i], f.nu[i], freq) *
                                 attenuation_factor(units::db_to_np(f.alpha_eff_db[i]), freq, z);
            CHECK(std::log(s_smp / s_ref) == doctest::Approx(linear(l, i)).epsilon(1e-10));
        }
    }
}
