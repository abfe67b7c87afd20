#include "qus/model.hpp"

#include <string>

namespace qus {

LogRatioMap forward_log_ratio(const ParamColumn& params, const SpectralGrid& grid) {
    params.check_consistent();
    if (params.n_depths() != grid.n_depths())
        throw std::invalid_argument("forward_log_ratio: params length " + std::to_string(params.n_depths()) +
                                    " != grid depths " + std::to_string(grid.n_depths()));
    const int nf = grid.n_freqs();
    const int nr = grid.n_depths();
    LogRatioMap x(nf, nr);
    for (int l = 0; l < nf; ++l) {
        const double f = grid.freqs_mhz[l];
        const double lnf = std::log(f);
        for (int i = 0; i < nr; ++i) {
            const double z = grid.depths_cm[i];
            x(l, i) = -4.0 * params.a[i] * f * z + params.b[i] + params.n[i] * lnf;
        }
    }
    return x;
}

double bsc_at(double beta, double nu, double f_mhz) {
    if (!(beta > 0.0)) throw std::invalid_argument("bsc_at: beta must be > 0");
    if (!(f_mhz > 0.0)) throw std::invalid_argument("bsc_at: frequency must be > 0");
    return beta * std::pow(f_mhz, nu);
}

double attenuation_factor(double alpha_np, double f_mhz, double z_cm) {
    return std::exp(-4.0 * f_mhz * alpha_np * z_cm);
}

TissueField reconstruct(const ParamColumn& params, const ReferenceCalibration& calib) {
    params.check_consistent();
    calib.validate();
    const int nr = params.n_depths();
    TissueField field;
    field.alpha_eff_db.resize(nr);
    field.beta.resize(nr);
    field.nu.resize(nr);
    for (int i = 0; i < nr; ++i) {
        field.alpha_eff_db[i] = units::np_to_db(params.a[i]) + calib.alpha0_db;
        field.beta[i] = calib.beta * std::exp(params.b[i]);
        field.nu[i] = calib.nu + params.n[i];
    }
    return field;
}

ParamColumn parameterize(const TissueField& field, const ReferenceCalibration& calib) {
    calib.validate();
    const int nr = field.n_depths();
    if (field.beta.size() != nr || field.nu.size() != nr)
        throw std::invalid_argument("parameterize: field arrays must share length");
    ParamColumn p(nr);
    for (int i = 0; i < nr; ++i) {
        if (!(field.beta[i] > 0.0)) throw std::invalid_argument("parameterize: beta must be > 0");
        p.a[i] = units::db_to_np(field.alpha_eff_db[i] - calib.alpha0_db);
        p.b[i] = std::log(field.beta[i]) - std::log(calib.beta);
        p.n[i] = field.nu[i] - calib.nu;
    }
    return p;
}

}  // namespace qus
