// Forward physics: reference-phantom-normalized log spectra as a linear
// function of the per-depth unknowns, and the back-transformation from
// solver unknowns to physical quantities.

#pragma once

#include "qus/types.hpp"

namespace qus {

// X[l,i] = -4 a_i f_l z_i + b_i + n_i ln(f_l).
// `params.a` is in Np/cm/MHz.
LogRatioMap forward_log_ratio(const ParamColumn& params, const SpectralGrid& grid);

// Power-law backscatter coefficient beta * f^nu at frequency f (MHz).
double bsc_at(double beta, double nu, double f_mhz);

// Two-way attenuation factor exp(-4 f alpha z), alpha in Np/cm/MHz.
double attenuation_factor(double alpha_np, double f_mhz, double z_cm);

// Solver unknowns -> physical field:
//   alpha_eff = a (as dB) + alpha0_r,  beta = beta_r e^b,  nu = nu_r + n.
TissueField reconstruct(const ParamColumn& params, const ReferenceCalibration& calib);

// Inverse of reconstruct; used by the synthesizer and in round-trip checks.
ParamColumn parameterize(const TissueField& field, const ReferenceCalibration& calib);

}  // namespace qus
