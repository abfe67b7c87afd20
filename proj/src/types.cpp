#include "qus/types.hpp"

#include <string>

namespace qus {

void SpectralGrid::validate() const {
    if (n_freqs() < 2) throw std::invalid_argument("SpectralGrid: need at least 2 frequency bins");
    if (n_depths() < 2) throw std::invalid_argument("SpectralGrid: need at least 2 depth positions");
    for (int l = 0; l < n_freqs(); ++l) {
        if (!(freqs_mhz[l] > 0.0))
            throw std::invalid_argument("SpectralGrid: frequencies must be > 0 (bin " + std::to_string(l) + ")");
        if (l > 0 && !(freqs_mhz[l] > freqs_mhz[l - 1]))
            throw std::invalid_argument("SpectralGrid: frequencies must be strictly increasing");
    }
    for (int i = 0; i < n_depths(); ++i) {
        if (!(depths_cm[i] > 0.0))
            throw std::invalid_argument("SpectralGrid: depths must be > 0 (index " + std::to_string(i) + ")");
        if (i > 0 && !(depths_cm[i] > depths_cm[i - 1]))
            throw std::invalid_argument("SpectralGrid: depths must be strictly increasing");
    }
}

SpectralGrid make_grid(double f_min_mhz, double f_max_mhz, int n_freqs,
                       double z_min_cm, double z_max_cm, int n_depths) {
    SpectralGrid g;
    g.freqs_mhz.resize(n_freqs);
    g.depths_cm.resize(n_depths);
    for (int l = 0; l < n_freqs; ++l)
        g.freqs_mhz[l] = f_min_mhz + (f_max_mhz - f_min_mhz) * l / double(n_freqs - 1);
    for (int i = 0; i < n_depths; ++i)
        g.depths_cm[i] = z_min_cm + (z_max_cm - z_min_cm) * i / double(n_depths - 1);
    g.validate();
    return g;
}

Eigen::VectorXd ParamColumn::stacked() const {
    check_consistent();
    const int nr = n_depths();
    Eigen::VectorXd x(3 * nr);
    x.segment(0, nr) = a;
    x.segment(nr, nr) = b;
    x.segment(2 * nr, nr) = n;
    return x;
}

ParamColumn ParamColumn::from_stacked(const Eigen::VectorXd& x) {
    if (x.size() % 3 != 0) throw std::invalid_argument("ParamColumn: stacked vector length must be 3*N_R");
    const int nr = static_cast<int>(x.size()) / 3;
    ParamColumn p(nr);
    p.a = x.segment(0, nr);
    p.b = x.segment(nr, nr);
    p.n = x.segment(2 * nr, nr);
    return p;
}

}  // namespace qus
