#pragma once

#include <cmath>

#include "wavekin/common.hpp"

namespace wk {

// Physical configuration of the lattice model. Wavenumbers live in
// (1/L)Z and are stored as integer numerators over L throughout.
struct PhysicalParams {
  int L = 16;           // domain size
  double alpha = 0.1;   // nonlinearity strength
  double T = 4.0;       // rescaled time horizon
  double sigma = 2.0;   // dispersion exponent, in (0,2] minus {1}
  double gamma = 0.0;   // scaling exponent when alpha = L^-gamma (0 = unset)

  double tkin() const { return 1.0 / (alpha * alpha); }

  void validate() const {
    if (L <= 0) throw domain_error("params: L must be positive");
    if (!(sigma > 0.0 && sigma <= 2.0) || sigma == 1.0)
      throw domain_error("params: sigma must lie in (0,2] and differ from 1");
    if (alpha <= 0.0) throw domain_error("params: alpha must be positive");
    if (T <= 0.0) throw domain_error("params: T must be positive");
    if (gamma != 0.0 && !(gamma > 0.0 && gamma <= 1.0))
      throw domain_error("params: gamma must lie in (0,1]");
  }

  static PhysicalParams scaled(int L, double gamma, double sigma, double T) {
    PhysicalParams p;
    p.L = L;
    p.gamma = gamma;
    p.alpha = std::pow(double(L), -gamma);
    p.sigma = sigma;
    p.T = T;
    p.validate();
    return p;
  }

  double omega(double k) const { return omega_of(k, sigma); }
  double omega_num(int64_t num) const { return omega_of(double(num) / L, sigma); }
};

}  // namespace wk
