#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "wavekin/common.hpp"

namespace wk {

// Input/output spectrum n(xi) >= 0. Either a closed-form profile or a
// sampled table with linear interpolation (used for integrated
// trajectories). decay_exponent documents the tail rate used when a
// consumer extrapolates beyond the stored support.
class Spectrum {
 public:
  Spectrum() = default;  // unit-amplitude, unit-width Gaussian

  static Spectrum gaussian(double amp = 1.0, double width = 1.0) {
    Spectrum s;
    s.kind_ = Kind::Gaussian;
    s.a_ = amp;
    s.b_ = width;
    s.decay_exponent = 2.0;
    return s;
  }

  // amp * exp(-xi^2) restricted to |xi| <= cut, smooth in the interior.
  static Spectrum truncated_gaussian(double amp, double cut) {
    Spectrum s;
    s.kind_ = Kind::TruncGaussian;
    s.a_ = amp;
    s.b_ = cut;
    s.decay_exponent = 2.0;
    return s;
  }

  static Spectrum table(std::vector<double> xi, std::vector<double> val) {
    if (xi.size() != val.size() || xi.size() < 2)
      throw domain_error("spectrum: table needs matching xi/value arrays");
    for (size_t i = 1; i < xi.size(); i++)
      if (xi[i] <= xi[i - 1]) throw domain_error("spectrum: xi not increasing");
    for (double v : val)
      if (v < 0) throw domain_error("spectrum: negative value");
    Spectrum s;
    s.kind_ = Kind::Table;
    s.xi_ = std::move(xi);
    s.val_ = std::move(val);
    s.decay_exponent = 2.0;
    return s;
  }

  static Spectrum zero() { return gaussian(0.0, 1.0); }

  double operator()(double xi) const {
    switch (kind_) {
      case Kind::Gaussian:
        return a_ * std::exp(-xi * xi / (b_ * b_));
      case Kind::TruncGaussian:
        return std::abs(xi) <= b_ ? a_ * std::exp(-xi * xi) : 0.0;
      case Kind::Table: {
        if (xi <= xi_.front() || xi >= xi_.back()) return 0.0;
        size_t hi = size_t(std::lower_bound(xi_.begin(), xi_.end(), xi) -
                           xi_.begin());
        size_t lo = hi - 1;
        double t = (xi - xi_[lo]) / (xi_[hi] - xi_[lo]);
        return val_[lo] + t * (val_[hi] - val_[lo]);
      }
    }
    return 0.0;
  }

  // A radius beyond which the profile is negligible at working precision.
  double support_radius() const {
    switch (kind_) {
      case Kind::Gaussian:
        return 8.5 * b_;   // exp(-8.5^2) ~ 5e-32
      case Kind::TruncGaussian:
        return b_;
      case Kind::Table:
        return std::max(std::abs(xi_.front()), std::abs(xi_.back()));
    }
    return 0.0;
  }

  const std::vector<double>& grid() const { return xi_; }
  const std::vector<double>& values() const { return val_; }
  bool is_table() const { return kind_ == Kind::Table; }

  double decay_exponent = 2.0;

 private:
  enum class Kind { Gaussian, TruncGaussian, Table };
  Kind kind_ = Kind::Gaussian;
  double a_ = 1.0, b_ = 1.0;
  std::vector<double> xi_, val_;
};

}  // namespace wk
