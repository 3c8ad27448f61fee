#pragma once

#include <functional>
#include <variant>

#include "weavesim/common.hpp"

namespace weavesim {

// sin(x)/x; Taylor series below |x| < 1e-4.
double sinc(double x);

// Adaptive Gauss-Kronrod (7/15) on [a, b]. Throws SimulationError when the
// interval budget is exhausted before the relative tolerance is met.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol, int max_intervals = 4000);

// Normalization constant of the rectangular patch pattern: chosen so the
// front-hemisphere integral of the gain over solid angle equals 4 pi.
double patch_alpha(double h_m, double w_m, double lambda_m, double rel_tol = 1e-8);

class OmniPattern {
 public:
  double gain(double /*theta*/, double /*phi*/) const { return 1.0; }
};

// Rectangular microstrip patch. theta is measured from the local z axis
// (patch width direction), phi from the local x axis (boresight). The back
// hemisphere |phi| > pi/2 does not radiate.
class PatchPattern {
 public:
  PatchPattern(double h_m, double w_m, double lambda_m);

  double h() const { return h_; }
  double w() const { return w_; }
  double lambda() const { return lambda_; }
  double alpha() const { return alpha_; }

  // alpha sin(theta) sinc(X) sinc(Z), or 0 in the back hemisphere.
  double amplitude(double theta, double phi) const;
  // Same value from precomputed direction terms; front is |phi| <= pi/2.
  double amplitude(double sin_theta, double cos_theta, double cos_phi, bool front) const;
  double gain(double theta, double phi) const {
    double a = amplitude(theta, phi);
    return a * a;
  }

 private:
  double h_;
  double w_;
  double lambda_;
  double alpha_;
};

using Pattern = std::variant<OmniPattern, PatchPattern>;

double gain(const Pattern& pattern, double theta, double phi);

// sqrt(gain) with the sign of the far-field amplitude (omni -> 1).
double amplitude(const Pattern& pattern, double theta, double phi);

}  // namespace weavesim
