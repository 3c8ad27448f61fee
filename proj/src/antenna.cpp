#include "weavesim/antenna.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <vector>

namespace weavesim {

double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

namespace {

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule.
constexpr std::array<double, 8> kXk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = fc * kWk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXk[j];
    const double s = f(c - dx) + f(c + dx);
    kronrod += kWk[j] * s;
    if (j % 2 == 1) gauss += kWg[j / 2] * s;
  }
  return {a, b, kronrod * h, std::abs((kronrod - gauss) * h)};
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol, int max_intervals) {
  std::priority_queue<Segment> heap;
  Segment first = gk15(f, a, b);
  double total = first.value;
  double error = first.error;
  heap.push(first);
  int intervals = 1;
  constexpr double kAbsFloor = 1e-300;
  while (error > std::max(rel_tol * std::abs(total), kAbsFloor)) {
    if (intervals >= max_intervals) {
      throw SimulationError("adaptive quadrature did not converge within the interval cap");
    }
    Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    Segment left = gk15(f, worst.a, mid);
    Segment right = gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++intervals;
  }
  // Re-sum to shed the drift of the running updates.
  double sum = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    heap.pop();
  }
  return sum;
}

double patch_alpha(double h_m, double w_m, double lambda_m, double rel_tol) {
  if (!(h_m > 0 && w_m > 0 && lambda_m > 0)) {
    throw ValidationError("patch_alpha requires positive h, W and lambda");
  }
  const double kx = kPi * h_m / lambda_m;
  const double kz = kPi * w_m / lambda_m;
  // The phi integrand is even, so integrate [0, pi/2] and double.
  auto outer = [&](double theta) {
    const double st = std::sin(theta);
    const double sz = sinc(kz * std::cos(theta));
    auto inner = [&](double phi) {
      const double sx = sinc(kx * st * std::cos(phi));
      return sx * sx;
    };
    const double phi_integral = 2.0 * integrate_adaptive(inner, 0.0, kPi / 2, rel_tol * 1e-2);
    return phi_integral * sz * sz * st * st * st;
  };
  const double integral = integrate_adaptive(outer, 0.0, kPi, rel_tol);
  return std::sqrt(4.0 * kPi / integral);
}

PatchPattern::PatchPattern(double h_m, double w_m, double lambda_m)
    : h_(h_m), w_(w_m), lambda_(lambda_m), alpha_(patch_alpha(h_m, w_m, lambda_m)) {}

double PatchPattern::amplitude(double theta, double phi) const {
  return amplitude(std::sin(theta), std::cos(theta), std::cos(phi), std::abs(phi) <= kPi / 2);
}

double PatchPattern::amplitude(double sin_theta, double cos_theta, double cos_phi, bool front) const {
  if (!front) return 0.0;
  const double x = kPi * h_ / lambda_ * sin_theta * cos_phi;
  const double z = kPi * w_ / lambda_ * cos_theta;
  return alpha_ * sin_theta * sinc(x) * sinc(z);
}

double gain(const Pattern& pattern, double theta, double phi) {
  return std::visit([&](const auto& p) { return p.gain(theta, phi); }, pattern);
}

double amplitude(const Pattern& pattern, double theta, double phi) {
  if (const auto* patch = std::get_if<PatchPattern>(&pattern)) return patch->amplitude(theta, phi);
  return 1.0;
}

}  // namespace weavesim
