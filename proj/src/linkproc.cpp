#include "weavesim/linkproc.hpp"

#include <cmath>
#include <string>

namespace weavesim {

PilotBook make_pilots(int tau_p, int num_users) {
  if (num_users < 0 || tau_p < num_users) throw ValidationError("tau_p < K");
  if (tau_p < 1) throw ValidationError("tau_p must be >= 1");
  PilotBook book;
  book.phi.resize(tau_p, num_users);
  const double scale = 1.0 / std::sqrt(static_cast<double>(tau_p));
  for (int t = 0; t < tau_p; ++t) {
    for (int k = 0; k < num_users; ++k) {
      // Reduce the product first so the phase argument stays small.
      const long idx = (static_cast<long>(t) * k) % tau_p;
      book.phi(t, k) = std::polar(scale, -2.0 * kPi * static_cast<double>(idx) / tau_p);
    }
  }
  return book;
}

CMatrix receive_pilots(const CMatrix& g, const PilotBook& pilots, double rho_w, double n0_w,
                       Rng& rng) {
  const int tau_p = pilots.tau_p();
  CMatrix y = std::sqrt(rho_w * tau_p) * g * pilots.phi.adjoint();
  NormalDist n01;
  const double s = std::sqrt(n0_w / 2.0);
  for (int t = 0; t < y.cols(); ++t) {
    for (int m = 0; m < y.rows(); ++m) {
      const double re = n01(rng);
      const double im = n01(rng);
      y(m, t) += cdouble(s * re, s * im);
    }
  }
  return y;
}

EstimatedChannel ls_estimate(const CMatrix& y_p, const PilotBook& pilots, double rho_w, int tau_p) {
  if (y_p.cols() != pilots.tau_p() || tau_p != pilots.tau_p()) {
    throw ValidationError("ls_estimate: Y_p has " + std::to_string(y_p.cols()) +
                          " columns but the pilot book has tau_p = " + std::to_string(pilots.tau_p()));
  }
  if (!(rho_w > 0)) throw ValidationError("ls_estimate: pilot power must be > 0");
  return {y_p * pilots.phi / std::sqrt(rho_w * tau_p)};
}

CMatrix zf_left_inverse(const CMatrix& g) {
  const Eigen::Index m = g.rows();
  const Eigen::Index k = g.cols();
  if (k == 0) return CMatrix(0, m);
  if (m < k) throw SimulationError("zero-forcing needs M >= K");
  Eigen::HouseholderQR<CMatrix> qr(g);
  const CMatrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  // Singular values of R equal those of G. cond_F = |R|_F |R^-1|_F bounds cond_2
  // within a factor k, so the SVD only runs when the bound is inconclusive.
  const CMatrix r_inv = r.triangularView<Eigen::Upper>().solve(CMatrix::Identity(k, k));
  const double cond_f = r.norm() * r_inv.norm();
  if (!(std::isfinite(cond_f) && cond_f < 1e10)) {
    Eigen::JacobiSVD<CMatrix> svd(r);
    const auto& sv = svd.singularValues();
    if (!(sv(k - 1) > 1e-10 * sv(0))) {
      throw SimulationError("zero-forcing: channel matrix is rank deficient (colinear user channels)");
    }
  }
  // (G^H G)^{-1} G^H = R^{-1} Q^H, i.e. the adjoint of Q [R^{-H}; 0].
  CMatrix padded = CMatrix::Zero(m, k);
  padded.topRows(k) = r_inv.adjoint();
  const CMatrix a = qr.householderQ() * padded;
  return a.adjoint();
}

namespace {

void normalize_columns(CMatrix& a) {
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    const double n = a.col(k).norm();
    if (!(n > 0.0)) {
      throw SimulationError("zero channel estimate for user " + std::to_string(k));
    }
    a.col(k) /= n;
  }
}

}  // namespace

Precoder make_precoder(const EstimatedChannel& g_hat, PrecoderKind kind) {
  Precoder p;
  p.kind = kind;
  p.matrix = kind == PrecoderKind::kMrt ? g_hat.entries : CMatrix(zf_left_inverse(g_hat.entries).adjoint());
  normalize_columns(p.matrix);
  return p;
}

Combiner make_combiner(const EstimatedChannel& g_hat, PrecoderKind kind) {
  // Rows of V are v_k^H; normalize the columns of V^H and transpose back.
  CMatrix vh = kind == PrecoderKind::kMrt ? g_hat.entries : CMatrix(zf_left_inverse(g_hat.entries).adjoint());
  normalize_columns(vh);
  return {vh.adjoint(), kind};
}

}  // namespace weavesim
