#pragma once

#include "weavesim/common.hpp"
#include "weavesim/rng.hpp"
#include "weavesim/scenario.hpp"

namespace weavesim {

// Orthonormal pilot columns: the first K columns of the unitary tau_p-point DFT.
struct PilotBook {
  CMatrix phi;  // tau_p x K
  int tau_p() const { return static_cast<int>(phi.rows()); }
  int num_users() const { return static_cast<int>(phi.cols()); }
};

PilotBook make_pilots(int tau_p, int num_users);

struct EstimatedChannel {
  CMatrix entries;  // M x K
};

// Y_p = sqrt(rho tau_p) G Phi^H + W_p with W_p i.i.d. CN(0, N0).
CMatrix receive_pilots(const CMatrix& g, const PilotBook& pilots, double rho_w, double n0_w,
                       Rng& rng);

// De-spreads with Phi and scales: G_hat = Y_p Phi / sqrt(rho tau_p).
EstimatedChannel ls_estimate(const CMatrix& y_p, const PilotBook& pilots, double rho_w, int tau_p);

// Downlink precoder with unit-norm columns a_k.
struct Precoder {
  CMatrix matrix;  // M x K
  PrecoderKind kind = PrecoderKind::kMrt;
};

// Uplink combiner whose rows are v_k^H, each unit-norm.
struct Combiner {
  CMatrix matrix;  // K x M
  PrecoderKind kind = PrecoderKind::kMrt;
};

// (G^H G)^{-1} G^H via thin QR. Throws SimulationError unless
// sigma_min(G) > 1e-10 sigma_max(G).
CMatrix zf_left_inverse(const CMatrix& g);

Precoder make_precoder(const EstimatedChannel& g_hat, PrecoderKind kind);
Combiner make_combiner(const EstimatedChannel& g_hat, PrecoderKind kind);

}  // namespace weavesim
