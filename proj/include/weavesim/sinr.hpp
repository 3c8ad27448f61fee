#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "weavesim/common.hpp"
#include "weavesim/linkproc.hpp"
#include "weavesim/scenario.hpp"

namespace weavesim {

struct NoiseModel {
  double boltzmann = kBoltzmann;
  double temperature_k = 300.0;
  double bandwidth_hz = 200e3;
  double noise_figure_db = 0.0;
};

// k_B T BW 10^(+NF/10): a larger noise figure means more noise.
double noise_power(const NoiseModel& nm);

// Per-user SINR with the true channel g and a precoder built from (possibly
// estimated) CSI.
std::vector<double> downlink_sinr(const CMatrix& g_true, const Precoder& precoder,
                                  std::span<const double> eta, double rho_dl_w, double n0_w);

// Uplink SINR after combining; the noise term carries ||v_k||^2 so the result
// is invariant to per-row scaling of the combiner.
std::vector<double> uplink_sinr(const CMatrix& g_true, const Combiner& combiner,
                                std::span<const double> eta, double rho_ul_w, double n0_w);

struct SinrSample {
  int user = 0;
  int block = 0;
  int subcarrier = 0;
  double sinr = 0.0;  // linear
};

struct SinrTrace {
  std::vector<SinrSample> samples;  // sorted by (user, block, subcarrier)
  std::uint64_t scenario_hash = 0;
  std::uint64_t seed = 0;
  LinkDirection direction = LinkDirection::kDownlink;
  int rejected_drops = 0;
};

// Per-subcarrier transmit/pilot powers and per-subcarrier noise for a scenario.
struct LinkBudget {
  double rho_dl_w;
  double rho_ul_w;
  double pilot_w;
  double n0_ue_w;
  double n0_bs_w;
};
LinkBudget link_budget(const Scenario& scenario);

// One drop per block. Drops whose zero-forcing step is rank deficient are
// redrawn (up to 100 times in total) and counted in rejected_drops.
// threads <= 0 uses the available hardware parallelism.
SinrTrace generate_trace(const Scenario& scenario, int n_blocks, std::uint64_t seed, int threads = 0);

// CSI / precoder variants evaluated on shared drops, channels and pilot noise.
// A drop rejected by any variant is redrawn for all of them, so a variant's
// trace equals its generate_trace result whenever no drop is rejected.
struct TraceVariant {
  CsiKind csi = CsiKind::kLs;
  PrecoderKind precoder = PrecoderKind::kZf;
};
std::vector<SinrTrace> generate_traces(const Scenario& scenario, std::span<const TraceVariant> variants,
                                       int n_blocks, std::uint64_t seed, int threads = 0);

struct CdfPoint {
  double value_db = 0.0;
  double prob = 0.0;
};
using CdfTable = std::vector<CdfPoint>;

CdfTable empirical_cdf(std::vector<double> values_db);
CdfTable empirical_cdf(const SinrTrace& trace, std::optional<int> user = std::nullopt);

double median(std::vector<double> values);

// SINR vectors (linear) per (user, codeword); a codeword spans
// blocks_per_codeword consecutive blocks of all subcarriers.
struct TraceProfile {
  int user = 0;
  int first_block = 0;
  std::vector<double> gammas;
};
std::vector<TraceProfile> trace_profiles(const SinrTrace& trace, int blocks_per_codeword = 1);

void write_trace_csv(std::ostream& os, const SinrTrace& trace);
SinrTrace read_trace_csv(std::istream& is);
void write_cdf_csv(std::ostream& os, const CdfTable& cdf);

}  // namespace weavesim
