#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "weavesim/abstraction.hpp"
#include "weavesim/common.hpp"

namespace weavesim {

// Rate-1/2, constraint length 7 convolutional code with generators 133 and
// 171 (octal), terminated with 6 zero tail bits. Coded bits are interleaved
// (g0, g1) per input bit.
inline constexpr int kConvMemory = 6;
inline constexpr unsigned kConvG0 = 0133;
inline constexpr unsigned kConvG1 = 0171;

std::size_t conv_coded_length(std::size_t info_bits);
std::vector<std::uint8_t> conv_encode(std::span<const std::uint8_t> bits);

// Soft-decision Viterbi over the terminated trellis. llr > 0 favours bit 0.
// Maximizes the correlation sum; on equal metrics the survivor from the
// lower-indexed predecessor state is kept. Throws ValidationError unless
// llrs.size() == conv_coded_length(info_bits).
std::vector<std::uint8_t> viterbi_decode(std::span<const double> llrs, std::size_t info_bits);

// Gray mapping with unit average symbol energy. bits.size() must be a
// multiple of bits_per_symbol(m).
std::vector<cdouble> modulate(std::span<const std::uint8_t> bits, Modulation m);

// Per-bit LLRs of one received symbol y = s + w, w ~ CN(0, 1/snr).
// Exact for BPSK and QPSK, max-log for 16-QAM. Writes bits_per_symbol(m) values.
void demodulate_llr(cdouble y, Modulation m, double snr_linear, double* out);

// Pseudo-random permutation of n positions, fixed for a given n: coded bit i
// is transmitted at position perm[i].
std::vector<std::uint32_t> bit_interleaver(std::size_t n);

struct PacketResult {
  std::uint64_t n_packets = 0;
  std::uint64_t n_errors = 0;
  std::uint64_t n_bits = 0;
  std::uint64_t bit_errors = 0;

  double per() const { return n_packets ? static_cast<double>(n_errors) / n_packets : 0.0; }
  double ber() const { return n_bits ? static_cast<double>(bit_errors) / n_bits : 0.0; }
};

struct LinkOptions {
  std::size_t info_bits = 256;
  bool uncoded = false;    // map info bits straight onto symbols
  bool interleave = true;  // bit interleaver between encoder and mapper
  int threads = 0;       // <= 0: hardware parallelism
};

// Monte Carlo PER of the MCS over a profile of per-subcarrier linear SNRs.
// After interleaving, symbol s of a packet is sent on subcarrier s mod N, so
// the coded bits of one trellis error event land on scattered subcarriers.
// Packet p uses its own
// substream of seed, so the result does not depend on the thread count.
PacketResult simulate_per(std::span<const double> profile, const McsEntry& mcs,
                          std::uint64_t n_packets, std::uint64_t seed, const LinkOptions& opts = {});

// Flat-profile PER per SNR grid point (dB, strictly increasing). Points with
// no packet errors carry per = 0.5 / n_packets and the zero_errors flag.
RefCurve awgn_reference_curve(const McsEntry& mcs, std::span<const double> snr_grid_db,
                              std::uint64_t n_packets, std::uint64_t seed,
                              const LinkOptions& opts = {});

// Lowest grid SNR (dB) at which the curve falls to `per`, interpolated in
// log10 PER. NaN if the curve never reaches it.
double curve_crossing_db(const RefCurve& curve, double per);

// Random per-subcarrier SINR profiles for calibration and validation.
// Shapes come from a Rayleigh uplink zero-forcing drop; each profile is then
// scaled so its EESM value at placement_beta lands on evenly spaced targets
// between the curve's per_high and per_low crossings.
struct ProfileSetSpec {
  int num_antennas = 64;
  int num_users = 63;
  int num_subcarriers = 18;
  int num_profiles = 64;
  double placement_beta = 1.0;
  double per_high = 0.7;
  double per_low = 1e-2;
};
std::vector<std::vector<double>> rayleigh_profiles(const ProfileSetSpec& spec, const RefCurve& curve,
                                                   std::uint64_t seed, int threads = 0);

// Two-level profiles: a random notch_fraction of the subcarriers sits
// notch_depth_db below the rest. Placement as for rayleigh_profiles.
struct NotchProfileSpec {
  int num_subcarriers = 20;
  int num_profiles = 64;
  double notch_fraction = 0.2;
  double notch_depth_db = 10.0;
  double placement_beta = 1.0;
  double per_high = 0.7;
  double per_low = 3e-3;
};
std::vector<std::vector<double>> notch_profiles(const NotchProfileSpec& spec, const RefCurve& curve,
                                                std::uint64_t seed);

// Scales `shape` so that EESM(scale * shape, beta) equals target_linear.
std::vector<double> place_profile(std::span<const double> shape, double beta, double target_linear);

// Simulates every profile and pairs it with its PER.
std::vector<CalibrationSample> simulate_profiles(const std::vector<std::vector<double>>& profiles,
                                                 const McsEntry& mcs, std::uint64_t n_packets,
                                                 std::uint64_t seed, const LinkOptions& opts = {});

}  // namespace weavesim
