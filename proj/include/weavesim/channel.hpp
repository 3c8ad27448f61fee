#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "weavesim/antenna.hpp"
#include "weavesim/common.hpp"
#include "weavesim/rng.hpp"
#include "weavesim/scenario.hpp"

namespace weavesim {

struct ChannelMatrix {
  CMatrix entries;  // M x K
  int subcarrier = 0;
  int block = 0;
};

// User direction seen from an antenna, in the antenna's local frame.
struct LocalDirection {
  double r = 0.0;
  double theta = 0.0;  // from local z
  double phi = 0.0;    // from local x, in [-pi, pi]
};

LocalDirection to_local(const AntennaElement& antenna, const Vec3& point);

// Free-space line-of-sight gain. |g|^2 = G(theta, phi) (lambda / (4 pi r))^2.
// Throws ValidationError when r < d_min.
cdouble los_gain(const AntennaElement& antenna, const Pattern& pattern, const UserPosition& user,
                 double lambda_m, double d_min_m = 0.5);

// Large-scale path loss -30.5 - 36.7 log10(r / 1 m) dB, as a linear power gain.
double path_loss_linear(double r_m);

// One CN(0, path_loss(r)) draw.
cdouble rayleigh_gain(double r_m, Rng& rng);

// Subcarrier wavelengths c / (f_c + offset_n), offsets centred on the carrier.
std::vector<double> subcarrier_wavelengths(const RadioConfig& radio, bool flat);

// Per-scenario channel generator. Patch normalizations (one per subcarrier
// wavelength) are computed once at construction.
class ChannelSynthesizer {
 public:
  explicit ChannelSynthesizer(const Scenario& scenario);

  int num_subcarriers() const { return static_cast<int>(lambdas_.size()); }
  const std::vector<double>& wavelengths() const { return lambdas_; }

  // One matrix per subcarrier for the given block. LOS ignores the seed;
  // Rayleigh draws from substreams keyed by (seed, block, subcarrier group).
  std::vector<ChannelMatrix> draw(std::span<const UserPosition> users, int block,
                                  std::uint64_t seed) const;

 private:
  const Scenario& scenario_;
  std::vector<double> lambdas_;
  std::vector<Pattern> patterns_;
};

std::vector<ChannelMatrix> draw_channel(const Scenario& scenario, int block, std::uint64_t seed);

// CSV rows: block,subcarrier,m,k,re,im
void write_channel_csv(std::ostream& os, std::span<const ChannelMatrix> matrices, bool header = true);

}  // namespace weavesim
