#include "weavesim/channel.hpp"

#include <algorithm>
#include <cstdio>

namespace weavesim {

LocalDirection to_local(const AntennaElement& antenna, const Vec3& point) {
  const Vec3 d = antenna.basis.transpose() * (point - antenna.position);
  LocalDirection out;
  out.r = d.norm();
  out.theta = out.r > 0.0 ? std::acos(std::clamp(d.z() / out.r, -1.0, 1.0)) : 0.0;
  out.phi = std::atan2(d.y(), d.x());
  return out;
}

cdouble los_gain(const AntennaElement& antenna, const Pattern& pattern, const UserPosition& user,
                 double lambda_m, double d_min_m) {
  const LocalDirection dir = to_local(antenna, user.position);
  if (dir.r < d_min_m) {
    throw ValidationError("los_gain: distance " + std::to_string(dir.r) + " m below d_min");
  }
  const double amp = lambda_m / (4.0 * kPi * dir.r) * amplitude(pattern, dir.theta, dir.phi);
  return std::polar(amp, -2.0 * kPi * dir.r / lambda_m);
}

double path_loss_linear(double r_m) { return db_to_linear(-30.5 - 36.7 * std::log10(r_m)); }

cdouble rayleigh_gain(double r_m, Rng& rng) {
  NormalDist n01;
  const double s = std::sqrt(path_loss_linear(r_m) / 2.0);
  const double re = n01(rng);
  const double im = n01(rng);
  return {s * re, s * im};
}

std::vector<double> subcarrier_wavelengths(const RadioConfig& radio, bool flat) {
  const int n = radio.num_subcarriers();
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    const double offset = flat ? 0.0 : (i - (n - 1) / 2.0) * radio.subcarrier_bw_hz;
    out[i] = kSpeedOfLight / (radio.carrier_freq_hz + offset);
  }
  return out;
}

ChannelSynthesizer::ChannelSynthesizer(const Scenario& scenario)
    : scenario_(scenario),
      lambdas_(subcarrier_wavelengths(scenario.radio,
                                      scenario.los_frequency_flat ||
                                          scenario.channel_kind == ChannelKind::kRayleigh)) {
  if (scenario.channel_kind != ChannelKind::kLos) return;
  patterns_.reserve(lambdas_.size());
  for (std::size_t n = 0; n < lambdas_.size(); ++n) {
    if (scenario.pattern.kind == PatternKind::kOmni) {
      patterns_.emplace_back(OmniPattern{});
    } else if (n > 0 && lambdas_[n] == lambdas_[n - 1]) {
      patterns_.push_back(patterns_.back());
    } else {
      patterns_.emplace_back(
          PatchPattern(scenario.pattern.patch_h_m, scenario.patch_width_m(), lambdas_[n]));
    }
  }
}

std::vector<ChannelMatrix> ChannelSynthesizer::draw(std::span<const UserPosition> users, int block,
                                                    std::uint64_t seed) const {
  const int m_count = scenario_.num_antennas();
  const int k_count = static_cast<int>(users.size());
  const int n_sc = num_subcarriers();
  std::vector<ChannelMatrix> out(n_sc);
  for (int n = 0; n < n_sc; ++n) {
    out[n].entries.resize(m_count, k_count);
    out[n].subcarrier = n;
    out[n].block = block;
  }

  if (scenario_.channel_kind == ChannelKind::kLos) {
    for (int m = 0; m < m_count; ++m) {
      const auto& ant = scenario_.antennas[m];
      for (int k = 0; k < k_count; ++k) {
        const LocalDirection dir = to_local(ant, users[k].position);
        if (dir.r < scenario_.d_min_m) {
          throw ValidationError("user " + std::to_string(k) + " closer than d_min to antenna " +
                                std::to_string(m));
        }
        const double st = std::sin(dir.theta);
        const double ct = std::cos(dir.theta);
        const double cp = std::cos(dir.phi);
        const bool front = std::abs(dir.phi) <= kPi / 2;
        for (int n = 0; n < n_sc; ++n) {
          const double lambda = lambdas_[n];
          const auto* patch = std::get_if<PatchPattern>(&patterns_[n]);
          const double pattern_amp = patch ? patch->amplitude(st, ct, cp, front) : 1.0;
          const double amp = lambda / (4.0 * kPi * dir.r) * pattern_amp;
          out[n].entries(m, k) = std::polar(amp, -2.0 * kPi * dir.r / lambda);
        }
      }
    }
    return out;
  }

  // Rayleigh: one draw per coherence group, shared by the group's subcarriers.
  std::vector<double> dist(static_cast<std::size_t>(m_count) * k_count);
  for (int m = 0; m < m_count; ++m) {
    for (int k = 0; k < k_count; ++k) {
      dist[static_cast<std::size_t>(m) * k_count + k] =
          (scenario_.antennas[m].position - users[k].position).norm();
    }
  }
  const int group = scenario_.coherence_group_size;
  for (int g0 = 0; g0 < n_sc; g0 += group) {
    Rng rng = substream(seed, StreamDomain::kRayleigh,
                        {static_cast<std::uint64_t>(block), static_cast<std::uint64_t>(g0 / group)});
    CMatrix& first = out[g0].entries;
    for (int m = 0; m < m_count; ++m) {
      for (int k = 0; k < k_count; ++k) {
        first(m, k) = rayleigh_gain(dist[static_cast<std::size_t>(m) * k_count + k], rng);
      }
    }
    for (int n = g0 + 1; n < std::min(n_sc, g0 + group); ++n) out[n].entries = first;
  }
  return out;
}

std::vector<ChannelMatrix> draw_channel(const Scenario& scenario, int block, std::uint64_t seed) {
  return ChannelSynthesizer(scenario).draw(scenario.users, block, seed);
}

void write_channel_csv(std::ostream& os, std::span<const ChannelMatrix> matrices, bool header) {
  if (header) os << "block,subcarrier,m,k,re,im\n";
  char buf[128];
  for (const auto& cm : matrices) {
    for (int m = 0; m < cm.entries.rows(); ++m) {
      for (int k = 0; k < cm.entries.cols(); ++k) {
        const cdouble v = cm.entries(m, k);
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.17g,%.17g\n", cm.block, cm.subcarrier, m, k,
                      v.real(), v.imag());
        os << buf;
      }
    }
  }
}

}  // namespace weavesim
