#include "weavesim/linksim.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "weavesim/config_text.hpp"
#include "weavesim/rng.hpp"
#include "weavesim/scenario.hpp"
#include "weavesim/sinr.hpp"

namespace weavesim {
namespace {

constexpr int kStates = 1 << kConvMemory;

inline unsigned parity(unsigned v) { return static_cast<unsigned>(std::popcount(v) & 1); }

// Output pair (g0 << 1 | g1) for predecessor state p and input u.
struct Trellis {
  std::array<std::uint8_t, kStates> out_p0{};
  std::array<std::uint8_t, kStates> out_p1{};
  Trellis() {
    for (int s = 0; s < kStates; ++s) {
      const unsigned u = static_cast<unsigned>(s) >> (kConvMemory - 1);
      const unsigned p0 = (static_cast<unsigned>(s) & (kStates / 2 - 1)) << 1;
      const unsigned p1 = p0 | 1u;
      const unsigned r0 = (u << kConvMemory) | p0;
      const unsigned r1 = (u << kConvMemory) | p1;
      out_p0[s] = static_cast<std::uint8_t>(parity(r0 & kConvG0) << 1 | parity(r0 & kConvG1));
      out_p1[s] = static_cast<std::uint8_t>(parity(r1 & kConvG0) << 1 | parity(r1 & kConvG1));
    }
  }
};

const Trellis& trellis() {
  static const Trellis t;
  return t;
}

int resolve_threads(int threads) {
  return threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// 16-QAM per-dimension Gray levels indexed by (b_first << 1 | b_second).
constexpr std::array<double, 4> kQam16Level = {+1.0, +3.0, -1.0, -3.0};

double qam16_dim_llr_first(double y, double snr) {
  // first bit 0 -> levels {+1, +3}; 1 -> {-1, -3} (scaled)
  const double a = 1.0 / std::sqrt(10.0);
  auto d = [&](double level) { return (y - level * a) * (y - level * a); };
  const double d0 = std::min(d(+1), d(+3));
  const double d1 = std::min(d(-1), d(-3));
  return snr * (d1 - d0);
}

double qam16_dim_llr_second(double y, double snr) {
  // second bit 0 -> levels {+1, -1}; 1 -> {+3, -3}
  const double a = 1.0 / std::sqrt(10.0);
  auto d = [&](double level) { return (y - level * a) * (y - level * a); };
  const double d0 = std::min(d(+1), d(-1));
  const double d1 = std::min(d(+3), d(-3));
  return snr * (d1 - d0);
}

}  // namespace

std::size_t conv_coded_length(std::size_t info_bits) { return 2 * (info_bits + kConvMemory); }

std::vector<std::uint8_t> conv_encode(std::span<const std::uint8_t> bits) {
  std::vector<std::uint8_t> out;
  out.reserve(conv_coded_length(bits.size()));
  unsigned state = 0;
  auto push = [&](unsigned u) {
    const unsigned reg = (u << kConvMemory) | state;
    out.push_back(static_cast<std::uint8_t>(parity(reg & kConvG0)));
    out.push_back(static_cast<std::uint8_t>(parity(reg & kConvG1)));
    state = (u << (kConvMemory - 1)) | (state >> 1);
  };
  for (std::uint8_t b : bits) push(b & 1u);
  for (int i = 0; i < kConvMemory; ++i) push(0);
  return out;
}

std::vector<std::uint8_t> viterbi_decode(std::span<const double> llrs, std::size_t info_bits) {
  if (llrs.size() != conv_coded_length(info_bits)) {
    throw ValidationError("viterbi_decode: expected " + std::to_string(conv_coded_length(info_bits)) +
                          " LLRs, got " + std::to_string(llrs.size()));
  }
  const Trellis& t = trellis();
  const std::size_t steps = info_bits + kConvMemory;
  constexpr double kUnreachable = -std::numeric_limits<double>::infinity();
  std::array<double, kStates> metric;
  std::array<double, kStates> next;
  metric.fill(kUnreachable);
  metric[0] = 0.0;
  std::vector<std::uint64_t> decisions(steps);  // bit s set: survivor came from p1

  for (std::size_t step = 0; step < steps; ++step) {
    const double l0 = llrs[2 * step];
    const double l1 = llrs[2 * step + 1];
    // Branch metric by output pair (o0 << 1 | o1): +llr for a 0 bit, -llr for a 1 bit.
    const std::array<double, 4> bm = {l0 + l1, l0 - l1, -l0 + l1, -l0 - l1};
    std::uint64_t dec = 0;
    for (int s = 0; s < kStates; ++s) {
      const int p0 = (s & (kStates / 2 - 1)) << 1;
      const double m0 = metric[p0] + bm[t.out_p0[s]];
      const double m1 = metric[p0 | 1] + bm[t.out_p1[s]];
      if (m1 > m0) {
        next[s] = m1;
        dec |= std::uint64_t{1} << s;
      } else {
        next[s] = m0;
      }
    }
    decisions[step] = dec;
    metric = next;
  }

  std::vector<std::uint8_t> bits(steps);
  int state = 0;
  for (std::size_t step = steps; step-- > 0;) {
    bits[step] = static_cast<std::uint8_t>(state >> (kConvMemory - 1));
    const int p0 = (state & (kStates / 2 - 1)) << 1;
    state = ((decisions[step] >> state) & 1u) ? (p0 | 1) : p0;
  }
  bits.resize(info_bits);
  return bits;
}

std::vector<cdouble> modulate(std::span<const std::uint8_t> bits, Modulation m) {
  const std::size_t bps = static_cast<std::size_t>(bits_per_symbol(m));
  if (bits.size() % bps != 0) {
    throw ValidationError("modulate: bit count is not a multiple of bits per symbol");
  }
  std::vector<cdouble> out(bits.size() / bps);
  const double q = 1.0 / std::sqrt(2.0);
  const double a = 1.0 / std::sqrt(10.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint8_t* b = bits.data() + i * bps;
    switch (m) {
      case Modulation::kBpsk:
        out[i] = {1.0 - 2.0 * b[0], 0.0};
        break;
      case Modulation::kQpsk:
        out[i] = {q * (1.0 - 2.0 * b[0]), q * (1.0 - 2.0 * b[1])};
        break;
      case Modulation::kQam16:
        out[i] = {a * kQam16Level[(b[0] & 1) << 1 | (b[1] & 1)],
                  a * kQam16Level[(b[2] & 1) << 1 | (b[3] & 1)]};
        break;
    }
  }
  return out;
}

void demodulate_llr(cdouble y, Modulation m, double snr, double* out) {
  // Per-dimension noise variance is 1 / (2 snr); LLR = (d1 - d0) / (2 sigma^2).
  switch (m) {
    case Modulation::kBpsk:
      out[0] = 4.0 * snr * y.real();
      break;
    case Modulation::kQpsk: {
      const double c = 2.0 * std::sqrt(2.0) * snr;
      out[0] = c * y.real();
      out[1] = c * y.imag();
      break;
    }
    case Modulation::kQam16:
      out[0] = qam16_dim_llr_first(y.real(), snr);
      out[1] = qam16_dim_llr_second(y.real(), snr);
      out[2] = qam16_dim_llr_first(y.imag(), snr);
      out[3] = qam16_dim_llr_second(y.imag(), snr);
      break;
  }
}

std::vector<std::uint32_t> bit_interleaver(std::size_t n) {
  std::vector<std::uint32_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
  // Fisher-Yates on the raw engine output; the distribution objects of the
  // standard library are implementation-defined.
  Rng rng(mix64(0x1a7e21eaULL ^ n));
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);
  return perm;
}

PacketResult simulate_per(std::span<const double> profile, const McsEntry& mcs,
                          std::uint64_t n_packets, std::uint64_t seed, const LinkOptions& opts) {
  if (n_packets == 0) throw ValidationError("simulate_per: n_packets must be > 0");
  if (profile.empty()) throw ValidationError("simulate_per: empty SINR profile");
  for (double g : profile) {
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw ValidationError("simulate_per: profile entries must be positive and finite");
    }
  }
  if (!opts.uncoded && mcs.family != CodeFamily::kConvK7) {
    throw ValidationError("simulate_per: only the ConvK7 code family is simulated");
  }
  if (opts.info_bits == 0) throw ValidationError("simulate_per: info_bits must be > 0");

  const std::size_t bps = static_cast<std::size_t>(bits_per_symbol(mcs.modulation));
  const std::size_t payload = opts.uncoded ? opts.info_bits : conv_coded_length(opts.info_bits);
  const std::size_t padded = (payload + bps - 1) / bps * bps;
  const std::size_t n_sc = profile.size();
  std::vector<double> sigma(n_sc);
  for (std::size_t n = 0; n < n_sc; ++n) sigma[n] = std::sqrt(0.5 / profile[n]);
  const auto perm = opts.interleave ? bit_interleaver(padded) : std::vector<std::uint32_t>{};

  auto run_packet = [&](std::uint64_t p, std::vector<std::uint8_t>& tx, std::vector<std::uint8_t>& air,
                        std::vector<double>& llr, std::vector<double>& rx, PacketResult& acc) {
    Rng rng = substream(seed, StreamDomain::kPacket, {p});
    std::vector<std::uint8_t> info(opts.info_bits);
    for (std::size_t i = 0; i < info.size(); i += 64) {
      const std::uint64_t word = rng();
      for (std::size_t j = 0; j < 64 && i + j < info.size(); ++j) {
        info[i + j] = static_cast<std::uint8_t>((word >> j) & 1u);
      }
    }
    if (opts.uncoded) {
      tx = info;
    } else {
      tx = conv_encode(info);
    }
    tx.resize(padded, 0);
    if (opts.interleave) {
      air.resize(padded);
      for (std::size_t i = 0; i < padded; ++i) air[perm[i]] = tx[i];
    } else {
      air = tx;
    }
    const auto symbols = modulate(air, mcs.modulation);
    rx.assign(padded, 0.0);
    NormalDist normal(0.0, 1.0);
    for (std::size_t s = 0; s < symbols.size(); ++s) {
      const std::size_t n = s % n_sc;
      const double re = normal(rng);
      const double im = normal(rng);
      const cdouble y = symbols[s] + cdouble(sigma[n] * re, sigma[n] * im);
      demodulate_llr(y, mcs.modulation, profile[n], rx.data() + s * bps);
    }
    llr.resize(payload);
    for (std::size_t i = 0; i < payload; ++i) llr[i] = rx[opts.interleave ? perm[i] : i];
    std::uint64_t wrong = 0;
    if (opts.uncoded) {
      for (std::size_t i = 0; i < info.size(); ++i) {
        const std::uint8_t hard = llr[i] < 0.0 ? 1 : 0;
        wrong += hard != info[i];
      }
    } else {
      const auto decoded = viterbi_decode(llr, opts.info_bits);
      for (std::size_t i = 0; i < info.size(); ++i) wrong += decoded[i] != info[i];
    }
    acc.n_packets += 1;
    acc.n_bits += info.size();
    acc.bit_errors += wrong;
    acc.n_errors += wrong > 0;
  };

  const int n_threads =
      static_cast<int>(std::min<std::uint64_t>(resolve_threads(opts.threads), n_packets));
  std::vector<PacketResult> partial(n_threads);
  constexpr std::uint64_t kChunk = 256;
  std::atomic<std::uint64_t> next{0};
  auto worker = [&](int w) {
    std::vector<std::uint8_t> tx, air;
    std::vector<double> llr, rx;
    while (true) {
      const std::uint64_t begin = next.fetch_add(kChunk);
      if (begin >= n_packets) return;
      const std::uint64_t end = std::min(n_packets, begin + kChunk);
      for (std::uint64_t p = begin; p < end; ++p) run_packet(p, tx, air, llr, rx, partial[w]);
    }
  };
  if (n_threads <= 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker, w);
  }
  PacketResult total;
  for (const auto& r : partial) {
    total.n_packets += r.n_packets;
    total.n_errors += r.n_errors;
    total.n_bits += r.n_bits;
    total.bit_errors += r.bit_errors;
  }
  return total;
}

RefCurve awgn_reference_curve(const McsEntry& mcs, std::span<const double> snr_grid_db,
                              std::uint64_t n_packets, std::uint64_t seed, const LinkOptions& opts) {
  std::vector<CurvePoint> pts;
  pts.reserve(snr_grid_db.size());
  for (std::size_t i = 0; i < snr_grid_db.size(); ++i) {
    if (i > 0 && !(snr_grid_db[i] > snr_grid_db[i - 1])) {
      throw ValidationError("awgn_reference_curve: SNR grid must be strictly increasing");
    }
    const double flat[1] = {db_to_linear(snr_grid_db[i])};
    // Grid points share packet streams, which keeps neighbouring points paired.
    const PacketResult r = simulate_per(flat, mcs, n_packets, seed, opts);
    CurvePoint pt{snr_grid_db[i], r.per(), false};
    if (r.n_errors == 0) {
      pt.per = 0.5 / static_cast<double>(n_packets);
      pt.zero_errors = true;
    }
    pts.push_back(pt);
  }
  return RefCurve(std::move(pts), mcs);
}

double curve_crossing_db(const RefCurve& curve, double per) {
  const auto& p = curve.points();
  if (p.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (p.front().per <= per) return p.front().snr_db;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i].per <= per) {
      const double l0 = std::log10(p[i - 1].per);
      const double l1 = std::log10(p[i].per);
      const double f = (std::log10(per) - l0) / (l1 - l0);
      return p[i - 1].snr_db + f * (p[i].snr_db - p[i - 1].snr_db);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> place_profile(std::span<const double> shape, double beta, double target) {
  if (!(target > 0.0)) throw ValidationError("place_profile: target must be > 0");
  // EESM of a scaled profile is increasing in the scale: bisect on log scale.
  std::vector<double> scaled(shape.begin(), shape.end());
  auto eff = [&](double log_scale) {
    const double s = std::exp(log_scale);
    for (std::size_t i = 0; i < shape.size(); ++i) scaled[i] = s * shape[i];
    return compress(scaled, CompressionMethod::kEesm, beta);
  };
  double lo = -60.0;
  double hi = 60.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (eff(mid) < target ? lo : hi) = mid;
  }
  eff(0.5 * (lo + hi));
  return scaled;
}

namespace {

std::vector<double> placement_targets(const RefCurve& curve, int count, double per_high, double per_low) {
  const double a = curve_crossing_db(curve, per_high);
  const double b = curve_crossing_db(curve, per_low);
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw ValidationError("profile placement: reference curve does not span the requested PER range");
  }
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) {
    const double f = count == 1 ? 0.5 : static_cast<double>(i) / (count - 1);
    out[i] = db_to_linear(a + f * (b - a));
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> rayleigh_profiles(const ProfileSetSpec& spec, const RefCurve& curve,
                                                   std::uint64_t seed, int threads) {
  if (spec.num_profiles <= 0) throw ValidationError("rayleigh_profiles: num_profiles must be > 0");
  if (spec.num_users <= 0 || spec.num_users > spec.num_antennas) {
    throw ValidationError("rayleigh_profiles: need 0 < num_users <= num_antennas");
  }
  const double sc_bw = 200e3;
  std::string cfg;
  cfg += "room_length_m = 40\nroom_width_m = 40\nroom_height_m = 10\n";
  cfg += "num_antennas = " + std::to_string(spec.num_antennas) + "\n";
  cfg += "num_users = " + std::to_string(spec.num_users) + "\n";
  cfg += "signal_bandwidth_hz = " + config::format_number(sc_bw * spec.num_subcarriers) + "\n";
  cfg += "subcarrier_bandwidth_hz = " + config::format_number(sc_bw) + "\n";
  cfg += "channel_type = \"rayleigh\"\npattern = \"omni\"\ncsi = \"perfect\"\n";
  cfg += "precoder = \"zf\"\ndirection = \"uplink\"\n";
  // Config integers are exact only below 2^53.
  cfg += "user_seed = " + std::to_string(seed & ((1ULL << 53) - 1)) + "\n";
  const Scenario s = load_scenario(cfg);
  const int blocks = (spec.num_profiles + spec.num_users - 1) / spec.num_users;
  const SinrTrace trace = generate_trace(s, blocks, seed, threads);
  auto shapes = trace_profiles(trace, 1);
  // Interleave users and blocks so consecutive profiles come from different drops.
  std::stable_sort(shapes.begin(), shapes.end(), [](const TraceProfile& a, const TraceProfile& b) {
    return a.first_block < b.first_block;
  });
  shapes.resize(spec.num_profiles);
  const auto targets = placement_targets(curve, spec.num_profiles, spec.per_high, spec.per_low);
  std::vector<std::vector<double>> out;
  out.reserve(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    out.push_back(place_profile(shapes[i].gammas, spec.placement_beta, targets[i]));
  }
  return out;
}

std::vector<std::vector<double>> notch_profiles(const NotchProfileSpec& spec, const RefCurve& curve,
                                                std::uint64_t seed) {
  if (spec.num_profiles <= 0 || spec.num_subcarriers <= 0) {
    throw ValidationError("notch_profiles: counts must be > 0");
  }
  const int notched = static_cast<int>(std::lround(spec.notch_fraction * spec.num_subcarriers));
  if (notched < 0 || notched > spec.num_subcarriers) {
    throw ValidationError("notch_profiles: notch_fraction must lie in [0, 1]");
  }
  const auto targets = placement_targets(curve, spec.num_profiles, spec.per_high, spec.per_low);
  const double depth = db_to_linear(-spec.notch_depth_db);
  std::vector<std::vector<double>> out;
  for (int p = 0; p < spec.num_profiles; ++p) {
    Rng rng = substream(seed, StreamDomain::kProfile, {static_cast<std::uint64_t>(p)});
    std::vector<int> idx(spec.num_subcarriers);
    for (int i = 0; i < spec.num_subcarriers; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<double> shape(spec.num_subcarriers, 1.0);
    for (int i = 0; i < notched; ++i) shape[idx[i]] = depth;
    out.push_back(place_profile(shape, spec.placement_beta, targets[p]));
  }
  return out;
}

std::vector<CalibrationSample> simulate_profiles(const std::vector<std::vector<double>>& profiles,
                                                 const McsEntry& mcs, std::uint64_t n_packets,
                                                 std::uint64_t seed, const LinkOptions& opts) {
  std::vector<CalibrationSample> out;
  out.reserve(profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto r = simulate_per(profiles[i], mcs, n_packets,
                                mix64(seed ^ mix64(0xca11b000ULL + i)), opts);
    out.push_back({profiles[i], r.per()});
  }
  return out;
}

}  // namespace weavesim
