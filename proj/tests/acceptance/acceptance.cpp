// Acceptance suite: one PASS/FAIL line per criterion with the measured value,
// the pinned tolerance and the wall time against its budget.
//
//   weavesim_acceptance [criterion ...]     (default: all of 1..10)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "weavesim/abstraction.hpp"
#include "weavesim/antenna.hpp"
#include "weavesim/channel.hpp"
#include "weavesim/config_text.hpp"
#include "weavesim/linkproc.hpp"
#include "weavesim/linksim.hpp"
#include "weavesim/rng.hpp"
#include "weavesim/scenario.hpp"
#include "weavesim/sinr.hpp"

using namespace weavesim;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * std::generate_canonical<double, 53>(rng);
}

// ---------------------------------------------------------------------------

Outcome eesm_properties() {
  Rng rng(101);
  const int trials = 10000;
  double worst_flat = 0.0, worst_bound = 0.0, worst_hi = 0.0, worst_lo = 0.0;
  int monotone_checked = 0, monotone_failed = 0;
  for (int t = 0; t < trials; ++t) {
    const int n = 1 + static_cast<int>(rng() % 200);
    std::vector<double> g(n);
    for (auto& x : g) x = db_to_linear(uniform(rng, -20.0, 40.0));
    const double beta = std::exp(uniform(rng, std::log(0.05), std::log(20.0)));
    const double e = compress(g, CompressionMethod::kEesm, beta);
    const double lo = *std::min_element(g.begin(), g.end());
    double mean = 0.0;
    for (double x : g) mean += x;
    mean /= n;

    const std::vector<double> flat(n, g[0]);
    worst_flat = std::max(worst_flat, std::abs(compress(flat, CompressionMethod::kEesm, beta) - g[0]) / g[0]);
    // Violation of min <= e <= mean, relative; rounding allows a few ulp.
    worst_bound = std::max({worst_bound, (lo - e) / lo, (e - mean) / mean});

    // Strictly increasing in every entry whose EESM weight is resolvable: the
    // first-order change w_j * dg must exceed the rounding of the sums.
    const int j = static_cast<int>(rng() % n);
    std::vector<double> up = g;
    up[j] *= 1.001;
    double wsum = 0.0;
    for (double x : g) wsum += std::exp(-(x - lo) / beta);
    const double w = std::exp(-(g[j] - lo) / beta) / wsum;
    const double e_up = compress(up, CompressionMethod::kEesm, beta);
    if (w * (up[j] - g[j]) > 1e-9 * e) {
      ++monotone_checked;
      if (!(e_up > e)) ++monotone_failed;
    } else if (e_up < e) {
      ++monotone_failed;
    }

    worst_hi = std::max(worst_hi, std::abs(compress(g, CompressionMethod::kEesm, 1e10 * mean) - mean) / mean);
    worst_lo = std::max(worst_lo, std::abs(compress(g, CompressionMethod::kEesm, 1e-5 * lo) - lo) / lo);
  }
  const bool pass = worst_flat < 1e-12 && worst_bound <= 1e-12 && monotone_failed == 0 &&
                    monotone_checked > trials / 2 && worst_hi < 1e-3 && worst_lo < 1e-3;
  return {pass, "flat " + fmt("%.2e", worst_flat) + " (<1e-12), bound violation " + fmt("%.2e", worst_bound) +
                    " (<=1e-12), monotone " + std::to_string(monotone_checked - monotone_failed) + "/" +
                    std::to_string(monotone_checked) + ", beta->inf " + fmt("%.2e", worst_hi) + ", beta->0 " +
                    fmt("%.2e", worst_lo) + " (<1e-3)"};
}

// ---------------------------------------------------------------------------

Outcome patch_normalization() {
  Rng rng(202);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const double lambda = uniform(rng, 0.03, 0.6);
    const double h = lambda * uniform(rng, 0.001, 0.1);
    const double w = lambda * uniform(rng, 0.1, 1.5);
    const PatchPattern p(h, w, lambda);
    // Independent route: Boost Gauss-Kronrod over the library's gain values.
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    auto inner = [&](double theta) {
      const double s = std::sin(theta);
      return GK::integrate([&](double phi) { return p.gain(theta, phi); }, -kPi / 2, kPi / 2, 15, 1e-13) * s;
    };
    const double total = GK::integrate(inner, 0.0, kPi, 15, 1e-12);
    worst = std::max(worst, std::abs(total / (4 * kPi) - 1.0));
  }
  return {worst < 1e-6, "max |int G dOmega / 4pi - 1| = " + fmt("%.2e", worst) + " (<1e-6) over 20 patches"};
}

// ---------------------------------------------------------------------------

Outcome los_identity() {
  Rng rng(303);
  double worst = 0.0;
  int geometries = 0;
  while (geometries < 1000) {
    const double lx = uniform(rng, 5.0, 150.0), ly = uniform(rng, 5.0, 80.0), lz = uniform(rng, 3.0, 20.0);
    const double f = uniform(rng, 0.8e9, 6e9);
    const double ux = uniform(rng, 0.1, lx - 0.1), uy = uniform(rng, 0.1, ly - 0.1), uz = uniform(rng, 0.2, lz - 0.2);
    std::string cfg = "room_length_m = " + config::format_number(lx) + "\nroom_width_m = " + config::format_number(ly) +
                      "\nroom_height_m = " + config::format_number(lz) + "\nnum_antennas = 8\nnum_users = 1\n" +
                      "carrier_freq_hz = " + config::format_number(f) +
                      "\nsignal_bandwidth_hz = 200e3\nmin_distance_m = 0.05\nmount_height_m = " +
                      config::format_number(uniform(rng, 0.1, lz - 0.1)) + "\nuser_height_m = " +
                      config::format_number(uz) + "\nuser_positions = [[" + config::format_number(ux) + ", " +
                      config::format_number(uy) + ", " + config::format_number(uz) + "]]\n";
    if (rng() & 1u) cfg += "patch_rotate_90 = true\n";
    Scenario s;
    try {
      s = load_scenario(cfg);
    } catch (const ValidationError&) {
      continue;  // user inside an antenna's exclusion radius
    }
    const auto h = draw_channel(s, 0, 0);
    const double lambda = kSpeedOfLight / f;
    const PatchPattern p(s.pattern.patch_h_m, s.patch_width_m(), lambda);
    for (int m = 0; m < s.num_antennas() && geometries < 1000; ++m, ++geometries) {
      // Independent direction: explicit projections on the antenna axes.
      const Vec3 d = s.users[0].position - s.antennas[m].position;
      const double r = d.norm();
      const double theta = std::acos(d.dot(s.antennas[m].basis.col(2)) / r);
      const double phi = std::atan2(d.dot(s.antennas[m].basis.col(1)), d.dot(s.antennas[m].basis.col(0)));
      const double expected = p.gain(theta, phi) * std::pow(lambda / (4 * kPi * r), 2);
      const double got = std::norm(h[0].entries(m, 0));
      if (expected == 0.0) {
        worst = std::max(worst, got == 0.0 ? 0.0 : 1.0);
      } else {
        worst = std::max(worst, std::abs(got / expected - 1.0));
      }
    }
  }
  return {worst < 1e-12, "max relative deviation " + fmt("%.2e", worst) + " (<1e-12) over 1000 geometries"};
}

// ---------------------------------------------------------------------------

Outcome ls_estimator() {
  const Scenario s = load_scenario_file(std::string(WEAVESIM_SOURCE_DIR) + "/configs/indoor_desk.toml");
  const LinkBudget b = link_budget(s);
  const int k = s.num_users();
  const int tau = s.radio.tau_p;
  const PilotBook pilots = make_pilots(tau, k);
  Rng rng(404);
  const auto h = draw_channel(s, 0, 0);
  const CMatrix& g = h[0].entries;

  const CMatrix clean = ls_estimate(receive_pilots(g, pilots, b.pilot_w, 0.0, rng), pilots, b.pilot_w, tau).entries;
  const double exact = (clean - g).cwiseAbs().maxCoeff() / g.cwiseAbs().maxCoeff();

  // Error variance pooled over a 4 x K block of entries and 10^4 trials.
  const CMatrix g4 = g.topRows(4);
  const int trials = 10000;
  double sum = 0.0, sum_sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    const CMatrix err = ls_estimate(receive_pilots(g4, pilots, b.pilot_w, b.n0_bs_w, rng), pilots, b.pilot_w, tau).entries - g4;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
      const double e = std::norm(err.data()[i]);
      sum += e;
      sum_sq += e * e;
    }
  }
  const double n = static_cast<double>(trials) * g4.size();
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  const double theory = b.n0_bs_w / (b.pilot_w * tau);
  const double z = (mean - theory) / se;
  return {exact < 1e-12 && std::abs(z) < 3.0,
          "noiseless error " + fmt("%.2e", exact) + " (<1e-12), variance/theory " + fmt("%.5f", mean / theory) +
              " at z = " + fmt("%+.2f", z) + " (|z|<3)"};
}

// ---------------------------------------------------------------------------

Outcome zf_nulling() {
  double worst = 0.0;
  for (int m : {8, 64}) {
    for (int k : {2, 8}) {
      for (const char* dir : {"downlink", "uplink"}) {
        const std::string cfg = "room_length_m = 40\nroom_width_m = 40\nroom_height_m = 10\nnum_antennas = " +
                                std::to_string(m) + "\nnum_users = " + std::to_string(k) +
                                "\nsignal_bandwidth_hz = 2e6\nchannel_type = \"rayleigh\"\ndirection = \"" + dir +
                                "\"\n";
        const Scenario s = load_scenario(cfg);
        for (int block = 0; block < 20; ++block) {
          for (const auto& h : draw_channel(s, block, 505)) {
            const EstimatedChannel perfect{h.entries};
            CMatrix t;
            if (std::string(dir) == "downlink") {
              t = h.entries.adjoint() * make_precoder(perfect, PrecoderKind::kZf).matrix;
            } else {
              t = make_combiner(perfect, PrecoderKind::kZf).matrix * h.entries;
            }
            for (int i = 0; i < k; ++i) {
              for (int j = 0; j < k; ++j) {
                if (i != j) worst = std::max(worst, std::norm(t(i, j)) / std::norm(t(i, i)));
              }
            }
          }
        }
      }
    }
  }
  return {worst < 1e-20, "max interference / signal " + fmt("%.2e", worst) +
                             " (<1e-20), M in {8,64}, K in {2,8}, both directions"};
}

// ---------------------------------------------------------------------------

std::vector<std::vector<double>> per_drop_db(const SinrTrace& t, int blocks) {
  std::vector<std::vector<double>> out(blocks);
  for (const auto& s : t.samples) out[s.block].push_back(linear_to_db(s.sinr));
  return out;
}

Outcome sinr_cdf() {
  const Scenario s = load_scenario_file(std::string(WEAVESIM_SOURCE_DIR) + "/configs/indoor_desk.toml");
  const std::vector<TraceVariant> variants = {
      {CsiKind::kPerfect, PrecoderKind::kZf}, {CsiKind::kLs, PrecoderKind::kZf}, {CsiKind::kLs, PrecoderKind::kMrt}};
  const int blocks = 1000;
  std::vector<std::vector<double>> drop_median(3);  // [variant][drop], seeds A then B
  double pooled[2][3];
  int rejected = 0;
  for (int half = 0; half < 2; ++half) {
    const auto traces = generate_traces(s, variants, blocks, 0xA11CE + half * 0x5EED, 0);
    rejected += traces[0].rejected_drops;
    for (int v = 0; v < 3; ++v) {
      std::vector<double> all;
      for (auto& d : per_drop_db(traces[v], blocks)) {
        all.insert(all.end(), d.begin(), d.end());
        drop_median[v].push_back(median(std::move(d)));
      }
      pooled[half][v] = median(std::move(all));
    }
  }
  const std::size_t drops = drop_median[0].size();
  // Bootstrap over drops of the mean per-drop median difference.
  Rng rng(606);
  const int reps = 2000;
  double lower[2];
  for (int pair = 0; pair < 2; ++pair) {
    std::vector<double> diff(drops);
    for (std::size_t d = 0; d < drops; ++d) diff[d] = drop_median[pair][d] - drop_median[pair + 1][d];
    std::vector<double> means(reps);
    for (int r = 0; r < reps; ++r) {
      double acc = 0.0;
      for (std::size_t i = 0; i < drops; ++i) acc += diff[rng() % drops];
      means[r] = acc / static_cast<double>(drops);
    }
    std::sort(means.begin(), means.end());
    lower[pair] = means[static_cast<std::size_t>(0.025 * reps)];
  }
  double stability = 0.0;
  for (int v = 0; v < 3; ++v) stability = std::max(stability, std::abs(pooled[0][v] - pooled[1][v]));
  const bool pass = lower[0] > 0.0 && lower[1] > 0.0 && stability < 1.0;
  return {pass, "medians ZF/perfect " + fmt("%.2f", pooled[0][0]) + ", ZF/LS " + fmt("%.2f", pooled[0][1]) +
                    ", MRT/LS " + fmt("%.2f", pooled[0][2]) + " dB; 2.5% bootstrap bounds " + fmt("%.3f", lower[0]) +
                    ", " + fmt("%.3f", lower[1]) + " dB (>0) over " + std::to_string(drops) +
                    " drops; seed-to-seed " + fmt("%.3f", stability) + " dB (<1); rejected " +
                    std::to_string(rejected)};
}

// ---------------------------------------------------------------------------
// Link-level criteria share one reference curve and the calibrated beta.

struct LinkState {
  McsEntry mcs = mcs_from_name("qpsk_r12_conv");
  RefCurve curve;
  double beta = std::numeric_limits<double>::quiet_NaN();
};

LinkState& link_state() {
  static LinkState st;
  if (st.curve.empty()) {
    std::vector<double> grid;
    for (int i = 0; i <= 32; ++i) grid.push_back(-1.0 + 0.25 * i);
    st.curve = awgn_reference_curve(st.mcs, grid, 10000, 0xC0DE);
  }
  return st;
}

constexpr std::uint64_t kProfilePackets = 5000;

Outcome beta_robustness() {
  LinkState& st = link_state();
  std::vector<double> betas;
  std::string detail;
  for (auto [m, n] : {std::pair{48, 2}, std::pair{64, 18}}) {
    ProfileSetSpec spec;
    spec.num_antennas = m;
    spec.num_users = m - 1;
    spec.num_subcarriers = n;
    spec.num_profiles = 256;
    spec.placement_beta = beta_lookup(st.mcs.index, CodeFamily::kLdpcRef);
    spec.per_high = 0.7;
    spec.per_low = 1e-2;
    const auto profiles = rayleigh_profiles(spec, st.curve, mix64(0x7000 + m));
    const auto cal = simulate_profiles(profiles, st.mcs, kProfilePackets, mix64(0x7100 + m));
    const CalibrationResult r = calibrate_beta(cal, st.curve);
    betas.push_back(r.beta_star);
    detail += "(" + std::to_string(m) + "," + std::to_string(n) + ") beta* " + fmt("%.4f", r.beta_star) + " rms " +
              fmt("%.3f", r.residual_rms) + " n=" + std::to_string(r.samples_used) + "; ";
  }
  const double lo = *std::min_element(betas.begin(), betas.end());
  const double hi = *std::max_element(betas.begin(), betas.end());
  const double spread = (hi - lo) / (0.5 * (hi + lo));
  st.beta = 0.5 * (hi + lo);
  return {spread <= 0.05, detail + "relative spread " + fmt("%.4f", spread) + " (<=0.05)"};
}

double calibrated_beta() {
  LinkState& st = link_state();
  if (std::isnan(st.beta)) st.beta = beta_lookup(st.mcs.index, st.mcs.family);
  return st.beta;
}

// Fraction of in-window profiles within the log-PER tolerance.
Outcome prediction_check(const std::vector<CalibrationSample>& sims, double beta, double per_lo, double per_hi,
                         int min_profiles) {
  const RefCurve& curve = link_state().curve;
  int in_window = 0, good = 0;
  double worst = 0.0;
  for (const auto& s : sims) {
    if (s.per_sim < per_lo || s.per_sim > per_hi) continue;
    ++in_window;
    const double gap = std::abs(std::log10(predict_per(compress(s.gammas, CompressionMethod::kEesm, beta), curve)) -
                                std::log10(s.per_sim));
    worst = std::max(worst, gap);
    good += gap <= 0.3;
  }
  const double frac = in_window ? static_cast<double>(good) / in_window : 0.0;
  return {in_window >= min_profiles && frac >= 0.9,
          std::to_string(good) + "/" + std::to_string(in_window) + " profiles within 0.3 decades (" +
              fmt("%.3f", frac) + " >= 0.9, need >= " + std::to_string(min_profiles) + " in [" + fmt("%g", per_lo) +
              ", " + fmt("%g", per_hi) + "]), worst " + fmt("%.3f", worst) + ", beta " + fmt("%.4f", beta)};
}

Outcome prediction_accuracy() {
  LinkState& st = link_state();
  const double beta = calibrated_beta();
  std::vector<CalibrationSample> sims;
  // Fresh shapes from several array sizes and codeword spans.
  int index = 0;
  for (auto [m, n] : {std::pair{32, 4}, std::pair{48, 8}, std::pair{64, 12}, std::pair{96, 24}}) {
    ProfileSetSpec spec;
    spec.num_antennas = m;
    spec.num_users = m - 1;
    spec.num_subcarriers = n;
    spec.num_profiles = 20;
    spec.placement_beta = beta;
    spec.per_high = 0.4;
    spec.per_low = 1.5e-2;
    const auto profiles = rayleigh_profiles(spec, st.curve, mix64(0x8000 + index));
    const auto part = simulate_profiles(profiles, st.mcs, kProfilePackets, mix64(0x8100 + index));
    sims.insert(sims.end(), part.begin(), part.end());
    ++index;
  }
  return prediction_check(sims, beta, 1e-2, 0.5, 50);
}

Outcome extreme_profiles() {
  LinkState& st = link_state();
  const double beta = calibrated_beta();
  NotchProfileSpec spec;
  spec.num_subcarriers = 20;
  spec.num_profiles = 24;
  spec.notch_fraction = 0.2;
  spec.notch_depth_db = 10.0;
  spec.placement_beta = beta;
  spec.per_high = 0.4;
  spec.per_low = 1.5e-2;
  const auto profiles = notch_profiles(spec, st.curve, 0x9000);
  const auto sims = simulate_profiles(profiles, st.mcs, kProfilePackets, 0x9100);
  return prediction_check(sims, beta, 1e-2, 0.5, 20);
}

// ---------------------------------------------------------------------------

Outcome link_sanity() {
  const McsEntry bpsk = mcs_from_name("bpsk_r12_conv");
  LinkOptions opts;
  opts.uncoded = true;
  opts.info_bits = 10000;
  // Q(sqrt(2 gamma)) from erfc at 40 digits (tests/oracles/scalar_oracles.py).
  const double q[3] = {0.078649603525142565329, 0.02287840756108532716, 0.0023882907809328063276};
  const double db[3] = {0.0, 3.0, 6.0};
  double worst_z = 0.0;
  std::string detail;
  for (int i = 0; i < 3; ++i) {
    const PacketResult r = simulate_per(std::vector<double>{db_to_linear(db[i])}, bpsk, 100, 0x10A + i, opts);
    const double sigma = std::sqrt(q[i] * (1 - q[i]) / static_cast<double>(r.n_bits));
    const double z = (r.ber() - q[i]) / sigma;
    worst_z = std::max(worst_z, std::abs(z));
    detail += fmt("%.0f dB ", db[i]) + "z=" + fmt("%+.2f", z) + "; ";
  }
  Rng rng(1010);
  int roundtrip_fail = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<std::uint8_t> bits(1 + rng() % 2000);
    for (auto& b : bits) b = rng() & 1u;
    const auto code = conv_encode(bits);
    std::vector<double> llr(code.size());
    for (std::size_t i = 0; i < code.size(); ++i) llr[i] = code[i] ? -1.0 : 1.0;
    roundtrip_fail += viterbi_decode(llr, bits.size()) != bits;
  }
  return {worst_z < 3.0 && roundtrip_fail == 0,
          detail + "1e6 bits each (|z|<3); noiseless round-trip failures " + std::to_string(roundtrip_fail) + "/200"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "EESM property suite", 10, eesm_properties},
      {2, "patch normalization", 30, patch_normalization},
      {3, "LOS gain identity", 5, los_identity},
      {4, "LS estimator", 30, ls_estimator},
      {5, "ZF nulling", 10, zf_nulling},
      {6, "SINR CDF behaviour", 300, sinr_cdf},
      {7, "beta robustness", 900, beta_robustness},
      {8, "prediction accuracy", 900, prediction_accuracy},
      {9, "extreme-profile robustness", 600, extreme_profiles},
      {10, "link oracle sanity", 120, link_sanity},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("[%s] %2d %-27s %s | %.1f s (budget %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_s);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
