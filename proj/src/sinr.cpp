#include "weavesim/sinr.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>

#include "weavesim/channel.hpp"
#include "weavesim/rng.hpp"

namespace weavesim {

double noise_power(const NoiseModel& nm) {
  return nm.boltzmann * nm.temperature_k * nm.bandwidth_hz * db_to_linear(nm.noise_figure_db);
}

namespace {

void check_dims(const CMatrix& g, Eigen::Index m, Eigen::Index k, std::size_t eta_size) {
  if (g.rows() != m || g.cols() != k) {
    throw ValidationError("SINR: channel is " + std::to_string(g.rows()) + "x" +
                          std::to_string(g.cols()) + ", processing matrix expects " +
                          std::to_string(m) + "x" + std::to_string(k));
  }
  if (static_cast<Eigen::Index>(eta_size) != k) {
    throw ValidationError("SINR: power control has " + std::to_string(eta_size) +
                          " entries, expected " + std::to_string(k));
  }
}

}  // namespace

std::vector<double> downlink_sinr(const CMatrix& g_true, const Precoder& precoder,
                                  std::span<const double> eta, double rho_dl_w, double n0_w) {
  const Eigen::Index k_count = precoder.matrix.cols();
  check_dims(g_true, precoder.matrix.rows(), k_count, eta.size());
  // b(k, i) = g_k^H a_i
  const CMatrix b = g_true.adjoint() * precoder.matrix;
  std::vector<double> out(k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    double interference = 0.0;
    for (Eigen::Index i = 0; i < k_count; ++i) {
      if (i != k) interference += rho_dl_w * eta[i] * std::norm(b(k, i));
    }
    out[k] = rho_dl_w * eta[k] * std::norm(b(k, k)) / (interference + n0_w);
  }
  return out;
}

std::vector<double> uplink_sinr(const CMatrix& g_true, const Combiner& combiner,
                                std::span<const double> eta, double rho_ul_w, double n0_w) {
  const Eigen::Index k_count = combiner.matrix.rows();
  check_dims(g_true, combiner.matrix.cols(), k_count, eta.size());
  // c(k, i) = v_k^H g_i
  const CMatrix c = combiner.matrix * g_true;
  std::vector<double> out(k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    double interference = 0.0;
    for (Eigen::Index i = 0; i < k_count; ++i) {
      if (i != k) interference += rho_ul_w * eta[i] * std::norm(c(k, i));
    }
    const double noise = n0_w * combiner.matrix.row(k).squaredNorm();
    out[k] = rho_ul_w * eta[k] * std::norm(c(k, k)) / (interference + noise);
  }
  return out;
}

LinkBudget link_budget(const Scenario& s) {
  const auto& r = s.radio;
  const double n_sc = r.num_subcarriers();
  NoiseModel ue{r.boltzmann, r.temperature_k, r.subcarrier_bw_hz, r.nf_ue_db};
  NoiseModel bs{r.boltzmann, r.temperature_k, r.subcarrier_bw_hz, r.nf_bs_db};
  return {r.rho_dl_w / n_sc, r.rho_ul_w / n_sc, r.pilot_power_w / n_sc, noise_power(ue),
          noise_power(bs)};
}

namespace {

constexpr int kMaxRejections = 100;

struct BlockResult {
  std::vector<std::vector<double>> sinr;  // [variant][subcarrier * K + user]
  int rejected = 0;
};

BlockResult simulate_block(const Scenario& s, std::span<const TraceVariant> variants,
                           const ChannelSynthesizer& synth, const PilotBook& pilots,
                           const LinkBudget& budget, int block, std::uint64_t seed,
                           std::atomic<int>& rejection_budget) {
  const int k_count = s.num_users();
  const int n_sc = synth.num_subcarriers();
  const bool any_ls = std::any_of(variants.begin(), variants.end(),
                                  [](const TraceVariant& v) { return v.csi == CsiKind::kLs; });
  BlockResult result;
  for (int attempt = 0;; ++attempt) {
    const std::uint64_t drop_seed = attempt == 0 ? seed : mix64(seed ^ mix64(attempt));
    try {
      std::vector<UserPosition> drawn;
      std::span<const UserPosition> users = s.users;
      if (s.resample_users_per_drop) {
        Rng urng = substream(drop_seed, StreamDomain::kUsers, {static_cast<std::uint64_t>(block)});
        drawn = place_users(s.room, k_count, s.d_min_m, s.user_height_m, s.antennas, urng);
        users = drawn;
      }
      const auto channels = synth.draw(users, block, drop_seed);
      result.sinr.assign(variants.size(), std::vector<double>(static_cast<std::size_t>(n_sc) * k_count));
      for (int n = 0; n < n_sc; ++n) {
        const CMatrix& g = channels[n].entries;
        EstimatedChannel g_ls;
        if (any_ls) {
          Rng nrng = substream(drop_seed, StreamDomain::kPilotNoise,
                               {static_cast<std::uint64_t>(block), static_cast<std::uint64_t>(n)});
          const CMatrix y_p = receive_pilots(g, pilots, budget.pilot_w, budget.n0_bs_w, nrng);
          g_ls = ls_estimate(y_p, pilots, budget.pilot_w, pilots.tau_p());
        }
        const EstimatedChannel g_perfect{g};
        for (std::size_t v = 0; v < variants.size(); ++v) {
          const EstimatedChannel& g_hat = variants[v].csi == CsiKind::kPerfect ? g_perfect : g_ls;
          std::vector<double> sinr;
          if (s.direction == LinkDirection::kDownlink) {
            sinr = downlink_sinr(g, make_precoder(g_hat, variants[v].precoder), s.power_control,
                                 budget.rho_dl_w, budget.n0_ue_w);
          } else {
            sinr = uplink_sinr(g, make_combiner(g_hat, variants[v].precoder), s.power_control,
                               budget.rho_ul_w, budget.n0_bs_w);
          }
          for (int k = 0; k < k_count; ++k) {
            if (!(sinr[k] > 0.0) || !std::isfinite(sinr[k])) {
              throw SimulationError("non-positive or non-finite SINR");
            }
            result.sinr[v][static_cast<std::size_t>(n) * k_count + k] = sinr[k];
          }
        }
      }
      return result;
    } catch (const SimulationError& e) {
      ++result.rejected;
      if (rejection_budget.fetch_sub(1) <= 0) {
        throw SimulationError(std::string("generate_trace: more than 100 rejected drops; last: ") +
                              e.what());
      }
    }
  }
}

}  // namespace

std::vector<SinrTrace> generate_traces(const Scenario& s, std::span<const TraceVariant> variants,
                                       int n_blocks, std::uint64_t seed, int threads) {
  if (n_blocks < 0) throw ValidationError("n_blocks must be >= 0");
  std::vector<SinrTrace> traces(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v) {
    Scenario sv = s;
    sv.csi_kind = variants[v].csi;
    sv.precoder_kind = variants[v].precoder;
    validate(sv);
    traces[v].scenario_hash = scenario_hash(sv);
    traces[v].seed = seed;
    traces[v].direction = s.direction;
  }
  if (variants.empty() || n_blocks == 0 || s.num_users() == 0) return traces;

  const ChannelSynthesizer synth(s);
  const PilotBook pilots = make_pilots(s.radio.tau_p, s.num_users());
  const LinkBudget budget = link_budget(s);
  const int k_count = s.num_users();
  const int n_sc = synth.num_subcarriers();

  std::vector<BlockResult> blocks(n_blocks);
  std::atomic<int> next{0};
  std::atomic<int> rejection_budget{kMaxRejections};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const int b = next.fetch_add(1);
      if (b >= n_blocks) return;
      try {
        blocks[b] = simulate_block(s, variants, synth, pilots, budget, b, seed, rejection_budget);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n_blocks);
        return;
      }
    }
  };
  int n_threads = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  n_threads = std::min(n_threads, n_blocks);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  int rejected = 0;
  for (const auto& b : blocks) rejected += b.rejected;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    auto& samples = traces[v].samples;
    samples.reserve(static_cast<std::size_t>(n_blocks) * n_sc * k_count);
    for (int k = 0; k < k_count; ++k) {
      for (int b = 0; b < n_blocks; ++b) {
        for (int n = 0; n < n_sc; ++n) {
          samples.push_back({k, b, n, blocks[b].sinr[v][static_cast<std::size_t>(n) * k_count + k]});
        }
      }
    }
    traces[v].rejected_drops = rejected;
  }
  return traces;
}

SinrTrace generate_trace(const Scenario& s, int n_blocks, std::uint64_t seed, int threads) {
  validate(s);
  const TraceVariant own[1] = {{s.csi_kind, s.precoder_kind}};
  return std::move(generate_traces(s, own, n_blocks, seed, threads).front());
}

CdfTable empirical_cdf(std::vector<double> values_db) {
  if (values_db.empty()) throw ValidationError("empirical_cdf: empty sample set");
  std::sort(values_db.begin(), values_db.end());
  CdfTable out(values_db.size());
  const double n = static_cast<double>(values_db.size());
  for (std::size_t i = 0; i < values_db.size(); ++i) {
    out[i] = {values_db[i], static_cast<double>(i + 1) / n};
  }
  return out;
}

CdfTable empirical_cdf(const SinrTrace& trace, std::optional<int> user) {
  std::vector<double> db;
  db.reserve(trace.samples.size());
  for (const auto& s : trace.samples) {
    if (!user || s.user == *user) db.push_back(linear_to_db(s.sinr));
  }
  return empirical_cdf(std::move(db));
}

double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  double lo = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lo + hi);
}

std::vector<TraceProfile> trace_profiles(const SinrTrace& trace, int blocks_per_codeword) {
  if (blocks_per_codeword < 1) throw ValidationError("blocks_per_codeword must be >= 1");
  std::map<std::pair<int, int>, TraceProfile> grouped;
  for (const auto& s : trace.samples) {
    const int first = s.block / blocks_per_codeword * blocks_per_codeword;
    auto& p = grouped[{s.user, first}];
    p.user = s.user;
    p.first_block = first;
    p.gammas.push_back(s.sinr);
  }
  std::vector<TraceProfile> out;
  out.reserve(grouped.size());
  for (auto& [key, p] : grouped) out.push_back(std::move(p));
  return out;
}

void write_trace_csv(std::ostream& os, const SinrTrace& trace) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "# scenario_hash=%016llx seed=%llu direction=%s\n",
                static_cast<unsigned long long>(trace.scenario_hash),
                static_cast<unsigned long long>(trace.seed),
                std::string(to_string(trace.direction)).c_str());
  os << buf;
  os << "user,block,subcarrier,sinr_db\n";
  for (const auto& s : trace.samples) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g\n", s.user, s.block, s.subcarrier,
                  linear_to_db(s.sinr));
    os << buf;
  }
}

SinrTrace read_trace_csv(std::istream& is) {
  SinrTrace trace;
  std::string line;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      unsigned long long hash = 0, seed = 0;
      char dir[16] = {0};
      if (std::sscanf(line.c_str(), "# scenario_hash=%llx seed=%llu direction=%15s", &hash, &seed,
                      dir) == 3) {
        trace.scenario_hash = hash;
        trace.seed = seed;
        trace.direction = std::string(dir) == "uplink" ? LinkDirection::kUplink : LinkDirection::kDownlink;
      }
      continue;
    }
    if (!header_seen) {
      if (line != "user,block,subcarrier,sinr_db") {
        throw ValidationError("trace CSV: expected header 'user,block,subcarrier,sinr_db'");
      }
      header_seen = true;
      continue;
    }
    SinrSample s;
    double db = 0.0;
    char extra = 0;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%lf%c", &s.user, &s.block, &s.subcarrier, &db, &extra) != 4) {
      throw ValidationError("trace CSV line " + std::to_string(line_no) + " is malformed");
    }
    s.sinr = db_to_linear(db);
    if (!(s.sinr > 0.0) || !std::isfinite(s.sinr)) {
      throw ValidationError("trace CSV line " + std::to_string(line_no) + ": SINR must be finite");
    }
    trace.samples.push_back(s);
  }
  if (!header_seen) throw ValidationError("trace CSV: missing header");
  std::sort(trace.samples.begin(), trace.samples.end(), [](const SinrSample& a, const SinrSample& b) {
    return std::tie(a.user, a.block, a.subcarrier) < std::tie(b.user, b.block, b.subcarrier);
  });
  return trace;
}

void write_cdf_csv(std::ostream& os, const CdfTable& cdf) {
  os << "sinr_db,prob\n";
  char buf[64];
  for (const auto& p : cdf) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.value_db, p.prob);
    os << buf;
  }
}

}  // namespace weavesim
