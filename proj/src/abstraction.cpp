#include "weavesim/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "weavesim/common.hpp"

namespace weavesim {

CompressionMethod parse_compression_method(std::string_view name) {
  if (name == "eesm") return CompressionMethod::kEesm;
  if (name == "capacity") return CompressionMethod::kCapacity;
  if (name == "average") return CompressionMethod::kAverage;
  throw ValidationError("unknown compression method '" + std::string(name) +
                        "' (eesm | capacity | average)");
}

double compress(std::span<const double> gammas, CompressionMethod method, double beta) {
  if (gammas.empty()) throw ValidationError("compress: empty SINR profile");
  double g_min = gammas[0];
  for (double g : gammas) {
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw ValidationError("compress: SINR entries must be positive and finite");
    }
    g_min = std::min(g_min, g);
  }
  const double n = static_cast<double>(gammas.size());
  switch (method) {
    case CompressionMethod::kAverage: {
      double sum = 0.0;
      for (double g : gammas) sum += g;
      return sum / n;
    }
    case CompressionMethod::kEesm: {
      if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("compress: beta must be > 0");
      // Shifted by the minimum so the largest exponential is exactly 1.
      double acc = 0.0;
      for (double g : gammas) acc += std::expm1(-(g - g_min) / beta);
      return g_min - beta * std::log1p(acc / n);
    }
    case CompressionMethod::kCapacity: {
      if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("compress: beta must be > 0");
      double acc = 0.0;
      for (double g : gammas) acc += std::log1p(g / beta);
      return beta * std::expm1(acc / n);
    }
  }
  throw ValidationError("compress: unknown method");
}

int bits_per_symbol(Modulation m) {
  switch (m) {
    case Modulation::kBpsk: return 1;
    case Modulation::kQpsk: return 2;
    case Modulation::kQam16: return 4;
  }
  return 0;
}

std::string_view to_string(Modulation m) {
  switch (m) {
    case Modulation::kBpsk: return "BPSK";
    case Modulation::kQpsk: return "QPSK";
    case Modulation::kQam16: return "16QAM";
  }
  return "?";
}

std::string_view to_string(CodeFamily f) {
  switch (f) {
    case CodeFamily::kLdpcRef: return "LDPC-ref";
    case CodeFamily::kPolarRef: return "Polar-ref";
    case CodeFamily::kConvK7: return "ConvK7";
  }
  return "?";
}

Modulation parse_modulation(std::string_view s) {
  if (s == "BPSK" || s == "bpsk") return Modulation::kBpsk;
  if (s == "QPSK" || s == "qpsk") return Modulation::kQpsk;
  if (s == "16QAM" || s == "qam16" || s == "16-QAM") return Modulation::kQam16;
  throw ValidationError("unknown modulation '" + std::string(s) + "'");
}

CodeFamily parse_code_family(std::string_view s) {
  if (s == "LDPC-ref" || s == "ldpc") return CodeFamily::kLdpcRef;
  if (s == "Polar-ref" || s == "polar") return CodeFamily::kPolarRef;
  if (s == "ConvK7" || s == "conv") return CodeFamily::kConvK7;
  throw ValidationError("unknown code family '" + std::string(s) + "'");
}

McsEntry mcs_from_name(std::string_view name) {
  McsEntry e;
  e.family = CodeFamily::kConvK7;
  if (name == "bpsk_r12_conv") {
    e.index = 0;
    e.modulation = Modulation::kBpsk;
  } else if (name == "qpsk_r12_conv") {
    e.index = 1;
    e.modulation = Modulation::kQpsk;
  } else if (name == "qam16_r12_conv") {
    e.index = 2;
    e.modulation = Modulation::kQam16;
  } else {
    throw ValidationError("unknown MCS '" + std::string(name) +
                          "' (bpsk_r12_conv | qpsk_r12_conv | qam16_r12_conv)");
  }
  return e;
}

std::string mcs_name(const McsEntry& mcs) {
  std::string mod = mcs.modulation == Modulation::kBpsk   ? "bpsk"
                    : mcs.modulation == Modulation::kQpsk ? "qpsk"
                                                          : "qam16";
  std::string fam = mcs.family == CodeFamily::kConvK7     ? "conv"
                    : mcs.family == CodeFamily::kLdpcRef ? "ldpc"
                                                          : "polar";
  return mod + "_r" + std::to_string(mcs.rate_num) + std::to_string(mcs.rate_den) + "_" + fam;
}

// ---------------------------------------------------------------------------

std::vector<double> isotonic_nonincreasing(std::span<const double> values,
                                           std::span<const double> weights) {
  struct Block {
    double mean, weight;
    std::size_t count;
  };
  std::vector<Block> stack;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    stack.push_back({values[i], w, 1});
    // Nonincreasing: merge while a later block exceeds the one before.
    while (stack.size() > 1 && stack[stack.size() - 1].mean > stack[stack.size() - 2].mean) {
      Block b = stack.back();
      stack.pop_back();
      Block& a = stack.back();
      const double wt = a.weight + b.weight;
      a.mean = (a.mean * a.weight + b.mean * b.weight) / wt;
      a.weight = wt;
      a.count += b.count;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& b : stack) out.insert(out.end(), b.count, b.mean);
  return out;
}

RefCurve::RefCurve(std::vector<CurvePoint> points, std::optional<McsEntry> mcs)
    : points_(std::move(points)), mcs_(mcs) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i].snr_db)) throw ValidationError("RefCurve: non-finite SNR");
    if (i > 0 && !(points_[i].snr_db > points_[i - 1].snr_db)) {
      throw ValidationError("RefCurve: snr_db must be strictly increasing");
    }
    if (!(points_[i].per > 0.0 && points_[i].per <= 1.0)) {
      throw ValidationError("RefCurve: per must lie in (0, 1]");
    }
  }
  std::vector<double> per(points_.size());
  for (std::size_t i = 0; i < per.size(); ++i) per[i] = points_[i].per;
  const auto fitted = isotonic_nonincreasing(per);
  for (std::size_t i = 0; i < per.size(); ++i) points_[i].per = fitted[i];
}

double predict_per(double gamma_eff_linear, const RefCurve& curve) {
  const auto& pts = curve.points();
  if (pts.empty()) throw ValidationError("predict_per: empty reference curve");
  const double snr_db = linear_to_db(gamma_eff_linear);
  if (!(snr_db > pts.front().snr_db)) return pts.front().per;
  if (!(snr_db < pts.back().snr_db)) return pts.back().per;
  auto it = std::upper_bound(pts.begin(), pts.end(), snr_db,
                             [](double v, const CurvePoint& p) { return v < p.snr_db; });
  const CurvePoint& hi = *it;
  const CurvePoint& lo = *(it - 1);
  const double t = (snr_db - lo.snr_db) / (hi.snr_db - lo.snr_db);
  const double log_per = (1.0 - t) * std::log10(lo.per) + t * std::log10(hi.per);
  return std::pow(10.0, log_per);
}

// ---------------------------------------------------------------------------

double calibration_objective(std::span<const CalibrationSample> samples, const RefCurve& curve,
                             double beta) {
  double sum = 0.0;
  for (const auto& s : samples) {
    const double pred = predict_per(compress(s.gammas, CompressionMethod::kEesm, beta), curve);
    const double d = std::log10(s.per_sim) - std::log10(pred);
    sum += d * d;
  }
  return sum;
}

CalibrationResult calibrate_beta(std::span<const CalibrationSample> cal_set, const RefCurve& curve,
                                 const BetaSearch& search) {
  if (curve.empty()) throw ValidationError("calibrate_beta: empty reference curve");
  if (!(search.beta_lo > 0 && search.beta_hi > search.beta_lo && search.grid_points >= 2)) {
    throw ValidationError("calibrate_beta: invalid beta grid");
  }
  CalibrationResult result;
  std::vector<CalibrationSample> used;
  for (const auto& s : cal_set) {
    if (s.per_sim <= 0.0) ++result.zero_per_samples;
    if (s.per_sim >= search.per_lo && s.per_sim <= search.per_hi) {
      used.push_back(s);
    } else {
      ++result.samples_windowed_out;
    }
  }
  if (used.empty()) throw ValidationError("calibrate_beta: calibration set is empty after windowing");
  result.samples_used = static_cast<int>(used.size());

  auto objective = [&](double beta) {
    const double v = calibration_objective(used, curve, beta);
    if (!std::isfinite(v)) throw SimulationError("calibrate_beta: non-finite objective");
    return v;
  };

  const double log_lo = std::log(search.beta_lo);
  const double log_hi = std::log(search.beta_hi);
  const int n = search.grid_points;
  std::vector<double> grid(n), values(n);
  for (int i = 0; i < n; ++i) {
    grid[i] = std::exp(log_lo + (log_hi - log_lo) * i / (n - 1));
    values[i] = objective(grid[i]);
  }
  int best = 0;
  for (int i = 1; i < n; ++i) {
    if (values[i] < values[best]) best = i;
  }

  double best_beta = grid[best];
  double best_value = values[best];
  // Golden-section in log(beta) over the bracket around the best grid point.
  double a = std::log(grid[std::max(best - 1, 0)]);
  double b = std::log(grid[std::min(best + 1, n - 1)]);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(std::exp(c));
  double fd = objective(std::exp(d));
  for (int it = 0; it < search.golden_iterations; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(std::exp(d));
    }
  }
  const double refined = std::exp(0.5 * (a + b));
  const double refined_value = objective(refined);
  if (refined_value < best_value) {
    best_beta = refined;
    best_value = refined_value;
  }
  result.beta_star = best_beta;
  result.residual_rms = std::sqrt(best_value / static_cast<double>(used.size()));
  return result;
}

// ---------------------------------------------------------------------------

BetaTable BetaTable::builtin() {
  BetaTable t;
  t.upsert({0, Modulation::kBpsk, 1, 2, 0.78, CodeFamily::kLdpcRef});
  t.upsert({1, Modulation::kQpsk, 1, 2, 1.55, CodeFamily::kLdpcRef});
  t.upsert({2, Modulation::kQam16, 1, 2, 4.16, CodeFamily::kLdpcRef});
  t.upsert({1, Modulation::kQpsk, 1, 2, 0.624, CodeFamily::kPolarRef});
  // Calibrated here: 256 Rayleigh profiles over 18 subcarriers, 5000 packets each.
  t.upsert({0, Modulation::kBpsk, 1, 2, 0.914, CodeFamily::kConvK7});
  t.upsert({1, Modulation::kQpsk, 1, 2, 1.87, CodeFamily::kConvK7});
  t.upsert({2, Modulation::kQam16, 1, 2, 7.29, CodeFamily::kConvK7});
  return t;
}

void BetaTable::upsert(const McsEntry& entry) {
  if (!(entry.beta > 0.0)) throw ValidationError("beta table: beta must be > 0");
  if (!(entry.rate_num > 0 && entry.rate_num <= entry.rate_den)) {
    throw ValidationError("beta table: code rate must lie in (0, 1]");
  }
  for (auto& e : entries_) {
    if (e.index == entry.index && e.family == entry.family) {
      e = entry;
      return;
    }
  }
  entries_.push_back(entry);
}

std::optional<McsEntry> BetaTable::find(int mcs_index, CodeFamily family) const {
  for (const auto& e : entries_) {
    if (e.index == mcs_index && e.family == family) return e;
  }
  return std::nullopt;
}

void BetaTable::merge_csv(std::istream& is) {
  std::string line;
  bool header = false;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "mcs_index,modulation,code_rate,code_family,beta") {
        throw ValidationError("beta table CSV: expected header 'mcs_index,modulation,code_rate,code_family,beta'");
      }
      header = true;
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    if (cols.size() != 5) throw ValidationError("beta table CSV line " + std::to_string(line_no) + " is malformed");
    McsEntry e;
    try {
      e.index = std::stoi(cols[0]);
      e.modulation = parse_modulation(cols[1]);
      auto slash = cols[2].find('/');
      if (slash == std::string::npos) throw ValidationError("code rate must be p/q");
      e.rate_num = std::stoi(cols[2].substr(0, slash));
      e.rate_den = std::stoi(cols[2].substr(slash + 1));
      e.family = parse_code_family(cols[3]);
      e.beta = std::stod(cols[4]);
    } catch (const std::logic_error&) {
      throw ValidationError("beta table CSV line " + std::to_string(line_no) + " is malformed");
    }
    upsert(e);
  }
}

void BetaTable::write_csv(std::ostream& os) const {
  os << "mcs_index,modulation,code_rate,code_family,beta\n";
  char buf[128];
  for (const auto& e : entries_) {
    std::snprintf(buf, sizeof buf, "%d,%s,%d/%d,%s,%.17g\n", e.index,
                  std::string(to_string(e.modulation)).c_str(), e.rate_num, e.rate_den,
                  std::string(to_string(e.family)).c_str(), e.beta);
    os << buf;
  }
}

double beta_lookup(const BetaTable& table, int mcs_index, CodeFamily family) {
  if (auto e = table.find(mcs_index, family)) return e->beta;
  throw ValidationError("no calibrated beta for MCS " + std::to_string(mcs_index) + " / " +
                        std::string(to_string(family)));
}

double beta_lookup(int mcs_index, CodeFamily family) {
  BetaTable table = BetaTable::builtin();
  if (const char* env = std::getenv("WEAVESIM_DATA")) {
    std::stringstream dirs(env);
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
      const auto path = std::filesystem::path(dir) / "beta_table.csv";
      std::ifstream f(path);
      if (f) table.merge_csv(f);
    }
  }
  return beta_lookup(table, mcs_index, family);
}

// ---------------------------------------------------------------------------

void write_curve_csv(std::ostream& os, const RefCurve& curve) {
  if (curve.mcs()) os << "# mcs=" << mcs_name(*curve.mcs()) << "\n";
  std::string flagged;
  for (std::size_t i = 0; i < curve.points().size(); ++i) {
    if (curve.points()[i].zero_errors) flagged += (flagged.empty() ? "" : ",") + std::to_string(i);
  }
  if (!flagged.empty()) os << "# zero_error_points=" << flagged << "\n";
  os << "snr_db,per\n";
  char buf[64];
  for (const auto& p : curve.points()) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.snr_db, p.per);
    os << buf;
  }
}

RefCurve read_curve_csv(std::istream& is) {
  std::vector<CurvePoint> pts;
  std::optional<McsEntry> mcs;
  std::vector<std::size_t> flagged;
  std::string line;
  bool header = false;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# mcs=", 0) == 0) {
        try {
          mcs = mcs_from_name(line.substr(6));
        } catch (const ValidationError&) {
        }
      } else if (line.rfind("# zero_error_points=", 0) == 0) {
        std::stringstream ss(line.substr(20));
        std::string idx;
        while (std::getline(ss, idx, ',')) flagged.push_back(std::stoul(idx));
      }
      continue;
    }
    if (!header) {
      if (line != "snr_db,per") throw ValidationError("curve CSV: expected header 'snr_db,per'");
      header = true;
      continue;
    }
    CurvePoint p;
    char extra = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf%c", &p.snr_db, &p.per, &extra) != 2) {
      throw ValidationError("curve CSV line " + std::to_string(line_no) + " is malformed");
    }
    pts.push_back(p);
  }
  if (!header) throw ValidationError("curve CSV: missing header");
  for (std::size_t i : flagged) {
    if (i < pts.size()) pts[i].zero_errors = true;
  }
  return RefCurve(std::move(pts), mcs);
}

void write_calset_csv(std::ostream& os, std::span<const CalibrationSample> samples) {
  os << "profile,subcarrier,sinr_db,per_sim\n";
  char buf[96];
  for (std::size_t p = 0; p < samples.size(); ++p) {
    for (std::size_t n = 0; n < samples[p].gammas.size(); ++n) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g\n", p, n, linear_to_db(samples[p].gammas[n]),
                    samples[p].per_sim);
      os << buf;
    }
  }
}

std::vector<CalibrationSample> read_calset_csv(std::istream& is) {
  std::map<long, CalibrationSample> by_profile;
  std::string line;
  bool header = false;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "profile,subcarrier,sinr_db,per_sim") {
        throw ValidationError("calset CSV: expected header 'profile,subcarrier,sinr_db,per_sim'");
      }
      header = true;
      continue;
    }
    long profile = 0, sc = 0;
    double db = 0.0, per = 0.0;
    char extra = 0;
    if (std::sscanf(line.c_str(), "%ld,%ld,%lf,%lf%c", &profile, &sc, &db, &per, &extra) != 4) {
      throw ValidationError("calset CSV line " + std::to_string(line_no) + " is malformed");
    }
    auto& s = by_profile[profile];
    s.gammas.push_back(db_to_linear(db));
    s.per_sim = per;
  }
  if (!header) throw ValidationError("calset CSV: missing header");
  std::vector<CalibrationSample> out;
  for (auto& [id, s] : by_profile) out.push_back(std::move(s));
  return out;
}

}  // namespace weavesim
