#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace weavesim {

enum class CompressionMethod { kEesm, kCapacity, kAverage };

CompressionMethod parse_compression_method(std::string_view name);

// Effective SINR (linear) of a vector of linear SINRs.
//   EESM:     -beta ln(mean(exp(-g_n / beta)))
//   Capacity: beta (2^{mean(log2(1 + g_n / beta))} - 1)
//   Average:  mean(g_n), beta ignored
double compress(std::span<const double> gammas, CompressionMethod method, double beta);

enum class Modulation { kBpsk, kQpsk, kQam16 };
enum class CodeFamily { kLdpcRef, kPolarRef, kConvK7 };

int bits_per_symbol(Modulation m);
std::string_view to_string(Modulation m);
std::string_view to_string(CodeFamily f);
Modulation parse_modulation(std::string_view s);
CodeFamily parse_code_family(std::string_view s);

struct McsEntry {
  int index = 0;
  Modulation modulation = Modulation::kQpsk;
  int rate_num = 1;
  int rate_den = 2;
  double beta = 1.0;
  CodeFamily family = CodeFamily::kConvK7;

  double code_rate() const { return static_cast<double>(rate_num) / rate_den; }
};

// "bpsk_r12_conv", "qpsk_r12_conv", "qam16_r12_conv".
McsEntry mcs_from_name(std::string_view name);
std::string mcs_name(const McsEntry& mcs);

struct CurvePoint {
  double snr_db = 0.0;
  double per = 0.0;
  bool zero_errors = false;  // per is the 0.5 / n_packets placeholder
};

// AWGN SNR -> PER table. Construction enforces strictly increasing SNR and
// PER in (0, 1], then applies a nonincreasing isotonic fit.
class RefCurve {
 public:
  RefCurve() = default;
  explicit RefCurve(std::vector<CurvePoint> points, std::optional<McsEntry> mcs = std::nullopt);

  const std::vector<CurvePoint>& points() const { return points_; }
  const std::optional<McsEntry>& mcs() const { return mcs_; }
  bool empty() const { return points_.empty(); }

 private:
  std::vector<CurvePoint> points_;
  std::optional<McsEntry> mcs_;
};

// Pool-adjacent-violators fit of a nonincreasing sequence (weights default 1).
std::vector<double> isotonic_nonincreasing(std::span<const double> values,
                                           std::span<const double> weights = {});

// Linear interpolation in (snr_db, log10 per); clamped outside the grid.
double predict_per(double gamma_eff_linear, const RefCurve& curve);

struct CalibrationSample {
  std::vector<double> gammas;  // linear
  double per_sim = 0.0;
};

struct BetaSearch {
  double beta_lo = 0.05;
  double beta_hi = 20.0;
  int grid_points = 200;
  double per_lo = 1e-3;
  double per_hi = 0.9;
  int golden_iterations = 80;
};

struct CalibrationResult {
  double beta_star = 0.0;
  double residual_rms = 0.0;  // in log10 PER
  int samples_used = 0;
  int samples_windowed_out = 0;
  int zero_per_samples = 0;
};

// Sum over samples of (log10 PER_sim - log10 predict_per(EESM(beta)))^2.
double calibration_objective(std::span<const CalibrationSample> samples, const RefCurve& curve,
                             double beta);

// Grid search on a log-spaced grid (smallest beta wins ties) refined by a
// golden-section search between the neighbours of the best grid point.
CalibrationResult calibrate_beta(std::span<const CalibrationSample> cal_set, const RefCurve& curve,
                                 const BetaSearch& search = {});

// Lookup of calibrated beta per (MCS index, code family). Built-in rows hold
// the reference LDPC and polar values and the ConvK7 values calibrated with
// this simulator; more rows can be merged from CSV.
class BetaTable {
 public:
  static BetaTable builtin();

  void upsert(const McsEntry& entry);
  std::optional<McsEntry> find(int mcs_index, CodeFamily family) const;
  const std::vector<McsEntry>& entries() const { return entries_; }

  void merge_csv(std::istream& is);
  void write_csv(std::ostream& os) const;

 private:
  std::vector<McsEntry> entries_;
};

// Built-in table, merged with $WEAVESIM_DATA/beta_table.csv when present.
// Throws ValidationError for unknown entries.
double beta_lookup(int mcs_index, CodeFamily family);
double beta_lookup(const BetaTable& table, int mcs_index, CodeFamily family);

void write_curve_csv(std::ostream& os, const RefCurve& curve);
RefCurve read_curve_csv(std::istream& is);

// Calibration set long format: profile,subcarrier,sinr_db,per_sim
void write_calset_csv(std::ostream& os, std::span<const CalibrationSample> samples);
std::vector<CalibrationSample> read_calset_csv(std::istream& is);

}  // namespace weavesim
