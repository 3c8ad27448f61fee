#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "weavesim/abstraction.hpp"
#include "weavesim/common.hpp"
#include "weavesim/rng.hpp"

using namespace weavesim;

namespace {

RefCurve synthetic_curve() {
  // A waterfall of roughly constant slope in log PER, 0.5 near 1 dB.
  std::vector<CurvePoint> pts;
  for (int i = 0; i <= 40; ++i) {
    const double db = -2.0 + 0.25 * i;
    pts.push_back({db, std::min(1.0, std::pow(10.0, -0.3 - 0.45 * (db - 1.0) - 0.05 * (db - 1.0) * (db - 1.0))),
                   false});
  }
  return RefCurve(pts);
}

std::vector<double> random_profile(Rng& rng, int n, double lo_db, double hi_db) {
  std::uniform_real_distribution<double> u(lo_db, hi_db);
  std::vector<double> g(n);
  for (auto& x : g) x = db_to_linear(u(rng));
  return g;
}

}  // namespace

TEST_CASE("EESM and capacity against extended-precision values") {
  const std::vector<double> g = {1.0, 2.0};
  CHECK(compress(g, CompressionMethod::kEesm, 1.55) == doctest::Approx(1.4207158469599391543).epsilon(1e-14));
  CHECK(compress(g, CompressionMethod::kCapacity, 1.55) ==
        doctest::Approx(1.4587372766660767385).epsilon(1e-14));
  CHECK(compress(g, CompressionMethod::kAverage, 123.0) == 1.5);
}

TEST_CASE("compression input validation") {
  CHECK_THROWS_AS(compress(std::vector<double>{}, CompressionMethod::kEesm, 1.0), ValidationError);
  CHECK_THROWS_AS(compress(std::vector<double>{1.0, -1.0}, CompressionMethod::kEesm, 1.0), ValidationError);
  CHECK_THROWS_AS(compress(std::vector<double>{1.0, std::numeric_limits<double>::infinity()},
                           CompressionMethod::kEesm, 1.0),
                  ValidationError);
  CHECK_THROWS_AS(compress(std::vector<double>{1.0}, CompressionMethod::kEesm, 0.0), ValidationError);
  CHECK_THROWS_AS(compress(std::vector<double>{1.0}, CompressionMethod::kCapacity, -1.0), ValidationError);
  CHECK(parse_compression_method("capacity") == CompressionMethod::kCapacity);
  CHECK_THROWS_AS(parse_compression_method("mmib"), ValidationError);
}

TEST_CASE("EESM properties on random profiles") {
  Rng rng(21);
  std::uniform_int_distribution<int> un(1, 200);
  std::uniform_real_distribution<double> ub(std::log(0.05), std::log(20.0));
  for (int trial = 0; trial < 500; ++trial) {
    const auto g = random_profile(rng, un(rng), -20.0, 40.0);
    const double beta = std::exp(ub(rng));
    const double e = compress(g, CompressionMethod::kEesm, beta);
    double lo = g[0], mean = 0.0;
    for (double x : g) {
      lo = std::min(lo, x);
      mean += x / g.size();
    }
    CHECK(e >= lo * (1 - 1e-12));
    CHECK(e <= mean * (1 + 1e-12));
    const double flat = g[0];
    const std::vector<double> f(g.size(), flat);
    CHECK(std::abs(compress(f, CompressionMethod::kEesm, beta) - flat) <= 1e-12 * flat);
    // Capacity mapping obeys the same bounds.
    const double c = compress(g, CompressionMethod::kCapacity, beta);
    CHECK(c >= lo * (1 - 1e-12));
    CHECK(c <= mean * (1 + 1e-12));
  }
}

TEST_CASE("EESM limits in beta") {
  const std::vector<double> g = {0.5, 2.0, 8.0, 0.01};
  CHECK(compress(g, CompressionMethod::kEesm, 1e10) == doctest::Approx(2.6275).epsilon(1e-6));
  CHECK(compress(g, CompressionMethod::kEesm, 1e-6) == doctest::Approx(0.01).epsilon(1e-3));
  // Increasing in beta and in every entry.
  double prev = 0.0;
  for (double beta : {0.05, 0.1, 0.5, 1.0, 3.0, 20.0}) {
    const double e = compress(g, CompressionMethod::kEesm, beta);
    CHECK(e > prev);
    prev = e;
  }
  std::vector<double> up = g;
  up[1] *= 1.01;
  CHECK(compress(up, CompressionMethod::kEesm, 1.0) > compress(g, CompressionMethod::kEesm, 1.0));
}

TEST_CASE("MCS names and parsing") {
  const McsEntry q = mcs_from_name("qpsk_r12_conv");
  CHECK(q.index == 1);
  CHECK(q.modulation == Modulation::kQpsk);
  CHECK(q.family == CodeFamily::kConvK7);
  CHECK(q.code_rate() == 0.5);
  CHECK(mcs_name(q) == "qpsk_r12_conv");
  CHECK(mcs_name(mcs_from_name("qam16_r12_conv")) == "qam16_r12_conv");
  CHECK(bits_per_symbol(Modulation::kQam16) == 4);
  CHECK(parse_modulation("16-QAM") == Modulation::kQam16);
  CHECK(parse_code_family("LDPC-ref") == CodeFamily::kLdpcRef);
  CHECK_THROWS_AS(mcs_from_name("qpsk_r34_turbo"), ValidationError);
  CHECK_THROWS_AS(parse_modulation("64qam"), ValidationError);
}

TEST_CASE("isotonic fit") {
  CHECK(isotonic_nonincreasing(std::vector<double>{3, 1, 2, 0}) == std::vector<double>{3, 1.5, 1.5, 0});
  CHECK(isotonic_nonincreasing(std::vector<double>{1, 2, 3}) == std::vector<double>{2, 2, 2});
  const std::vector<double> w = {1, 3};
  CHECK(isotonic_nonincreasing(std::vector<double>{1, 2}, w) == std::vector<double>{1.75, 1.75});
  const std::vector<double> mono = {0.9, 0.5, 0.5, 0.1};
  CHECK(isotonic_nonincreasing(mono) == mono);
}

TEST_CASE("reference curve construction and lookup") {
  const RefCurve c({{0.0, 0.5, false}, {1.0, 0.6, false}, {2.0, 0.01, false}});
  REQUIRE(c.points().size() == 3);
  CHECK(c.points()[0].per == doctest::Approx(0.55));
  CHECK(c.points()[1].per == doctest::Approx(0.55));
  CHECK(predict_per(db_to_linear(-5.0), c) == doctest::Approx(0.55));
  CHECK(predict_per(db_to_linear(9.0), c) == doctest::Approx(0.01));
  // log-linear between grid points
  CHECK(predict_per(db_to_linear(1.5), c) == doctest::Approx(std::sqrt(0.55 * 0.01)).epsilon(1e-12));
  CHECK_THROWS_AS(RefCurve({{0.0, 0.5, false}, {0.0, 0.4, false}}), ValidationError);
  CHECK_THROWS_AS(RefCurve({{0.0, 0.0, false}}), ValidationError);
  CHECK_THROWS_AS(RefCurve({{0.0, 1.5, false}}), ValidationError);
}

TEST_CASE("calibration recovers the generating beta") {
  const RefCurve curve = synthetic_curve();
  Rng rng(31);
  std::vector<CalibrationSample> cal;
  for (int i = 0; i < 60; ++i) {
    auto g = random_profile(rng, 12, -6.0, 10.0);
    const double per = predict_per(compress(g, CompressionMethod::kEesm, 1.7), curve);
    cal.push_back({g, per});
  }
  const CalibrationResult r = calibrate_beta(cal, curve);
  CHECK(r.beta_star == doctest::Approx(1.7).epsilon(1e-6));
  CHECK(r.residual_rms < 1e-6);
  CHECK(r.samples_used + r.samples_windowed_out == 60);
}

TEST_CASE("calibration on flat profiles keeps the smallest beta") {
  const RefCurve curve = synthetic_curve();
  std::vector<CalibrationSample> cal;
  for (double db : {1.0, 2.0, 3.0}) {
    cal.push_back({std::vector<double>(5, db_to_linear(db)), predict_per(db_to_linear(db), curve) * 1.1});
  }
  BetaSearch search;
  const CalibrationResult r = calibrate_beta(cal, curve, search);
  CHECK(r.beta_star == doctest::Approx(search.beta_lo));
  CHECK(r.residual_rms == doctest::Approx(std::log10(1.1)).epsilon(1e-9));
}

TEST_CASE("calibration windowing and errors") {
  const RefCurve curve = synthetic_curve();
  std::vector<CalibrationSample> cal = {{{1.0, 2.0}, 0.0}, {{1.0, 2.0}, 0.95}, {{1.0, 2.0}, 0.2}};
  const CalibrationResult r = calibrate_beta(cal, curve);
  CHECK(r.samples_used == 1);
  CHECK(r.samples_windowed_out == 2);
  CHECK(r.zero_per_samples == 1);
  cal.pop_back();
  CHECK_THROWS_AS(calibrate_beta(cal, curve), ValidationError);
  BetaSearch bad;
  bad.beta_hi = bad.beta_lo;
  CHECK_THROWS_AS(calibrate_beta(cal, curve, bad), ValidationError);
  CHECK_THROWS_AS(calibrate_beta(cal, RefCurve{}), ValidationError);
}

TEST_CASE("beta table") {
  const BetaTable t = BetaTable::builtin();
  CHECK(beta_lookup(t, 0, CodeFamily::kLdpcRef) == 0.78);
  CHECK(beta_lookup(t, 1, CodeFamily::kLdpcRef) == 1.55);
  CHECK(beta_lookup(t, 2, CodeFamily::kLdpcRef) == 4.16);
  CHECK(beta_lookup(t, 1, CodeFamily::kPolarRef) == 0.624);
  CHECK(beta_lookup(t, 1, CodeFamily::kConvK7) == 1.87);
  CHECK_THROWS_AS(beta_lookup(t, 7, CodeFamily::kLdpcRef), ValidationError);
  CHECK_THROWS_AS(beta_lookup(t, 0, CodeFamily::kPolarRef), ValidationError);

  BetaTable m = t;
  std::istringstream in("mcs_index,modulation,code_rate,code_family,beta\n1,QPSK,1/2,LDPC-ref,1.6\n"
                        "3,16QAM,1/2,ConvK7,5.5\n");
  m.merge_csv(in);
  CHECK(beta_lookup(m, 1, CodeFamily::kLdpcRef) == 1.6);
  CHECK(beta_lookup(m, 3, CodeFamily::kConvK7) == 5.5);
  std::stringstream out;
  m.write_csv(out);
  BetaTable back;
  back.merge_csv(out);
  CHECK(back.entries().size() == m.entries().size());
  CHECK(beta_lookup(back, 3, CodeFamily::kConvK7) == 5.5);
  std::istringstream bad("mcs_index,modulation,code_rate,code_family,beta\n1,QPSK,1/2,LDPC-ref,-1\n");
  CHECK_THROWS_AS(m.merge_csv(bad), ValidationError);
}

TEST_CASE("beta lookup merges the data directory") {
  const auto dir = std::filesystem::temp_directory_path() / "weavesim_beta_lookup_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "beta_table.csv");
    f << "mcs_index,modulation,code_rate,code_family,beta\n0,BPSK,1/2,ConvK7,0.9\n";
  }
  const char* old = std::getenv("WEAVESIM_DATA");
  const std::string saved = old ? old : "";
  ::setenv("WEAVESIM_DATA", dir.c_str(), 1);
  CHECK(beta_lookup(0, CodeFamily::kConvK7) == 0.9);
  CHECK(beta_lookup(1, CodeFamily::kLdpcRef) == 1.55);
  if (old) {
    ::setenv("WEAVESIM_DATA", saved.c_str(), 1);
  } else {
    ::unsetenv("WEAVESIM_DATA");
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("curve and calibration-set CSV round-trip") {
  std::vector<CurvePoint> pts = {{0.0, 0.5, false}, {1.0, 0.1, false}, {2.0, 0.0005, true}};
  const RefCurve c(pts, mcs_from_name("qpsk_r12_conv"));
  std::stringstream ss;
  write_curve_csv(ss, c);
  const RefCurve r = read_curve_csv(ss);
  REQUIRE(r.points().size() == 3);
  CHECK(r.points()[2].zero_errors);
  CHECK_FALSE(r.points()[1].zero_errors);
  CHECK(r.points()[1].per == 0.1);
  REQUIRE(r.mcs().has_value());
  CHECK(mcs_name(*r.mcs()) == "qpsk_r12_conv");

  const std::vector<CalibrationSample> cal = {{{1.0, 2.0, 3.0}, 0.25}, {{0.5}, 0.01}};
  std::stringstream cs;
  write_calset_csv(cs, cal);
  const auto back = read_calset_csv(cs);
  REQUIRE(back.size() == 2);
  CHECK(back[0].gammas.size() == 3);
  CHECK(back[0].gammas[2] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(back[1].per_sim == 0.01);
  std::istringstream bad("snr_db,per\n0,2\n");
  CHECK_THROWS_AS(read_curve_csv(bad), ValidationError);
}
