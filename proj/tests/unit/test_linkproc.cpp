#include <doctest.h>

#include <cmath>

#include "weavesim/linkproc.hpp"

using namespace weavesim;

namespace {

CMatrix random_channel(int m, int k, Rng& rng) {
  NormalDist n01;
  CMatrix g(m, k);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < k; ++j) g(i, j) = cdouble(n01(rng), n01(rng)) * std::sqrt(0.5);
  }
  return g;
}

}  // namespace

TEST_CASE("DFT pilots are orthonormal") {
  for (auto [tau, k] : {std::pair{4, 4}, std::pair{8, 3}, std::pair{20, 20}}) {
    const PilotBook pb = make_pilots(tau, k);
    REQUIRE(pb.tau_p() == tau);
    REQUIRE(pb.num_users() == k);
    const CMatrix gram = pb.phi.adjoint() * pb.phi;
    CHECK((gram - CMatrix::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK_THROWS_AS(make_pilots(3, 4), ValidationError);
}

TEST_CASE("noiseless LS estimation recovers the channel") {
  Rng rng(1);
  const CMatrix g = random_channel(16, 5, rng) * 1e-4;
  const PilotBook pb = make_pilots(7, 5);
  const CMatrix y = receive_pilots(g, pb, 2e-7, 0.0, rng);
  const CMatrix g_hat = ls_estimate(y, pb, 2e-7, 7).entries;
  CHECK((g_hat - g).cwiseAbs().maxCoeff() <= 1e-12 * g.cwiseAbs().maxCoeff());
}

TEST_CASE("LS error variance is N0 / (rho tau_p)") {
  Rng rng(2);
  const int m = 4, k = 3, tau = 5, trials = 10000;
  const double rho = 2e-7, n0 = 1e-15;
  const CMatrix g = random_channel(m, k, rng) * 1e-5;
  const PilotBook pb = make_pilots(tau, k);
  double sum = 0.0, sum_sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    const CMatrix err = ls_estimate(receive_pilots(g, pb, rho, n0, rng), pb, rho, tau).entries - g;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < k; ++j) {
        const double e = std::norm(err(i, j));
        sum += e;
        sum_sq += e * e;
      }
    }
  }
  const double n = static_cast<double>(trials) * m * k;
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  CHECK(std::abs(mean - n0 / (rho * tau)) < 3 * se);
}

TEST_CASE("zero-forcing left inverse") {
  Rng rng(3);
  for (auto [m, k] : {std::pair{8, 2}, std::pair{8, 8}, std::pair{64, 8}}) {
    const CMatrix g = random_channel(m, k, rng);
    const CMatrix a = zf_left_inverse(g);
    CHECK((a * g - CMatrix::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-12);
  }
  CMatrix rank_deficient = random_channel(8, 3, rng);
  rank_deficient.col(2) = rank_deficient.col(0) * cdouble(2.0, -1.0);
  CHECK_THROWS_AS(zf_left_inverse(rank_deficient), SimulationError);
  CHECK_THROWS_AS(zf_left_inverse(random_channel(2, 3, rng)), SimulationError);
}

TEST_CASE("precoders and combiners have unit-norm columns and rows") {
  Rng rng(4);
  const EstimatedChannel g{random_channel(12, 4, rng)};
  for (PrecoderKind kind : {PrecoderKind::kMrt, PrecoderKind::kZf}) {
    const Precoder p = make_precoder(g, kind);
    const Combiner c = make_combiner(g, kind);
    CHECK(p.kind == kind);
    for (int j = 0; j < 4; ++j) {
      CHECK(p.matrix.col(j).norm() == doctest::Approx(1.0));
      CHECK(c.matrix.row(j).norm() == doctest::Approx(1.0));
    }
  }
  // MRT is the normalized channel column.
  const Precoder mrt = make_precoder(g, PrecoderKind::kMrt);
  CHECK((mrt.matrix.col(1) - g.entries.col(1) / g.entries.col(1).norm()).norm() < 1e-14);
  // ZF nulls the other users.
  const Precoder zf = make_precoder(g, PrecoderKind::kZf);
  const CMatrix cross = g.entries.adjoint() * zf.matrix;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i != j) CHECK(std::norm(cross(i, j)) < 1e-24 * std::norm(cross(i, i)));
    }
  }
}
