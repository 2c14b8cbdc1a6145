#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "lofar/tqwt.hpp"

using namespace lofar;
using Catch::Approx;

namespace {

RealVector random_signal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  RealVector x(n);
  for (double& v : x) v = nd(rng);
  return x;
}

double relative_error(const RealVector& a, const RealVector& b) {
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) num += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(num) / l2_norm(b);
}

}  // namespace

TEST_CASE("params_from_q inverts the Q and redundancy formulas", "[tqwt]") {
  const auto low = tqwt::params_from_q(1.0, 3.0, 3, 2048);
  CHECK(low.beta == 1.0);
  CHECK(low.alpha == Approx(2.0 / 3.0).epsilon(1e-15));
  const auto high = tqwt::params_from_q(4.0, 3.0, 32, 2048);
  CHECK(high.beta == Approx(0.4).epsilon(1e-15));
  CHECK(high.alpha == Approx(0.866666666666667).epsilon(1e-12));
  CHECK(high.q_factor() == Approx(4.0));
  CHECK(high.redundancy() == Approx(3.0));
  CHECK(high.level_limit() == 32);
}

TEST_CASE("params_from_q rejects invalid settings", "[tqwt]") {
  CHECK_THROWS_WITH(tqwt::params_from_q(4.0, 3.0, 33, 2048), Catch::Matchers::ContainsSubstring("J_max = 32"));
  CHECK_THROWS(tqwt::params_from_q(0.5, 3.0, 1, 2048));
  CHECK_THROWS(tqwt::params_from_q(2.0, 1.0, 1, 2048));
  CHECK_THROWS(tqwt::params_from_q(2.0, 3.0, 0, 2048));
  CHECK_THROWS(tqwt::params_from_q(2.0, 3.0, 1, 2047));
}

TEST_CASE("centre frequency and bandwidth accessors", "[tqwt]") {
  const double fs = 52734.0;
  const auto p = tqwt::params_from_q(4.0, 3.0, 32, 2048);
  CHECK(tqwt::center_frequency(p, 1, fs) == Approx((2.0 - 0.4) / 4.0 * fs));
  CHECK(tqwt::center_frequency(p, 1, fs) == Approx(21093.6).epsilon(1e-6));
  for (int j = 1; j <= p.levels; ++j) {
    const double fc = tqwt::center_frequency(p, j, fs);
    const double bw_hz = tqwt::bandwidth(p, j) * fs / (2.0 * kPi);
    CHECK(std::abs(fc / bw_hz - p.q_factor()) <= 1e-9 * p.q_factor());
    if (j > 1) CHECK(fc < tqwt::center_frequency(p, j - 1, fs));
  }
  CHECK_THROWS(tqwt::center_frequency(p, 0, fs));
  CHECK_THROWS(tqwt::bandwidth(p, 33));
}

TEST_CASE("transition function and power complementarity", "[tqwt]") {
  CHECK(tqwt::transition(0.0) == 1.0);
  CHECK(tqwt::transition(kPi) == Approx(0.0).margin(1e-15));
  for (double q : {1.0, 2.0, 4.0}) {
    const auto p = tqwt::params_from_q(q, 3.0, 1, 256);
    const double lo = (1.0 - p.beta) * kPi, hi = p.alpha * kPi;
    for (int i = 0; i < 1000; ++i) {
      const double w = lo + (hi - lo) * (i + 0.5) / 1000.0;
      const double h0 = tqwt::low_response(p, w), h1 = tqwt::high_response(p, w);
      REQUIRE(std::abs(h0 * h0 + h1 * h1 - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("subband lengths follow the scaling rule", "[tqwt]") {
  const auto p = tqwt::params_from_q(1.0, 3.0, 3, 256);
  const tqwt::Tqwt t(p);
  REQUIRE(t.subband_count() == 4);
  for (int j = 1; j <= 3; ++j) {
    const auto hl = 2 * static_cast<std::size_t>(std::round(p.beta * std::pow(p.alpha, j - 1) * 128.0));
    CHECK(t.subband_length(static_cast<std::size_t>(j - 1)) == hl);
  }
  CHECK(t.subband_length(3) == 2 * static_cast<std::size_t>(std::round(std::pow(p.alpha, 3) * 128.0)));
}

TEST_CASE("zero input gives zero subbands and back", "[tqwt]") {
  const auto p = tqwt::params_from_q(2.0, 3.0, 3, 128);
  const auto sub = tqwt::analyze(RealVector(128, 0.0), p);
  CHECK(sub.energy() == 0.0);
  for (double v : tqwt::synthesize(sub)) CHECK(v == 0.0);
}

TEST_CASE("perfect reconstruction and Parseval on a parameter grid", "[tqwt]") {
  std::uint64_t seed = 11;
  for (std::size_t n : {64u, 256u, 2048u}) {
    for (double q : {1.0, 2.0, 4.0}) {
      const int jmax = tqwt::params_from_q(q, 3.0, 1, n).level_limit();
      for (int j : {1, 3, std::min(8, jmax)}) {
        const auto p = tqwt::params_from_q(q, 3.0, j, n);
        const auto x = random_signal(n, seed++);
        const auto sub = tqwt::analyze(x, p);
        CHECK(relative_error(tqwt::synthesize(sub), x) < 1e-8);
        CHECK(std::abs(sub.energy() - sum_squares(x)) <= 1e-8 * sum_squares(x));
      }
    }
  }
}

TEST_CASE("an impulse keeps its energy", "[tqwt]") {
  const auto p = tqwt::params_from_q(4.0, 3.0, 10, 512);
  RealVector x(512, 0.0);
  x[100] = 1.0;
  CHECK(tqwt::analyze(x, p).energy() == Approx(1.0).epsilon(1e-8));
}

TEST_CASE("analysis is linear", "[tqwt]") {
  const auto p = tqwt::params_from_q(2.0, 3.0, 5, 256);
  const auto x = random_signal(256, 1), y = random_signal(256, 2);
  RealVector z(256);
  for (std::size_t i = 0; i < 256; ++i) z[i] = 1.5 * x[i] - 0.25 * y[i];
  const auto ax = tqwt::analyze(x, p), ay = tqwt::analyze(y, p), az = tqwt::analyze(z, p);
  for (std::size_t j = 0; j < az.subbands.size(); ++j) {
    for (std::size_t i = 0; i < az.subbands[j].size(); ++i) {
      REQUIRE(std::abs(az.subbands[j][i] - (1.5 * ax.subbands[j][i] - 0.25 * ay.subbands[j][i])) <= 1e-10);
    }
  }
}

TEST_CASE("a high-frequency sine lands in the first level", "[tqwt]") {
  const std::size_t n = 512;
  const auto p = tqwt::params_from_q(1.0, 3.0, 3, n);
  // Place the tone at the level-1 centre frequency (fs = 1).
  const double fc = tqwt::center_frequency(p, 1, 1.0);
  const auto k = static_cast<std::size_t>(std::round(fc * n));
  RealVector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * kPi * static_cast<double>(k * i) / n);
  const auto sub = tqwt::analyze(x, p);
  const double e1 = sum_squares(sub.subbands[0]);
  for (std::size_t j = 1; j < sub.subbands.size(); ++j) CHECK(e1 > sum_squares(sub.subbands[j]));
  CHECK(e1 > 0.5 * sub.energy());
}

// The frame is redundant, so neighbouring levels share transition bands and a
// round trip cannot keep nearly all energy in one level. The originating level
// must still hold the largest share, and the highpass level most of it.
TEST_CASE("a single subband re-analyses mostly into the same level", "[tqwt]") {
  const auto p = tqwt::params_from_q(4.0, 3.0, 12, 1024);
  const tqwt::Tqwt t(p);
  for (std::size_t level : {0u, 5u, 11u}) {
    std::vector<RealVector> bands(t.subband_count());
    for (std::size_t j = 0; j < bands.size(); ++j) bands[j].assign(t.subband_length(j), 0.0);
    bands[level] = random_signal(bands[level].size(), 40 + level);
    const auto back = t.analyze(t.synthesize(bands));
    const double own = sum_squares(back.subbands[level]);
    for (std::size_t j = 0; j < back.subbands.size(); ++j) {
      if (j != level) CHECK(sum_squares(back.subbands[j]) < own);
    }
    if (level == 0) CHECK(own >= 0.85 * back.energy());
  }
}

TEST_CASE("basis norms match synthesized unit atoms", "[tqwt]") {
  const auto p = tqwt::params_from_q(1.0, 3.0, 3, 256);
  const tqwt::Tqwt t(p);
  REQUIRE(t.basis_norms().size() == 4);
  for (std::size_t j = 0; j < t.subband_count(); ++j) {
    std::vector<RealVector> bands(t.subband_count());
    for (std::size_t i = 0; i < bands.size(); ++i) bands[i].assign(t.subband_length(i), 0.0);
    bands[j][bands[j].size() / 2] = 1.0;
    CHECK(l2_norm(t.synthesize(bands)) == Approx(t.basis_norms()[j]).epsilon(1e-12));
    CHECK(t.basis_norms()[j] <= 1.0 + 1e-12);
  }
}

TEST_CASE("length mismatches are rejected", "[tqwt]") {
  const auto p = tqwt::params_from_q(1.0, 3.0, 3, 256);
  CHECK_THROWS(tqwt::analyze(RealVector(255, 0.0), p));
  auto sub = tqwt::analyze(RealVector(256, 0.0), p);
  sub.subbands[1].pop_back();
  CHECK_THROWS(tqwt::synthesize(sub));
  sub.subbands.pop_back();
  CHECK_THROWS(tqwt::synthesize(sub));
}

TEST_CASE("the transform cache returns shared instances", "[tqwt]") {
  const auto p = tqwt::params_from_q(2.0, 3.0, 4, 256);
  CHECK(tqwt::cached(p).get() == tqwt::cached(p).get());
}
