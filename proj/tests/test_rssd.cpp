#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "lofar/rssd.hpp"
#include "lofar/synth.hpp"

using namespace lofar;
using Catch::Approx;

namespace {

constexpr double kFs = 52734.0;

RealVector noise_block(std::size_t n, std::uint64_t seed) {
  synth::Rng rng(seed);
  return synth::white_noise(n, 1.0, rng);
}

}  // namespace

TEST_CASE("lambda weights scale with k and follow the basis norms", "[rssd]") {
  auto cfg = rssd::McaConfig::defaults();
  const auto base = rssd::lambda_weights(cfg);
  REQUIRE(base.high.size() == 33);
  REQUIRE(base.low.size() == 4);
  const auto& norms = tqwt::cached(cfg.high_params)->basis_norms();
  for (std::size_t j = 1; j < norms.size(); ++j) {
    CHECK(base.high[j] / base.high[0] == Approx(norms[j] / norms[0]).epsilon(1e-12));
  }
  cfg.k_high = 1.0;
  const auto doubled = rssd::lambda_weights(cfg);
  for (std::size_t j = 0; j < base.high.size(); ++j) CHECK(doubled.high[j] == 2.0 * base.high[j]);
  cfg.k_high = 0.0;
  for (double l : rssd::lambda_weights(cfg).high) CHECK(l == 0.0);
  cfg.k_high = 1.5;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("soft threshold", "[rssd]") {
  CHECK(rssd::detail::soft(3.0, 1.0) == 2.0);
  CHECK(rssd::detail::soft(-3.0, 1.0) == -2.0);
  CHECK(rssd::detail::soft(0.5, 1.0) == 0.0);
}

TEST_CASE("zero input decomposes to zeros", "[rssd]") {
  rssd::McaConfig cfg;
  cfg.high_params = tqwt::params_from_q(4.0, 3.0, 10, 256);
  cfg.low_params = tqwt::params_from_q(1.0, 3.0, 3, 256);
  const auto d = rssd::decompose(RealVector(256, 0.0), cfg);
  for (std::size_t i = 0; i < 256; ++i) {
    CHECK(d.x_high[i] == 0.0);
    CHECK(d.x_low[i] == 0.0);
    CHECK(d.residual[i] == 0.0);
  }
  CHECK(d.objective_trace.back() == 0.0);
}

TEST_CASE("decomposition is additive and the trace descends", "[rssd]") {
  const auto cfg = rssd::McaConfig::defaults();
  const auto x = noise_block(2048, 5);
  const auto d = rssd::decompose(x, cfg);
  REQUIRE(d.objective_trace.size() == 100);
  for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(d.x_high[i] + d.x_low[i] + d.residual[i] == Approx(x[i]).margin(1e-12));
  for (std::size_t i = 5; i + 1 < d.objective_trace.size(); ++i) {
    REQUIRE(d.objective_trace[i + 1] <= d.objective_trace[i] * (1.0 + 1e-6));
  }
  const double j = rssd::objective(x, d.high_coeffs, d.low_coeffs, rssd::lambda_weights(cfg));
  CHECK(std::abs(j - d.objective_trace.back()) <= 1e-9 * j);
}

TEST_CASE("block length mismatch is rejected", "[rssd]") {
  CHECK_THROWS(rssd::decompose(RealVector(1000, 0.0), rssd::McaConfig::defaults()));
}

TEST_CASE("sine goes high, click goes low", "[rssd]") {
  const std::size_t n = 2048;
  RealVector sine(n), click(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) sine[i] = std::sin(2.0 * kPi * 40.0 * static_cast<double>(i) / n);
  synth::add_click(click, 1000, 8, 4.0);
  RealVector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = sine[i] + click[i];
  const auto d = rssd::decompose(x, rssd::McaConfig::defaults());
  CHECK(dot(d.x_high, sine) / sum_squares(sine) >= 0.7);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 968; i < 1040; ++i) {
    num += d.x_low[i] * click[i];
    den += click[i] * click[i];
  }
  CHECK(num / den >= 0.7);
}

TEST_CASE("shrinking k drives the residual to zero", "[rssd]") {
  const auto x = noise_block(2048, 9);
  double previous = std::numeric_limits<double>::infinity();
  for (double k : {0.5, 0.05, 0.005}) {
    auto cfg = rssd::McaConfig::defaults();
    cfg.k_high = cfg.k_low = k;
    const double r = l2_norm(rssd::decompose(x, cfg).residual);
    CHECK(r < previous);
    previous = r;
  }
  CHECK(previous < 0.05 * l2_norm(x));
}

TEST_CASE("long signals decompose block-wise independent of threads", "[rssd]") {
  rssd::McaConfig cfg;
  cfg.high_params = tqwt::params_from_q(4.0, 3.0, 10, 256);
  cfg.low_params = tqwt::params_from_q(1.0, 3.0, 3, 256);
  cfg.iterations = 20;
  const auto x = noise_block(256 * 3 + 100, 4);
  const auto a = rssd::decompose_signal(x, cfg, 1);
  const auto b = rssd::decompose_signal(x, cfg, 4);
  CHECK(a.x_high == b.x_high);
  CHECK(a.x_low == b.x_low);
  REQUIRE(a.x_high.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(a.x_high[i] + a.x_low[i] + a.residual[i] == Approx(x[i]).margin(1e-12));
  // The first block equals a direct single-block decomposition.
  const auto direct = rssd::decompose(std::span<const double>(x).first(256), cfg);
  for (std::size_t i = 0; i < 256; ++i) CHECK(a.x_high[i] == direct.x_high[i]);
}

TEST_CASE("ship-like synthetic: tonal part below 1 kHz, transient part above", "[rssd]") {
  synth::Rng rng(21);
  const auto x = synth::ship_like(kFs, 2048 * 8, 60.0, rng);
  const auto d = rssd::decompose_signal(x, rssd::McaConfig::defaults());
  const auto high = rssd::band_energy_percentages(SampleBuffer(d.x_high, kFs), RealVector{0.0, 1000.0, kFs / 2});
  const auto low = rssd::band_energy_percentages(SampleBuffer(d.x_low, kFs), RealVector{0.0, 1000.0, kFs / 2});
  CHECK(high[0] > 50.0);
  CHECK(low[1] > 50.0);
}

TEST_CASE("band energy percentages", "[rssd]") {
  const std::size_t n = 52734;
  const auto tone = synth::tone(kFs, n, 500.0);
  const auto p = rssd::band_energy_percentages(SampleBuffer(tone, kFs), RealVector{0.0, 1000.0, kFs / 2});
  CHECK(p[0] == Approx(100.0).margin(1e-6));
  CHECK(p[1] == Approx(0.0).margin(1e-6));

  const auto noise = noise_block(1 << 16, 17);
  const auto edges = rssd::default_band_edges(kFs);
  REQUIRE(edges.size() == 12);
  CHECK(edges[10] == 10000.0);
  const RealVector equal{0.0, 6000.0, 12000.0, 18000.0, 24000.0};
  const auto flat = rssd::band_energy_percentages(SampleBuffer(noise, kFs), equal);
  double total = 0.0;
  for (double v : flat) {
    CHECK(v == Approx(25.0).margin(2.0));
    total += v;
  }
  CHECK(total == Approx(100.0).epsilon(1e-9));
  const auto full = rssd::band_energy_percentages(SampleBuffer(noise, kFs), edges);
  total = 0.0;
  for (double v : full) total += v;
  CHECK(std::abs(total - 100.0) <= 1e-9);

  CHECK_THROWS_WITH(rssd::band_energy_percentages(SampleBuffer(RealVector(64, 0.0), kFs), equal),
                    Catch::Matchers::ContainsSubstring("no energy to apportion"));
  CHECK_THROWS(rssd::band_energy_percentages(SampleBuffer(noise, kFs), RealVector{0.0, 30000.0}));
}

TEST_CASE("spectral correlation coefficient", "[rssd]") {
  const auto a = SampleBuffer(noise_block(8192, 1), kFs);
  const auto b = SampleBuffer(synth::tone(kFs, 8192, 3000.0), kFs);
  CHECK(rssd::scc(a, a, 0.0, kFs / 2).value == Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(rssd::scc(a, b, 0.0, 8000.0).value - rssd::scc(b, a, 0.0, 8000.0).value) <= 1e-12);
  const auto lo = SampleBuffer(synth::tone(kFs, 8192, 1000.0), kFs);
  const auto hi = SampleBuffer(synth::tone(kFs, 8192, 5000.0), kFs);
  CHECK(rssd::scc(lo, hi, 0.0, kFs / 2).value < 0.05);
  CHECK(rssd::scc(a, b, 0.0, kFs / 2).value <= 1.0);
  CHECK_THROWS(rssd::scc(lo, hi, 100.0, 200.0 + kFs));
  CHECK_THROWS(rssd::scc(a, SampleBuffer(noise_block(8192, 1), 8000.0), 0.0, 1000.0));
}
