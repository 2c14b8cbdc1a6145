#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "lofar/linespec.hpp"
#include "oracles.hpp"

using namespace lofar;
using namespace lofar::linespec;
using Catch::Approx;

namespace {

CostWeights weights(std::size_t L, double eps = 0.0) {
  CostWeights w;
  w.window_bins = L;
  w.epsilon = eps;
  return w;
}

Spectrogram random_map(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 3.0);
  RealVector d(rows * cols);
  for (double& v : d) v = u(rng);
  return Spectrogram::from_rows(rows, cols, std::move(d));
}

}  // namespace

TEST_CASE("epsilon from noise", "[linespec]") {
  CHECK(epsilon_from_noise(Spectrogram::from_rows(2, 2, {1, 1, 1, 1})) == 1.0);
  CHECK(epsilon_from_noise(Spectrogram::from_rows(2, 2, {0, 0, 2, 2})) == Approx(std::sqrt(2.0)));
  CHECK(epsilon_from_noise(Spectrogram::from_rows(1, 3, {0, 0, 0})) == 0.0);
  CHECK_THROWS(epsilon_from_noise(Spectrogram{}));
}

TEST_CASE("path_cost examples", "[linespec]") {
  auto w = weights(5, 1.0);
  const RealVector five(6, 5.0), flat(6, 7.0);
  const auto straight = path_cost(five, flat, w);
  CHECK(straight.A == 30.0);
  CHECK(straight.F == 0.0);
  CHECK(straight.T == 0);
  CHECK(straight.cost == 0.0);

  w.epsilon = 0.0;
  const auto zig = path_cost(RealVector{1, 1, 1}, RealVector{10, 12, 10}, w);
  CHECK(zig.F == 4.0);
  CHECK(zig.cost == Approx(4.0 / 3.0));

  w.epsilon = 1.0;
  CHECK(path_cost(RealVector{0.5, 2, 0.5}, RealVector{1, 1, 1}, w).T == 2);
  CHECK(path_cost(RealVector{1.0}, RealVector{3.0}, w).T == 0);  // strict inequality
  CHECK(path_cost(RealVector{0.0, 0.0}, RealVector{1, 2}, w).cost == Approx(2.0 / kAmplitudeGuard));
  CHECK_THROWS(path_cost(RealVector{}, RealVector{}, w));
}

TEST_CASE("default window width", "[linespec]") {
  CHECK(default_window_bins(0.0, 25.7) == 5);
  CHECK(default_window_bins(100.0, 25.75) == 6);
  CHECK(default_window_bins(200.0, 10.0) == 22);
}

TEST_CASE("weights are validated", "[linespec]") {
  auto w = weights(1);
  CHECK_THROWS(w.validate(10));
  w = weights(11);
  CHECK_THROWS(w.validate(10));
  w = weights(3);
  w.lambda_f = -1.0;
  CHECK_THROWS(w.validate(10));
  CHECK_THROWS(track_window(Spectrogram::from_rows(4, 3, RealVector(12, 1.0)), 2, weights(3)));
}

TEST_CASE("track_window matches exhaustive enumeration", "[linespec]") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t M = 3 + rng() % 8, N = 1 + rng() % 6, L = 2 + rng() % 2;
    if (L > M) continue;
    const auto spec = random_map(M, N, rng);
    auto w = weights(L, 1.0);
    w.lambda_f = 0.5 + (rng() % 3);
    w.mu_t = 0.5 + (rng() % 3);
    for (std::size_t k = 0; k + L <= M; ++k) {
      const auto fast = track_window(spec, k, w);
      const auto slow = oracle::brute_force_window(spec, k, w);
      REQUIRE(fast.state.cost == slow.state.cost);
      REQUIRE(evaluate_path(spec, fast.bins, w).cost == fast.state.cost);
    }
  }
}

TEST_CASE("a constant line is found exactly", "[linespec]") {
  RealVector d(8 * 5, 0.0);
  for (std::size_t t = 0; t < 5; ++t) d[4 * 5 + t] = 10.0;
  const auto spec = Spectrogram::from_rows(8, 5, d);
  const auto w = weights(3, 1.0);
  const auto p = track_window(spec, 3, w);
  for (auto b : p.bins) CHECK(b == 4);
  CHECK(p.state.cost == 0.0);
  CHECK(oracle::brute_force_window(spec, 3, w).bins == p.bins);
}

TEST_CASE("a flickering line keeps the path", "[linespec]") {
  RealVector d(8 * 5, 0.5);
  for (std::size_t t = 0; t < 5; ++t) d[4 * 5 + t] = t == 2 ? 0.2 : 10.0;
  const auto spec = Spectrogram::from_rows(8, 5, d);
  const auto w = weights(3, 1.0);
  const auto p = track_window(spec, 3, w);
  for (auto b : p.bins) CHECK(b == 4);
  CHECK(p.state.T == 1);
  CHECK(p.state.cost == oracle::brute_force_window(spec, 3, w).state.cost);
}

TEST_CASE("uniform map ties resolve to the lowest straight path", "[linespec]") {
  const auto spec = Spectrogram::from_rows(6, 4, RealVector(24, 2.0));
  const auto p = track_window(spec, 1, weights(3, 1.0));
  for (auto b : p.bins) CHECK(b == 1);
  CHECK(p.state.cost == 0.0);
}

TEST_CASE("raising the optimal path's amplitudes keeps it optimal", "[linespec]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto spec = random_map(7, 5, rng);
    const auto w = weights(3, 1.0);
    const auto before = track_window(spec, 2, w);
    for (std::size_t t = 0; t < before.bins.size(); ++t) spec.at(before.bins[t], t) += 1.0;
    const auto after = track_window(spec, 2, w);
    CHECK(after.state.cost <= before.state.cost);
    CHECK(after.state.cost == evaluate_path(spec, before.bins, w).cost);
  }
}

TEST_CASE("gamma is the minimum window optimum", "[linespec]") {
  std::mt19937_64 rng(8);
  const auto noise = random_map(8, 5, rng);
  const auto w = weights(3, epsilon_from_noise(noise));
  double expect = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r + 3 <= 8; ++r) expect = std::min(expect, oracle::brute_force_window(noise, r, w).state.cost);
  CHECK(gamma_from_noise(noise, w) == expect);
  CHECK(gamma_from_noise(noise, w, 4) == expect);

  // Scaling the noise up never raises gamma.
  auto louder = noise;
  for (double& v : louder.data()) v *= 2.0;
  CHECK(gamma_from_noise(louder, w) <= expect);

  const auto zero = Spectrogram::from_rows(6, 4, RealVector(24, 0.0));
  CHECK(gamma_from_noise(zero, weights(3, 0.0)) == 0.0);
  CHECK(gamma_from_noise(zero, weights(3, 1.0)) == Approx(4.0 / kAmplitudeGuard));
}

TEST_CASE("a clean line saturates its covering windows", "[linespec]") {
  const std::size_t M = 20, N = 8, L = 4, row = 9;
  std::mt19937_64 rng(31);
  auto noise = random_map(M, N, rng);
  for (double& v : noise.data()) v *= 0.01;
  auto spec = noise;
  for (std::size_t t = 0; t < N; ++t) spec.at(row, t) = 5.0;
  const auto counts = extract_linespectrum(spec, noise, weights(L));
  REQUIRE(counts.gamma > 0.0);
  for (std::size_t r = 0; r < M; ++r) {
    for (std::size_t t = 0; t < N; ++t) {
      CHECK(counts.at(r, t) <= covering_windows(r, M, L));
      if (r == row) CHECK(counts.at(r, t) == covering_windows(r, M, L));
      else CHECK(counts.at(r, t) == 0);
    }
  }
}

TEST_CASE("two separated lines give two ridges", "[linespec]") {
  const std::size_t M = 30, N = 6, L = 3;
  std::mt19937_64 rng(32);
  auto noise = random_map(M, N, rng);
  for (double& v : noise.data()) v *= 0.01;
  auto spec = noise;
  for (std::size_t t = 0; t < N; ++t) {
    spec.at(6, t) = 4.0;
    spec.at(20, t) = 4.0;
  }
  const auto counts = extract_linespectrum(spec, noise, weights(L));
  REQUIRE(counts.gamma > 0.0);
  for (std::size_t r = 0; r < M; ++r) {
    const bool ridge = r == 6 || r == 20;
    for (std::size_t t = 0; t < N; ++t) CHECK((counts.at(r, t) > 0) == ridge);
  }
}

TEST_CASE("broken line is completed; calibration noise stays quiet", "[linespec]") {
  const auto s = oracle::broken_line(64, 64, 4.0, 3);
  const auto w = weights(5);
  Thresholds th;
  th.epsilon = epsilon_from_noise(s.calibration_noise);
  auto we = w;
  we.epsilon = th.epsilon;
  th.gamma = gamma_from_noise(s.calibration_noise, we);

  const auto counts = extract_linespectrum(s.observed, th, w);
  std::size_t supported = 0;
  for (std::size_t t = 0; t < 64; ++t) supported += counts.at(s.line_row, t) > 0;
  CHECK(supported >= 61);  // 95% of 64

  const auto quiet = extract_linespectrum(s.calibration_noise, th, w);
  CHECK(quiet.detections * 20 <= quiet.windows);
}

TEST_CASE("detection direction switch inverts the test", "[linespec]") {
  const auto s = oracle::broken_line(32, 16, 4.0, 7);
  const auto w = weights(5);
  Thresholds th{epsilon_from_noise(s.calibration_noise), 0.0};
  auto we = w;
  we.epsilon = th.epsilon;
  th.gamma = gamma_from_noise(s.calibration_noise, we);
  ExtractOptions below, above;
  above.direction = DetectDirection::AboveGamma;
  const auto a = extract_linespectrum(s.observed, th, w, below);
  const auto b = extract_linespectrum(s.observed, th, w, above);
  CHECK(a.detections + b.detections <= a.windows);
  CHECK(a.detections > 0);
  CHECK(b.detections > 0);
}

TEST_CASE("extraction is thread-count independent", "[linespec]") {
  const auto s = oracle::broken_line(48, 24, 3.0, 11);
  const auto w = weights(5);
  ExtractOptions one, many;
  many.threads = 6;
  CHECK(extract_linespectrum(s.observed, s.calibration_noise, w, one).counts ==
        extract_linespectrum(s.observed, s.calibration_noise, w, many).counts);
}

TEST_CASE("extraction preconditions", "[linespec]") {
  const auto a = Spectrogram::from_rows(4, 3, RealVector(12, 1.0));
  const auto b = Spectrogram::from_rows(4, 2, RealVector(8, 1.0));
  CHECK_THROWS(extract_linespectrum(a, b, weights(3)));
  CHECK_THROWS(extract_linespectrum(a, a, weights(5)));
}

TEST_CASE("merge_enhanced rules", "[linespec]") {
  const auto lofar_map = Spectrogram::from_rows(2, 3, {0.0, 0.2, 0.4, 0.1, 0.3, 0.8});
  CounterMap zero;
  zero.rows = 2;
  zero.cols = 3;
  zero.counts.assign(6, 0);
  const auto plain = merge_enhanced(lofar_map, zero);
  CHECK(plain.data()[0] == 0.0);
  CHECK(plain.data()[5] == 1.0);
  CHECK(plain.data()[2] == Approx(0.5));
  const auto again = merge_enhanced(plain, zero);
  for (std::size_t i = 0; i < 6; ++i) CHECK(again.data()[i] == Approx(plain.data()[i]).margin(1e-15));

  CounterMap line = zero;
  line.counts = {0, 0, 0, 3, 3, 3};
  const auto enhanced = merge_enhanced(lofar_map, line);
  CHECK(enhanced.at(1, 0) == 1.0);
  CHECK(enhanced.at(1, 1) == 1.0);
  CHECK(enhanced.at(0, 1) == Approx(0.25));
  for (double v : enhanced.data()) CHECK((v >= 0.0 && v <= 1.0));

  CounterMap wrong = zero;
  wrong.cols = 2;
  CHECK_THROWS(merge_enhanced(lofar_map, wrong));
}
