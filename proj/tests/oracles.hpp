#pragma once

// Independent reference computations shared by the unit and acceptance suites.

#include <cmath>
#include <random>
#include <vector>

#include "lofar/linespec.hpp"
#include "lofar/synth.hpp"

namespace oracle {

using lofar::RealVector;
using lofar::Spectrogram;

/// Exhaustive search over all L^N paths of a window. Enumeration runs in
/// lexicographic order with a strict comparison, so ties keep the path with
/// the lowest bins first.
inline lofar::linespec::WindowPath brute_force_window(const Spectrogram& spec, std::size_t first,
                                                      const lofar::linespec::CostWeights& w) {
  const std::size_t L = w.window_bins, N = spec.cols();
  std::vector<std::size_t> digits(N, 0), bins(N);
  lofar::linespec::WindowPath best;
  bool have = false;
  while (true) {
    for (std::size_t t = 0; t < N; ++t) bins[t] = first + digits[t];
    const auto s = lofar::linespec::evaluate_path(spec, bins, w);
    if (!have || s.cost < best.state.cost) {
      best.bins = bins;
      best.state = s;
      have = true;
    }
    std::size_t t = N;
    while (t > 0 && ++digits[t - 1] == L) digits[--t] = 0;
    if (t == 0) break;
  }
  return best;
}

/// Rayleigh-distributed magnitudes: |complex Gaussian| with unit scale.
inline Spectrogram rayleigh_map(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  RealVector data(rows * cols);
  for (double& v : data) v = std::hypot(nd(rng), nd(rng));
  return Spectrogram::from_rows(rows, cols, std::move(data));
}

struct BreakScenario {
  Spectrogram calibration_noise;
  Spectrogram observed;  // fresh noise plus the broken line
  std::size_t line_row = 0;
  std::vector<bool> zeroed;  // per frame
};

/// A constant-frequency line over Rayleigh noise with every fifth frame of the
/// line zeroed (20% of frames).
inline BreakScenario broken_line(std::size_t rows, std::size_t cols, double line_amplitude, std::uint64_t seed) {
  BreakScenario s;
  s.calibration_noise = rayleigh_map(rows, cols, seed);
  s.observed = rayleigh_map(rows, cols, seed + 1000);
  s.line_row = rows / 2;
  s.zeroed.assign(cols, false);
  for (std::size_t t = 0; t < cols; ++t) {
    if (t % 5 == 2) {
      s.zeroed[t] = true;
      s.observed.at(s.line_row, t) = 0.0;
    } else {
      s.observed.at(s.line_row, t) = line_amplitude;
    }
  }
  return s;
}

/// Energy of `truth` that `estimate` accounts for: <estimate, truth> / ||truth||^2
/// over samples [begin, end).
inline double attribution(const RealVector& estimate, const RealVector& truth, std::size_t begin, std::size_t end) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    num += estimate[i] * truth[i];
    den += truth[i] * truth[i];
  }
  return num / den;
}

}  // namespace oracle
