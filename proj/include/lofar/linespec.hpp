#pragma once

// Sliding-window multi-step-decision line-spectrum tracker.
//
// A path takes one frequency bin per frame inside a window of L bins. Its cost
//
//   O = (lambda_f * F + mu_t * T) / A
//
// combines the amplitude sum A, the frequency-continuity term F (sum of
// absolute second differences of the bin index) and the breakpoint count T
// (cells with amplitude strictly below epsilon). Low cost means line-like.
//
// The window optimum is found exactly. For a fixed ratio c the parametric
// cost lambda_f F + mu_t T - c A is additive over frames once the state holds
// the last two bins, so an (L x L)-state dynamic program minimizes it. The
// ratio is then tightened (Dinkelbach iteration) until no path beats the
// incumbent, which terminates at the global minimum because the path set is
// finite.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lofar/core.hpp"
#include "lofar/parallel.hpp"
#include "lofar/signal.hpp"

namespace lofar::linespec {

inline constexpr double kAmplitudeGuard = 1e-12;

struct CostWeights {
  double lambda_f = 1.0;  // frequency-continuity weight
  double mu_t = 1.0;      // breakpoint weight
  double epsilon = 0.0;   // breakpoint amplitude threshold
  std::size_t window_bins = 5;

  void validate(std::size_t rows) const {
    if (!(lambda_f >= 0.0) || !(mu_t >= 0.0) || !(epsilon >= 0.0)) {
      throw Error("linespec: weights and epsilon must be non-negative");
    }
    if (lambda_f == 0.0 && mu_t == 0.0) throw Error("linespec: lambda_f and mu_t cannot both be zero");
    if (window_bins < 2) throw Error("linespec: window must span at least 2 bins");
    if (window_bins > rows) {
      throw Error("linespec: window of " + std::to_string(window_bins) + " bins exceeds " + std::to_string(rows) +
                  " frequency rows");
    }
  }
};

/// Window width covering a line of the given width plus one guard bin on
/// each side, never narrower than 5 bins.
inline std::size_t default_window_bins(double line_width_hz, double bin_width_hz) {
  if (!(bin_width_hz > 0.0)) throw Error("default_window_bins: bin width must be positive");
  const auto span = static_cast<std::size_t>(std::ceil(std::max(0.0, line_width_hz) / bin_width_hz)) + 2;
  return std::max<std::size_t>(5, span);
}

struct PathState {
  double A = 0.0;
  double F = 0.0;
  int T = 0;
  double cost = 0.0;
  std::optional<std::size_t> prev_bin;
};

inline double guarded_cost(double a, double f, int t, const CostWeights& w) {
  return (w.lambda_f * f + w.mu_t * static_cast<double>(t)) / std::max(a, kAmplitudeGuard);
}

/// Evaluates a path given per-frame amplitudes and frequencies (bin units).
inline PathState path_cost(std::span<const double> amps, std::span<const double> freqs, const CostWeights& w) {
  if (amps.empty() || amps.size() != freqs.size()) throw Error("path_cost: need matching, non-empty amplitude and frequency lists");
  PathState s;
  for (double a : amps) {
    s.A += a;
    if (a < w.epsilon) ++s.T;
  }
  for (std::size_t i = 2; i < freqs.size(); ++i) {
    const double d1 = freqs[i - 2] - freqs[i - 1];
    const double d2 = freqs[i - 1] - freqs[i];
    s.F += std::abs(d1 - d2);
  }
  s.cost = guarded_cost(s.A, s.F, s.T, w);
  return s;
}

struct WindowPath {
  std::vector<std::size_t> bins;  // absolute row index per frame
  PathState state;
};

/// Evaluates a path of absolute row indices against a spectrogram.
inline PathState evaluate_path(const Spectrogram& spec, std::span<const std::size_t> bins, const CostWeights& w) {
  RealVector amps(bins.size()), freqs(bins.size());
  for (std::size_t t = 0; t < bins.size(); ++t) {
    amps[t] = spec.at(bins[t], t);
    freqs[t] = static_cast<double>(bins[t]);
  }
  auto s = path_cost(amps, freqs, w);
  if (bins.size() >= 2) s.prev_bin = bins[bins.size() - 2];
  return s;
}

namespace detail {

// Minimizes lambda_f F + mu_t T - ratio * A over all paths inside rows
// [first, first + L). Ties resolve toward lower bin indices.
inline std::vector<std::size_t> parametric_path(const Spectrogram& spec, std::size_t first, const CostWeights& w,
                                                double ratio) {
  const std::size_t L = w.window_bins;
  const std::size_t N = spec.cols();
  auto node = [&](std::size_t row, std::size_t t) {
    const double a = spec.at(first + row, t);
    return (a < w.epsilon ? w.mu_t : 0.0) - ratio * a;
  };

  if (N == 1) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < L; ++j) {
      if (node(j, 0) < node(best, 0)) best = j;
    }
    return {first + best};
  }

  // value[p * L + c]: best partial cost ending with bins (p, c) at (t-1, t).
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> value(L * L), next(L * L);
  // back[t][p * L + c] = bin at t-2 on the best partial path.
  std::vector<std::vector<std::uint16_t>> back(N, std::vector<std::uint16_t>(L * L, 0));

  for (std::size_t p = 0; p < L; ++p) {
    const double np = node(p, 0);
    for (std::size_t c = 0; c < L; ++c) value[p * L + c] = np + node(c, 1);
  }
  for (std::size_t t = 2; t < N; ++t) {
    for (std::size_t c = 0; c < L; ++c) {
      const double nc = node(c, t);
      for (std::size_t p = 0; p < L; ++p) {
        double best = inf;
        std::size_t arg = 0;
        for (std::size_t q = 0; q < L; ++q) {
          const double second = static_cast<double>(q) - 2.0 * static_cast<double>(p) + static_cast<double>(c);
          const double v = value[q * L + p] + w.lambda_f * std::abs(second);
          if (v < best) {
            best = v;
            arg = q;
          }
        }
        next[p * L + c] = best + nc;
        back[t][p * L + c] = static_cast<std::uint16_t>(arg);
      }
    }
    value.swap(next);
  }

  std::size_t best_p = 0, best_c = 0;
  double best = inf;
  for (std::size_t c = 0; c < L; ++c) {
    for (std::size_t p = 0; p < L; ++p) {
      if (value[p * L + c] < best) {
        best = value[p * L + c];
        best_p = p;
        best_c = c;
      }
    }
  }
  std::vector<std::size_t> path(N);
  path[N - 1] = best_c;
  path[N - 2] = best_p;
  for (std::size_t t = N - 1; t >= 2; --t) path[t - 2] = back[t][path[t - 1] * L + path[t]];
  for (auto& b : path) b += first;
  return path;
}

}  // namespace detail

/// Optimal path of the window whose lowest row is `first` (0-based), spanning
/// every frame of the spectrogram.
inline WindowPath track_window(const Spectrogram& spec, std::size_t first, const CostWeights& w) {
  w.validate(spec.rows());
  if (spec.cols() == 0) throw Error("track_window: spectrogram has no frames");
  if (first + w.window_bins > spec.rows()) {
    throw Error("track_window: window start " + std::to_string(first) + " out of range");
  }
  if (w.window_bins > std::numeric_limits<std::uint16_t>::max()) throw Error("track_window: window too wide");

  WindowPath best;
  best.bins = detail::parametric_path(spec, first, w, 0.0);
  best.state = evaluate_path(spec, best.bins, w);
  // Each round strictly lowers the cost, so this stays well below the bound.
  for (int round = 0; round < 256; ++round) {
    auto candidate = detail::parametric_path(spec, first, w, best.state.cost);
    auto state = evaluate_path(spec, candidate, w);
    if (!(state.cost < best.state.cost)) break;
    best.bins = std::move(candidate);
    best.state = state;
  }
  return best;
}

/// Breakpoint threshold: root of the mean cell power of a noise-only map.
inline double epsilon_from_noise(const Spectrogram& noise) {
  if (noise.empty()) throw Error("epsilon_from_noise: empty spectrogram");
  double power = 0.0;
  for (double a : noise.data()) power += a * a;
  return std::sqrt(power / static_cast<double>(noise.data().size()));
}

/// Detection threshold: the lowest optimal window cost over a noise-only map.
inline double gamma_from_noise(const Spectrogram& noise, const CostWeights& w, unsigned threads = 1) {
  w.validate(noise.rows());
  const std::size_t windows = noise.rows() - w.window_bins + 1;
  RealVector costs(windows);
  parallel_for(windows, threads, [&](std::size_t r) { costs[r] = track_window(noise, r, w).state.cost; });
  return *std::min_element(costs.begin(), costs.end());
}

enum class DetectDirection {
  BelowGamma,  // window optimum cheaper than anything seen in noise
  AboveGamma,  // literal "greater than gamma" rule
};

struct Thresholds {
  double epsilon = 0.0;
  double gamma = 0.0;
};

struct CounterMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint32_t> counts;  // row-major
  double gamma = 0.0;
  double epsilon = 0.0;
  std::size_t windows = 0;
  std::size_t detections = 0;

  std::uint32_t at(std::size_t row, std::size_t col) const { return counts[row * cols + col]; }
  std::uint32_t max_count() const {
    return counts.empty() ? 0u : *std::max_element(counts.begin(), counts.end());
  }
};

/// Number of length-L windows (step 1) that contain `row`.
inline std::size_t covering_windows(std::size_t row, std::size_t rows, std::size_t window_bins) {
  const std::size_t hi = std::min(row, rows - window_bins);
  const std::size_t lo = row + 1 >= window_bins ? row + 1 - window_bins : 0;
  return hi >= lo ? hi - lo + 1 : 0;
}

struct ExtractOptions {
  DetectDirection direction = DetectDirection::BelowGamma;
  unsigned threads = 1;
};

/// Slides the window over every start row with step 1 and increments the
/// cells of each detected optimal path.
inline CounterMap extract_linespectrum(const Spectrogram& spec, const Thresholds& th, CostWeights w,
                                       ExtractOptions opts = {}) {
  w.epsilon = th.epsilon;
  if (w.window_bins > spec.rows()) throw Error("extract_linespectrum: window wider than the frequency axis");
  w.validate(spec.rows());
  CounterMap out;
  out.rows = spec.rows();
  out.cols = spec.cols();
  out.counts.assign(out.rows * out.cols, 0);
  out.gamma = th.gamma;
  out.epsilon = th.epsilon;
  out.windows = spec.rows() - w.window_bins + 1;

  std::vector<WindowPath> paths(out.windows);
  parallel_for(out.windows, opts.threads, [&](std::size_t r) { paths[r] = track_window(spec, r, w); });
  for (const auto& p : paths) {
    const bool hit = opts.direction == DetectDirection::BelowGamma ? p.state.cost < th.gamma : p.state.cost > th.gamma;
    if (!hit) continue;
    ++out.detections;
    for (std::size_t t = 0; t < p.bins.size(); ++t) ++out.counts[p.bins[t] * out.cols + t];
  }
  return out;
}

/// Calibrates epsilon and gamma on `noise` and then extracts.
inline CounterMap extract_linespectrum(const Spectrogram& spec, const Spectrogram& noise, CostWeights w,
                                       ExtractOptions opts = {}) {
  if (noise.rows() != spec.rows() || noise.cols() != spec.cols()) {
    throw Error("extract_linespectrum: noise map must match the spectrogram dimensions");
  }
  if (w.window_bins > spec.rows()) throw Error("extract_linespectrum: window wider than the frequency axis");
  Thresholds th;
  th.epsilon = epsilon_from_noise(noise);
  w.epsilon = th.epsilon;
  th.gamma = gamma_from_noise(noise, w, opts.threads);
  return extract_linespectrum(spec, th, w, opts);
}

/// max(min-max normalized map, counts / max count), cell by cell.
inline Spectrogram merge_enhanced(const Spectrogram& lofar, const CounterMap& counts) {
  if (lofar.rows() != counts.rows || lofar.cols() != counts.cols) throw Error("merge_enhanced: dimension mismatch");
  Spectrogram out = lofar;
  rescale_unit(out.data());
  const double peak = std::max<double>(1.0, counts.max_count());
  auto data = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::max(data[i], static_cast<double>(counts.counts[i]) / peak);
  out.set_scale(AmplitudeScale::LogAmplitude);
  return out;
}

}  // namespace lofar::linespec
