#pragma once

// Resonance-based sparse signal decomposition.
//
// Splits x into a high-resonance part (sparse in a high-Q TQWT), a
// low-resonance part (sparse in a low-Q TQWT) and a residual by minimizing
//
//   J(w_l, w_h) = ||x - Phi_h w_h - Phi_l w_l||^2
//               + sum_j lambda_h,j ||w_h^j||_1 + sum_j lambda_l,j ||w_l^j||_1
//
// with a split augmented-Lagrangian shrinkage iteration. Also hosts the
// validation metrics (band-energy percentages, spectral correlation).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lofar/core.hpp"
#include "lofar/fft.hpp"
#include "lofar/parallel.hpp"
#include "lofar/signal.hpp"
#include "lofar/tqwt.hpp"

namespace lofar::rssd {

struct McaConfig {
  tqwt::TqwtParams high_params;
  tqwt::TqwtParams low_params;
  double k_high = 0.5;
  double k_low = 0.5;
  int iterations = 100;
  double salsa_mu = 2.0;

  // Q_h = 4, r_h = 3, J_h = 32 / Q_l = 1, r_l = 3, J_l = 3.
  static McaConfig defaults(std::size_t block_length = 2048) {
    McaConfig c;
    c.high_params = tqwt::params_from_q(4.0, 3.0, 32, block_length);
    c.low_params = tqwt::params_from_q(1.0, 3.0, 3, block_length);
    return c;
  }

  std::size_t block_length() const noexcept { return high_params.length; }

  void validate() const {
    high_params.validate();
    low_params.validate();
    if (high_params.length != low_params.length) throw Error("rssd: high and low transforms must share the block length");
    if (!(k_high >= 0.0 && k_high <= 1.0) || !(k_low >= 0.0 && k_low <= 1.0)) {
      throw Error("rssd: k coefficients must lie in [0, 1]");
    }
    if (iterations < 1) throw Error("rssd: iterations must be >= 1");
    if (!(salsa_mu > 0.0)) throw Error("rssd: salsa_mu must be positive");
  }
};

struct LambdaWeights {
  RealVector high;  // J_h + 1 entries
  RealVector low;   // J_l + 1 entries
};

/// lambda_j = k * ||Phi_j||_2 for every subband including the final low-pass.
inline LambdaWeights lambda_weights(const McaConfig& cfg) {
  LambdaWeights w;
  for (double n : tqwt::cached(cfg.high_params)->basis_norms()) w.high.push_back(cfg.k_high * n);
  for (double n : tqwt::cached(cfg.low_params)->basis_norms()) w.low.push_back(cfg.k_low * n);
  return w;
}

struct Decomposition {
  RealVector x_high;
  RealVector x_low;
  RealVector residual;  // x - x_high - x_low
  tqwt::SubbandSet high_coeffs;
  tqwt::SubbandSet low_coeffs;
  RealVector objective_trace;
};

namespace detail {

inline double soft(double v, double t) {
  const double m = std::abs(v) - t;
  return m > 0.0 ? std::copysign(m, v) : 0.0;
}

inline double weighted_l1(const std::vector<RealVector>& bands, const RealVector& lambda) {
  double acc = 0.0;
  for (std::size_t j = 0; j < bands.size(); ++j) {
    double s = 0.0;
    for (double v : bands[j]) s += std::abs(v);
    acc += lambda[j] * s;
  }
  return acc;
}

inline std::vector<RealVector> zeros_like(const tqwt::Tqwt& t) {
  std::vector<RealVector> out(t.subband_count());
  for (std::size_t j = 0; j < out.size(); ++j) out[j].assign(t.subband_length(j), 0.0);
  return out;
}

// u = soft(w + d, T_j) - d, per subband.
inline void shrink(const std::vector<RealVector>& w, const std::vector<RealVector>& d, const RealVector& lambda,
                   double mu, std::vector<RealVector>& u) {
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double t = lambda[j] / (2.0 * mu);
    for (std::size_t i = 0; i < w[j].size(); ++i) u[j][i] = soft(w[j][i] + d[j][i], t) - d[j][i];
  }
}

}  // namespace detail

/// Evaluates the MCA objective for given coefficients, from scratch.
inline double objective(std::span<const double> x, const tqwt::SubbandSet& high, const tqwt::SubbandSet& low,
                        const LambdaWeights& lambda) {
  const auto xh = tqwt::synthesize(high);
  const auto xl = tqwt::synthesize(low);
  double fit = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = x[i] - xh[i] - xl[i];
    fit += r * r;
  }
  return fit + detail::weighted_l1(high.subbands, lambda.high) + detail::weighted_l1(low.subbands, lambda.low);
}

/// Decomposes one block whose length equals the configured transform length.
/// Runs exactly cfg.iterations iterations from all-zero coefficients.
inline Decomposition decompose(std::span<const double> x, const McaConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.block_length();
  if (x.size() != n) {
    throw Error("rssd::decompose: block length " + std::to_string(x.size()) + " != " + std::to_string(n));
  }
  const auto th = tqwt::cached(cfg.high_params);
  const auto tl = tqwt::cached(cfg.low_params);
  const auto lambda = lambda_weights(cfg);
  const double mu = cfg.salsa_mu;

  auto w1 = detail::zeros_like(*th), d1 = w1, u1 = w1;
  auto w2 = detail::zeros_like(*tl), d2 = w2, u2 = w2;
  RealVector c(n), x1(n), x2(n);

  Decomposition out;
  out.objective_trace.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int it = 0; it < cfg.iterations; ++it) {
    detail::shrink(w1, d1, lambda.high, mu, u1);
    detail::shrink(w2, d2, lambda.low, mu, u2);
    const auto s1 = th->synthesize(u1);
    const auto s2 = tl->synthesize(u2);
    for (std::size_t i = 0; i < n; ++i) c[i] = (x[i] - s1[i] - s2[i]) / (mu + 2.0);
    d1 = th->analyze(c).subbands;
    d2 = tl->analyze(c).subbands;
    for (std::size_t j = 0; j < w1.size(); ++j) {
      for (std::size_t i = 0; i < w1[j].size(); ++i) w1[j][i] = d1[j][i] + u1[j][i];
    }
    for (std::size_t j = 0; j < w2.size(); ++j) {
      for (std::size_t i = 0; i < w2[j].size(); ++i) w2[j][i] = d2[j][i] + u2[j][i];
    }
    // Phi Phi^T = I on a tight frame, so Phi w = c + Phi u.
    double fit = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x1[i] = c[i] + s1[i];
      x2[i] = c[i] + s2[i];
      const double r = x[i] - x1[i] - x2[i];
      fit += r * r;
    }
    const double cost = fit + detail::weighted_l1(w1, lambda.high) + detail::weighted_l1(w2, lambda.low);
    if (!std::isfinite(cost)) {
      throw Error("rssd::decompose: iterate diverged at iteration " + std::to_string(it + 1) +
                  " (salsa_mu = " + std::to_string(mu) + ")");
    }
    out.objective_trace.push_back(cost);
  }

  out.high_coeffs.params = cfg.high_params;
  out.high_coeffs.subbands = std::move(w1);
  out.low_coeffs.params = cfg.low_params;
  out.low_coeffs.subbands = std::move(w2);
  out.x_high = th->synthesize(out.high_coeffs);
  out.x_low = tl->synthesize(out.low_coeffs);
  out.residual.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.residual[i] = x[i] - out.x_high[i] - out.x_low[i];
  if (!all_finite(out.x_high) || !all_finite(out.x_low)) {
    throw Error("rssd::decompose: non-finite output (salsa_mu = " + std::to_string(mu) + ")");
  }
  return out;
}

struct SignalDecomposition {
  RealVector x_high;
  RealVector x_low;
  RealVector residual;
  RealVector objective_trace;  // summed over blocks
};

/// Decomposes an arbitrary-length signal in consecutive non-overlapping
/// blocks. The last partial block is zero padded for the transform and
/// truncated afterwards. Blocks may run on several threads; the result does
/// not depend on the thread count.
inline SignalDecomposition decompose_signal(std::span<const double> x, const McaConfig& cfg, unsigned threads = 1) {
  cfg.validate();
  const std::size_t n = cfg.block_length();
  const std::size_t blocks = (x.size() + n - 1) / n;
  std::vector<Decomposition> parts(blocks);
  parallel_for(blocks, threads, [&](std::size_t b) {
    RealVector block(n, 0.0);
    const std::size_t begin = b * n;
    const std::size_t len = std::min(n, x.size() - begin);
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(begin), len, block.begin());
    parts[b] = decompose(block, cfg);
  });
  SignalDecomposition out;
  out.x_high.resize(x.size());
  out.x_low.resize(x.size());
  out.residual.resize(x.size());
  out.objective_trace.assign(static_cast<std::size_t>(cfg.iterations), 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t begin = b * n;
    const std::size_t len = std::min(n, x.size() - begin);
    for (std::size_t i = 0; i < len; ++i) {
      out.x_high[begin + i] = parts[b].x_high[i];
      out.x_low[begin + i] = parts[b].x_low[i];
      out.residual[begin + i] = x[begin + i] - parts[b].x_high[i] - parts[b].x_low[i];
    }
    for (std::size_t k = 0; k < out.objective_trace.size(); ++k) out.objective_trace[k] += parts[b].objective_trace[k];
  }
  return out;
}

/// Ten 1000 Hz bands from 0 Hz, then one band up to fs/2.
inline RealVector default_band_edges(double fs) {
  RealVector edges;
  for (int k = 0; k <= 10 && 1000.0 * k < fs / 2.0; ++k) edges.push_back(1000.0 * k);
  edges.push_back(fs / 2.0);
  return edges;
}

/// Share (percent) of one-sided spectral energy falling in each band
/// [edges[i], edges[i+1]); the last band includes its upper edge.
inline RealVector band_energy_percentages(const SampleBuffer& buf, std::span<const double> edges) {
  const double fs = buf.sample_rate_hz();
  if (edges.size() < 2) throw Error("band_energy_percentages: need at least two band edges");
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (!(edges[i] < edges[i + 1])) throw Error("band_energy_percentages: band edges must increase");
  }
  if (edges.front() < 0.0 || edges.back() > fs / 2.0 * (1.0 + 1e-12)) {
    throw Error("band_energy_percentages: band edges must lie within [0, fs/2]");
  }
  const auto spec = fft::forward(buf.samples());
  const std::size_t n = buf.size();
  RealVector energy(edges.size() - 1, 0.0);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(n);
    const bool edge_bin = k == 0 || (n % 2 == 0 && k == n / 2);
    const double p = std::norm(spec[k]) * (edge_bin ? 1.0 : 2.0);
    for (std::size_t b = 0; b < energy.size(); ++b) {
      const bool last = b + 1 == energy.size();
      if (f >= edges[b] && (f < edges[b + 1] || (last && f <= edges[b + 1]))) {
        energy[b] += p;
        break;
      }
    }
  }
  double total = 0.0;
  for (double e : energy) total += e;
  if (!(total > 0.0)) throw Error("band_energy_percentages: no energy to apportion");
  for (double& e : energy) e = 100.0 * e / total;
  return energy;
}

inline constexpr std::size_t kSpectrumSegment = 2048;

/// Welch power spectrum: Hann segments of kSpectrumSegment samples, 50%
/// overlap, bins 0..segment/2. Shorter signals are zero padded.
inline RealVector power_spectrum(const SampleBuffer& buf, std::size_t segment = kSpectrumSegment) {
  WindowSpec win{WindowKind::Hanning, segment, 0.5};
  const auto taper = win.taper();
  const auto x = buf.samples();
  RealVector acc(segment / 2 + 1, 0.0);
  RealVector frame(segment);
  fft::ComplexVector bins(segment / 2 + 1);
  const std::size_t count = std::max<std::size_t>(1, frame_count(x.size(), win));
  for (std::size_t s = 0; s < count; ++s) {
    std::fill(frame.begin(), frame.end(), 0.0);
    const std::size_t begin = s * win.hop();
    const std::size_t len = std::min(segment, x.size() - begin);
    for (std::size_t i = 0; i < len; ++i) frame[i] = x[begin + i] * taper[i];
    fft::forward(frame, bins);
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += std::norm(bins[k]);
  }
  for (double& v : acc) v /= static_cast<double>(count);
  return acc;
}

struct SccResult {
  double value = 0.0;
  double f1_hz = 0.0;
  double f2_hz = 0.0;
};

/// Spectral correlation coefficient of two power spectra over [f1, f2].
inline SccResult scc(const SampleBuffer& a, const SampleBuffer& b, double f1_hz, double f2_hz) {
  const double fs = a.sample_rate_hz();
  if (fs != b.sample_rate_hz()) throw Error("scc: sample rates differ");
  if (!(f1_hz < f2_hz) || f1_hz < 0.0 || f2_hz > fs / 2.0) throw Error("scc: require 0 <= f1 < f2 <= fs/2");
  const auto pa = power_spectrum(a);
  const auto pb = power_spectrum(b);
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t k = 0; k < pa.size(); ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(kSpectrumSegment);
    if (f < f1_hz || f > f2_hz) continue;
    ab += pa[k] * pb[k];
    aa += pa[k] * pa[k];
    bb += pb[k] * pb[k];
  }
  if (!(aa > 0.0) || !(bb > 0.0)) throw Error("scc: zero band energy");
  return {ab / std::sqrt(aa * bb), f1_hz, f2_hz};
}

}  // namespace lofar::rssd
