#pragma once

// Tunable-Q wavelet transform realized in the DFT domain.
//
// Each level splits the current spectrum into a low-pass branch (frequency
// scaled by alpha) and a high-pass branch (scaled by beta). Transition bands
// use theta(w) = 0.5 (1 + cos w) sqrt(2 - cos w), which is power
// complementary with its mirror, so the transform is a Parseval tight frame
// and synthesis is the adjoint of analysis.

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "lofar/core.hpp"
#include "lofar/fft.hpp"

namespace lofar::tqwt {

inline double transition(double w) { return 0.5 * (1.0 + std::cos(w)) * std::sqrt(2.0 - std::cos(w)); }

/// Deepest admissible level for the given scaling factors and length.
inline int max_levels(double alpha, double beta, std::size_t length) {
  const double v = std::log(beta * static_cast<double>(length) / 8.0) / std::log(1.0 / alpha);
  return v < 0.0 ? 0 : static_cast<int>(std::floor(v));
}

struct TqwtParams {
  double alpha = 0.0;  // low-pass scaling
  double beta = 0.0;   // high-pass scaling
  int levels = 1;
  std::size_t length = 0;

  double q_factor() const { return (2.0 - beta) / beta; }
  double redundancy() const { return beta / (1.0 - alpha); }
  int level_limit() const { return max_levels(alpha, beta, length); }

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("tqwt: alpha must lie in (0, 1)");
    if (!(beta > 0.0 && beta <= 1.0)) throw Error("tqwt: beta must lie in (0, 1]");
    if (!(alpha + beta > 1.0)) throw Error("tqwt: alpha + beta must exceed 1");
    if (length < 2 || length % 2 != 0) throw Error("tqwt: input length must be even and >= 2");
    if (levels < 1) throw Error("tqwt: levels must be >= 1");
    if (levels > level_limit()) {
      throw Error("tqwt: levels " + std::to_string(levels) + " exceed J_max = " + std::to_string(level_limit()));
    }
  }

  friend bool operator==(const TqwtParams&, const TqwtParams&) = default;
};

/// beta = 2 / (Q + 1), alpha = 1 - beta / r.
inline TqwtParams params_from_q(double q, double r, int levels, std::size_t length) {
  if (!(q >= 1.0)) throw Error("tqwt: Q must be >= 1");
  if (!(r > 1.0)) throw Error("tqwt: r must be > 1");
  TqwtParams p;
  p.beta = 2.0 / (q + 1.0);
  p.alpha = 1.0 - p.beta / r;
  p.levels = levels;
  p.length = length;
  p.validate();
  return p;
}

/// Center frequency (Hz) of high-pass level j.
inline double center_frequency(const TqwtParams& p, int level, double fs) {
  if (level < 1 || level > p.levels) throw Error("tqwt: level out of range");
  return std::pow(p.alpha, level) * (2.0 - p.beta) / (4.0 * p.alpha) * fs;
}

/// Bandwidth of high-pass level j in normalized radians.
inline double bandwidth(const TqwtParams& p, int level) {
  if (level < 1 || level > p.levels) throw Error("tqwt: level out of range");
  return 0.5 * p.beta * std::pow(p.alpha, level - 1) * kPi;
}

/// Continuous low-pass response on [0, pi].
inline double low_response(const TqwtParams& p, double w) {
  w = std::abs(w);
  if (w <= (1.0 - p.beta) * kPi) return 1.0;
  if (w >= p.alpha * kPi) return 0.0;
  return transition((w + (p.beta - 1.0) * kPi) / (p.alpha + p.beta - 1.0));
}

/// Continuous high-pass response on [0, pi].
inline double high_response(const TqwtParams& p, double w) {
  w = std::abs(w);
  if (w <= (1.0 - p.beta) * kPi) return 0.0;
  if (w >= p.alpha * kPi) return 1.0;
  return transition((p.alpha * kPi - w) / (p.alpha + p.beta - 1.0));
}

struct SubbandSet {
  std::vector<RealVector> subbands;  // levels 1..J high-pass, then the final low-pass
  TqwtParams params;

  double energy() const {
    double e = 0.0;
    for (const auto& s : subbands) e += sum_squares(s);
    return e;
  }
};

// Geometry of one two-channel stage. Spectra are kept as half spectra
// (bins 0..n/2); the negative half follows by conjugate symmetry.
struct Stage {
  std::size_t input_length = 0;  // n
  std::size_t low_length = 0;    // N0
  std::size_t high_length = 0;   // N1
  std::size_t pass = 0;          // P = (n - N1) / 2
  std::size_t trans = 0;         // T = (N0 + N1 - n) / 2 - 1
  std::size_t stop = 0;          // S = (n - N0) / 2
  RealVector taper;              // theta(k pi / (T + 1)), k = 1..T
};

class Tqwt {
 public:
  explicit Tqwt(const TqwtParams& params) : params_(params) {
    params_.validate();
    const double n = static_cast<double>(params_.length);
    std::size_t cur = params_.length;
    for (int j = 1; j <= params_.levels; ++j) {
      Stage s;
      s.input_length = cur;
      s.low_length = 2 * static_cast<std::size_t>(std::round(std::pow(params_.alpha, j) * n / 2.0));
      s.high_length = 2 * static_cast<std::size_t>(std::round(params_.beta * std::pow(params_.alpha, j - 1) * n / 2.0));
      if (s.low_length < 2 || s.high_length < 2 || s.low_length + s.high_length < cur + 2 ||
          s.low_length > cur || s.high_length > cur) {
        throw Error("tqwt: level " + std::to_string(j) + " is degenerate for length " + std::to_string(params_.length));
      }
      s.pass = (cur - s.high_length) / 2;
      s.trans = (s.low_length + s.high_length - cur) / 2 - 1;
      s.stop = (cur - s.low_length) / 2;
      s.taper.resize(s.trans);
      for (std::size_t k = 1; k <= s.trans; ++k) {
        s.taper[k - 1] = transition(static_cast<double>(k) * kPi / static_cast<double>(s.trans + 1));
      }
      cur = s.low_length;
      stages_.push_back(std::move(s));
    }
    compute_norms();
  }

  const TqwtParams& params() const noexcept { return params_; }
  const std::vector<Stage>& stages() const noexcept { return stages_; }
  std::size_t subband_count() const noexcept { return stages_.size() + 1; }

  std::size_t subband_length(std::size_t index) const {
    return index < stages_.size() ? stages_[index].high_length : stages_.back().low_length;
  }

  /// L2 norm of the synthesis atom of each subband (J + 1 entries).
  const RealVector& basis_norms() const noexcept { return norms_; }

  SubbandSet analyze(std::span<const double> x) const {
    if (x.size() != params_.length) {
      throw Error("tqwt::analyze: input length " + std::to_string(x.size()) + " != " + std::to_string(params_.length));
    }
    SubbandSet out;
    out.params = params_;
    out.subbands.resize(subband_count());
    auto spec = unitary_forward(x);
    fft::ComplexVector low, high;
    for (std::size_t j = 0; j < stages_.size(); ++j) {
      split(stages_[j], spec, low, high);
      out.subbands[j] = unitary_inverse(high, stages_[j].high_length);
      spec.swap(low);
    }
    out.subbands.back() = unitary_inverse(spec, stages_.back().low_length);
    return out;
  }

  RealVector synthesize(const SubbandSet& sub) const { return synthesize(sub.subbands); }

  RealVector synthesize(const std::vector<RealVector>& subbands) const {
    if (subbands.size() != subband_count()) throw Error("tqwt::synthesize: wrong number of subbands");
    for (std::size_t j = 0; j < subbands.size(); ++j) {
      if (subbands[j].size() != subband_length(j)) {
        throw Error("tqwt::synthesize: subband " + std::to_string(j + 1) + " has length " +
                    std::to_string(subbands[j].size()) + ", expected " + std::to_string(subband_length(j)));
      }
    }
    auto spec = unitary_forward(subbands.back());
    fft::ComplexVector merged;
    for (std::size_t j = stages_.size(); j-- > 0;) {
      const auto high = unitary_forward(subbands[j]);
      merge(stages_[j], spec, high, merged);
      spec.swap(merged);
    }
    return unitary_inverse(spec, params_.length);
  }

 private:
  static fft::ComplexVector unitary_forward(std::span<const double> x) {
    auto spec = fft::forward(x);
    const double scale = 1.0 / std::sqrt(static_cast<double>(x.size()));
    for (auto& c : spec) c *= scale;
    return spec;
  }

  static RealVector unitary_inverse(std::span<const fft::Complex> spec, std::size_t n) {
    auto x = fft::inverse(spec, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (double& v : x) v *= scale;
    return x;
  }

  static void split(const Stage& s, const fft::ComplexVector& in, fft::ComplexVector& low, fft::ComplexVector& high) {
    const std::size_t P = s.pass, T = s.trans, S = s.stop;
    low.assign(s.low_length / 2 + 1, fft::Complex{});
    high.assign(s.high_length / 2 + 1, fft::Complex{});
    for (std::size_t k = 0; k <= P; ++k) low[k] = in[k];
    for (std::size_t k = 1; k <= T; ++k) {
      low[P + k] = in[P + k] * s.taper[k - 1];
      high[k] = in[P + k] * s.taper[T - k];
    }
    for (std::size_t k = 1; k <= S; ++k) high[T + k] = in[P + T + k];
    // Nyquist bin of the low branch stays zero; the input Nyquist goes high.
    high[s.high_length / 2] = in[s.input_length / 2];
  }

  static void merge(const Stage& s, const fft::ComplexVector& low, const fft::ComplexVector& high,
                    fft::ComplexVector& out) {
    const std::size_t P = s.pass, T = s.trans, S = s.stop;
    out.assign(s.input_length / 2 + 1, fft::Complex{});
    for (std::size_t k = 0; k <= P; ++k) out[k] = low[k];
    for (std::size_t k = 1; k <= T; ++k) {
      out[P + k] = low[P + k] * s.taper[k - 1] + high[k] * s.taper[T - k];
    }
    for (std::size_t k = 1; k <= S; ++k) out[P + T + k] = high[T + k];
    out[s.input_length / 2] = high[s.high_length / 2];
  }

  void compute_norms() {
    std::vector<RealVector> unit(subband_count());
    for (std::size_t j = 0; j < unit.size(); ++j) unit[j].assign(subband_length(j), 0.0);
    norms_.resize(unit.size());
    for (std::size_t j = 0; j < unit.size(); ++j) {
      unit[j][0] = 1.0;
      norms_[j] = l2_norm(synthesize(unit));
      unit[j][0] = 0.0;
    }
  }

  TqwtParams params_;
  std::vector<Stage> stages_;
  RealVector norms_;
};

/// Shared, immutable transform for the given parameters. Instances are built
/// once and then only read, so concurrent callers may share them.
inline std::shared_ptr<const Tqwt> cached(const TqwtParams& params) {
  using Key = std::tuple<double, double, int, std::size_t>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const Tqwt>> cache;
  const Key key{params.alpha, params.beta, params.levels, params.length};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto built = std::make_shared<const Tqwt>(params);
  std::lock_guard lock(mutex);
  return cache.try_emplace(key, std::move(built)).first->second;
}

inline SubbandSet analyze(std::span<const double> x, const TqwtParams& params) { return cached(params)->analyze(x); }

inline RealVector synthesize(const SubbandSet& sub) { return cached(sub.params)->synthesize(sub); }

}  // namespace lofar::tqwt
