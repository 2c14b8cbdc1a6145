#pragma once

// Time-series container, framing, per-frame normalization, STFT and the
// log-amplitude LOFAR map.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lofar/core.hpp"
#include "lofar/fft.hpp"

namespace lofar {

class SampleBuffer {
 public:
  SampleBuffer() = default;
  SampleBuffer(RealVector samples, double sample_rate_hz)
      : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
    if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_)) {
      throw Error("SampleBuffer: sample rate must be positive");
    }
    if (samples_.empty()) throw Error("SampleBuffer: empty signal");
    if (!all_finite(samples_)) throw Error("SampleBuffer: non-finite sample");
  }

  std::span<const double> samples() const noexcept { return samples_; }
  const RealVector& vector() const noexcept { return samples_; }
  double sample_rate_hz() const noexcept { return sample_rate_hz_; }
  std::size_t size() const noexcept { return samples_.size(); }
  double duration_s() const noexcept { return static_cast<double>(samples_.size()) / sample_rate_hz_; }

 private:
  RealVector samples_;
  double sample_rate_hz_ = 1.0;
};

enum class WindowKind { Hanning, Hamming, Rectangular };

struct WindowSpec {
  WindowKind kind = WindowKind::Hanning;
  std::size_t length = 2048;
  double overlap_fraction = 0.75;

  void validate() const {
    if (length < 2) throw Error("WindowSpec: length must be >= 2");
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
      throw Error("WindowSpec: overlap fraction must lie in [0, 1)");
    }
  }

  // hop = length - floor(overlap * length)
  std::size_t hop() const {
    const auto overlap = static_cast<std::size_t>(std::floor(overlap_fraction * static_cast<double>(length)));
    return length - overlap;
  }

  // Periodic (DFT-even) tapers.
  RealVector taper() const {
    RealVector w(length, 1.0);
    const double n = static_cast<double>(length);
    for (std::size_t i = 0; i < length; ++i) {
      const double c = std::cos(2.0 * kPi * static_cast<double>(i) / n);
      switch (kind) {
        case WindowKind::Hanning: w[i] = 0.5 - 0.5 * c; break;
        case WindowKind::Hamming: w[i] = 0.54 - 0.46 * c; break;
        case WindowKind::Rectangular: break;
      }
    }
    return w;
  }
};

inline std::string to_string(WindowKind k) {
  switch (k) {
    case WindowKind::Hanning: return "hanning";
    case WindowKind::Hamming: return "hamming";
    case WindowKind::Rectangular: return "rectangular";
  }
  return "?";
}

inline WindowKind window_kind_from_string(const std::string& s) {
  if (s == "hanning" || s == "hann") return WindowKind::Hanning;
  if (s == "hamming") return WindowKind::Hamming;
  if (s == "rectangular" || s == "rect") return WindowKind::Rectangular;
  throw Error("unknown window kind '" + s + "'");
}

inline std::size_t frame_count(std::size_t signal_length, const WindowSpec& win) {
  win.validate();
  if (signal_length < win.length) return 0;
  return (signal_length - win.length) / win.hop() + 1;
}

/// Splits the buffer into tapered frames of win.length samples; the trailing
/// partial frame is discarded.
inline std::vector<RealVector> frame_signal(const SampleBuffer& buf, const WindowSpec& win) {
  win.validate();
  if (buf.size() < win.length) throw Error("frame_signal: insufficient samples");
  const auto count = frame_count(buf.size(), win);
  const auto hop = win.hop();
  const auto taper = win.taper();
  const auto s = buf.samples();
  std::vector<RealVector> frames(count, RealVector(win.length));
  for (std::size_t k = 0; k < count; ++k) {
    const auto* src = s.data() + k * hop;
    for (std::size_t i = 0; i < win.length; ++i) frames[k][i] = src[i] * taper[i];
  }
  return frames;
}

/// Removes the mean, then scales so the largest absolute deviation is 1.
/// A constant frame maps to all zeros.
inline RealVector normalize_decenter(std::span<const double> frame) {
  if (frame.empty()) throw Error("normalize_decenter: empty frame");
  double mean = 0.0;
  for (double x : frame) mean += x;
  mean /= static_cast<double>(frame.size());
  RealVector out(frame.begin(), frame.end());
  double peak = 0.0;
  for (double& x : out) {
    x -= mean;
    peak = std::max(peak, std::abs(x));
  }
  if (peak == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  for (double& x : out) x /= peak;
  return out;
}

enum class AmplitudeScale { Linear, LogAmplitude };

// M x N amplitude map, frequency along rows and time along columns,
// stored row-major.
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(std::size_t rows, std::size_t cols, RealVector freq_axis_hz, RealVector time_axis_s,
              AmplitudeScale scale = AmplitudeScale::Linear)
      : rows_(rows),
        cols_(cols),
        data_(rows * cols, 0.0),
        freq_(std::move(freq_axis_hz)),
        time_(std::move(time_axis_s)),
        scale_(scale) {
    if (freq_.size() != rows_ || time_.size() != cols_) throw Error("Spectrogram: axis length mismatch");
  }

  // Axis-less map for tests and synthetic inputs: unit bin and frame spacing.
  static Spectrogram from_rows(std::size_t rows, std::size_t cols, RealVector data,
                               AmplitudeScale scale = AmplitudeScale::Linear) {
    RealVector f(rows), t(cols);
    for (std::size_t i = 0; i < rows; ++i) f[i] = static_cast<double>(i + 1);
    for (std::size_t j = 0; j < cols; ++j) t[j] = static_cast<double>(j);
    Spectrogram s(rows, cols, std::move(f), std::move(t), scale);
    if (data.size() != rows * cols) throw Error("Spectrogram: data size mismatch");
    s.data_ = std::move(data);
    return s;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }
  AmplitudeScale scale() const noexcept { return scale_; }
  void set_scale(AmplitudeScale s) noexcept { scale_ = s; }

  double& at(std::size_t row, std::size_t col) { return data_[row * cols_ + col]; }
  double at(std::size_t row, std::size_t col) const { return data_[row * cols_ + col]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const RealVector& freq_axis_hz() const noexcept { return freq_; }
  const RealVector& time_axis_s() const noexcept { return time_; }

  /// Columns [first, first + count) as a new map.
  Spectrogram columns(std::size_t first, std::size_t count) const {
    if (first + count > cols_) throw Error("Spectrogram::columns: range out of bounds");
    RealVector t(time_.begin() + static_cast<std::ptrdiff_t>(first),
                 time_.begin() + static_cast<std::ptrdiff_t>(first + count));
    Spectrogram out(rows_, count, freq_, std::move(t), scale_);
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < count; ++j) out.at(i, j) = at(i, first + j);
    }
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  RealVector data_;
  RealVector freq_;
  RealVector time_;
  AmplitudeScale scale_ = AmplitudeScale::Linear;
};

struct StftOptions {
  // Per-frame mean removal and peak scaling after the taper.
  bool normalize_frames = true;
};

/// One-sided magnitude STFT. Rows are bins 1..fft_size/2 (DC dropped), so
/// M = fft_size / 2. Frames shorter than fft_size are zero padded.
inline Spectrogram stft(const SampleBuffer& buf, const WindowSpec& win, std::size_t fft_size,
                        StftOptions opts = {}) {
  if (fft_size < win.length || fft_size < 2 || (fft_size & (fft_size - 1)) != 0) {
    throw Error("stft: fft_size must be a power of two >= window length");
  }
  const auto frames = frame_signal(buf, win);
  const std::size_t rows = fft_size / 2;
  const std::size_t cols = frames.size();
  const double fs = buf.sample_rate_hz();

  RealVector freq(rows), time(cols);
  for (std::size_t i = 0; i < rows; ++i) freq[i] = static_cast<double>(i + 1) * fs / static_cast<double>(fft_size);
  const auto hop = win.hop();
  for (std::size_t k = 0; k < cols; ++k) {
    time[k] = (static_cast<double>(k * hop) + 0.5 * static_cast<double>(win.length)) / fs;
  }
  Spectrogram out(rows, cols, std::move(freq), std::move(time), AmplitudeScale::Linear);

  RealVector padded(fft_size, 0.0);
  fft::ComplexVector bins(fft_size / 2 + 1);
  for (std::size_t k = 0; k < cols; ++k) {
    std::fill(padded.begin(), padded.end(), 0.0);
    if (opts.normalize_frames) {
      const auto norm = normalize_decenter(frames[k]);
      std::copy(norm.begin(), norm.end(), padded.begin());
    } else {
      std::copy(frames[k].begin(), frames[k].end(), padded.begin());
    }
    fft::forward(padded, bins);
    for (std::size_t i = 0; i < rows; ++i) out.at(i, k) = std::abs(bins[i + 1]);
  }
  return out;
}

inline constexpr double kLogFloor = 1e-10;

/// In-place min-max rescale to [0, 1]; a flat map becomes all zeros.
inline void rescale_unit(std::span<double> values) {
  if (values.empty()) return;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo, range = *hi - *lo;
  if (!(range > 0.0)) {
    std::fill(values.begin(), values.end(), 0.0);
    return;
  }
  for (double& v : values) v = (v - min) / range;
}

/// 20 log10(a + floor), then rescaled per map to [0, 1].
inline Spectrogram to_lofar(const Spectrogram& linear) {
  if (linear.scale() != AmplitudeScale::Linear) throw Error("to_lofar: input must be linear-scale");
  Spectrogram out = linear;
  for (double& v : out.data()) v = 20.0 * std::log10(v + kLogFloor);
  rescale_unit(out.data());
  out.set_scale(AmplitudeScale::LogAmplitude);
  return out;
}

}  // namespace lofar
