#pragma once

// Seeded synthetic signals: tones, harmonic combs, broadband bursts, noise
// and SNR-controlled mixing. Used by the test suites and `dataset synth`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "lofar/core.hpp"

namespace lofar::synth {

using Rng = std::mt19937_64;

inline RealVector tone(double fs, std::size_t n, double freq_hz, double amplitude = 1.0, double phase = 0.0) {
  RealVector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amplitude * std::sin(2.0 * kPi * freq_hz * static_cast<double>(i) / fs + phase);
  return x;
}

inline RealVector white_noise(std::size_t n, double sigma, Rng& rng) {
  std::normal_distribution<double> nd(0.0, sigma);
  RealVector x(n);
  for (double& v : x) v = nd(rng);
  return x;
}

/// Hann-shaped half-sine pulse of `length` samples starting at `start`.
inline void add_click(RealVector& x, std::size_t start, std::size_t length, double amplitude) {
  for (std::size_t i = 0; i < length && start + i < x.size(); ++i) {
    x[start + i] += amplitude * std::sin(kPi * (static_cast<double>(i) + 0.5) / static_cast<double>(length));
  }
}

/// Sum of harmonics k * f0 (k = 1..count) with amplitude decay^(k-1) and
/// random phases.
inline RealVector harmonic_comb(double fs, std::size_t n, double f0, int count, double decay, Rng& rng,
                                double amplitude = 1.0) {
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  RealVector x(n, 0.0);
  double a = amplitude;
  for (int k = 1; k <= count; ++k) {
    const double f = f0 * k;
    if (f >= fs / 2.0) break;
    const double ph = phase(rng);
    for (std::size_t i = 0; i < n; ++i) x[i] += a * std::sin(2.0 * kPi * f * static_cast<double>(i) / fs + ph);
    a *= decay;
  }
  return x;
}

/// Short Hann-windowed white-noise bursts at random positions, on average
/// `rate_hz` per second.
inline RealVector broadband_bursts(double fs, std::size_t n, double rate_hz, std::size_t burst_length, double amplitude,
                                   Rng& rng) {
  RealVector x(n, 0.0);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<std::size_t> pos(0, n > burst_length ? n - burst_length : 0);
  const auto count = static_cast<std::size_t>(std::lround(rate_hz * static_cast<double>(n) / fs));
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t start = pos(rng);
    for (std::size_t i = 0; i < burst_length && start + i < n; ++i) {
      const double w = std::sin(kPi * (static_cast<double>(i) + 0.5) / static_cast<double>(burst_length));
      x[start + i] += amplitude * w * w * nd(rng);
    }
  }
  return x;
}

struct ShipProfile {
  double comb_amplitude = 0.5;  // first harmonic
  double comb_decay = 0.85;
  double comb_ceiling_hz = 900.0;
  double burst_rate_hz = 40.0;
  std::size_t burst_length = 24;
  double burst_amplitude = 2.0;
  double floor_sigma = 0.02;
};

/// Tonal machinery comb below ~1 kHz plus transient broadband bursts and a
/// weak noise floor.
inline RealVector ship_like(double fs, std::size_t n, double f0, Rng& rng, const ShipProfile& p = {}) {
  const int harmonics = std::max(1, static_cast<int>(p.comb_ceiling_hz / f0));
  auto x = harmonic_comb(fs, n, f0, harmonics, p.comb_decay, rng, p.comb_amplitude);
  const auto bursts = broadband_bursts(fs, n, p.burst_rate_hz, p.burst_length, p.burst_amplitude, rng);
  const auto floor = white_noise(n, p.floor_sigma, rng);
  for (std::size_t i = 0; i < n; ++i) x[i] += bursts[i] + floor[i];
  return x;
}

/// Background noise: broadband floor plus sparse bursts.
inline RealVector sea_noise(double fs, std::size_t n, Rng& rng) {
  auto x = white_noise(n, 0.1, rng);
  const auto bursts = broadband_bursts(fs, n, 10.0, 24, 0.5, rng);
  for (std::size_t i = 0; i < n; ++i) x[i] += bursts[i];
  return x;
}

inline double mean_power(std::span<const double> x) {
  return x.empty() ? 0.0 : sum_squares(x) / static_cast<double>(x.size());
}

/// signal + g * noise with g chosen so that 10 log10(P_signal / P_noise') = snr_db.
/// The noise is cycled if shorter than the signal.
inline RealVector mix_at_snr(std::span<const double> signal, std::span<const double> noise, double snr_db) {
  if (signal.empty() || noise.empty()) throw Error("mix_at_snr: empty input");
  const double ps = mean_power(signal);
  const double pn = mean_power(noise);
  if (!(pn > 0.0)) throw Error("mix_at_snr: noise has no power");
  const double gain = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
  RealVector out(signal.begin(), signal.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += gain * noise[i % noise.size()];
  return out;
}

}  // namespace lofar::synth
