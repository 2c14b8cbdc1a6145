#pragma once

// Thin real-input FFT layer over FFTW. Plans are created once per length under
// a global lock (the FFTW planner is not re-entrant) and executed through the
// new-array interface, which is safe to call concurrently.

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "lofar/core.hpp"

namespace lofar::fft {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

namespace detail {

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

template <typename T>
using AlignedPtr = std::unique_ptr<T[], FftwFree>;

template <typename T>
AlignedPtr<T> aligned_alloc(std::size_t count) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * (count == 0 ? 1 : count)));
  if (p == nullptr) throw Error("fftw_malloc failed");
  return AlignedPtr<T>(p);
}

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class PlanCache {
 public:
  ~PlanCache() {
    std::lock_guard lock(planner_mutex());
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.inverse);
    }
  }

  const PlanPair& get(int n) {
    std::lock_guard lock(planner_mutex());
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    auto real = aligned_alloc<double>(static_cast<std::size_t>(n));
    auto spec = aligned_alloc<fftw_complex>(static_cast<std::size_t>(n / 2 + 1));
    PlanPair p;
    p.forward = fftw_plan_dft_r2c_1d(n, real.get(), spec.get(), FFTW_ESTIMATE);
    p.inverse = fftw_plan_dft_c2r_1d(n, spec.get(), real.get(), FFTW_ESTIMATE);
    if (p.forward == nullptr || p.inverse == nullptr) throw Error("FFTW planning failed");
    return plans_.emplace(n, p).first->second;
  }

 private:
  std::map<int, PlanPair> plans_;
};

inline PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

// Per-thread aligned scratch, grown on demand.
struct Scratch {
  AlignedPtr<double> real;
  AlignedPtr<fftw_complex> spec;
  std::size_t real_cap = 0;
  std::size_t spec_cap = 0;

  void reserve(std::size_t n) {
    if (real_cap < n) {
      real = aligned_alloc<double>(n);
      real_cap = n;
    }
    if (spec_cap < n / 2 + 1) {
      spec = aligned_alloc<fftw_complex>(n / 2 + 1);
      spec_cap = n / 2 + 1;
    }
  }
};

inline Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

}  // namespace detail

/// Unnormalized forward transform of a real sequence; returns bins 0..n/2.
inline void forward(std::span<const double> in, std::span<Complex> out) {
  const auto n = in.size();
  if (n == 0 || out.size() != n / 2 + 1) throw Error("fft::forward: bad sizes");
  const auto& plan = detail::plan_cache().get(static_cast<int>(n));
  auto& s = detail::scratch();
  s.reserve(n);
  std::memcpy(s.real.get(), in.data(), n * sizeof(double));
  fftw_execute_dft_r2c(plan.forward, s.real.get(), s.spec.get());
  std::memcpy(static_cast<void*>(out.data()), s.spec.get(), out.size() * sizeof(fftw_complex));
}

inline ComplexVector forward(std::span<const double> in) {
  ComplexVector out(in.size() / 2 + 1);
  forward(in, out);
  return out;
}

/// Unnormalized inverse of a Hermitian half spectrum (bins 0..n/2) to n reals.
/// Imaginary parts of the DC and (even n) Nyquist bins are ignored.
inline void inverse(std::span<const Complex> in, std::span<double> out) {
  const auto n = out.size();
  if (n == 0 || in.size() != n / 2 + 1) throw Error("fft::inverse: bad sizes");
  const auto& plan = detail::plan_cache().get(static_cast<int>(n));
  auto& s = detail::scratch();
  s.reserve(n);
  // c2r destroys its input, so always work on the scratch copy.
  std::memcpy(s.spec.get(), in.data(), in.size() * sizeof(fftw_complex));
  fftw_execute_dft_c2r(plan.inverse, s.spec.get(), s.real.get());
  std::memcpy(out.data(), s.real.get(), n * sizeof(double));
}

inline RealVector inverse(std::span<const Complex> in, std::size_t n) {
  RealVector out(n);
  inverse(in, out);
  return out;
}

}  // namespace lofar::fft
