#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lofar {

using RealVector = std::vector<double>;

// Base error for every failure raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the batch pipeline; carries the recording and processing stage.
class StageError : public Error {
 public:
  StageError(std::string recording_id, std::string stage, const std::string& what)
      : Error("[" + stage + "] " + recording_id + ": " + what),
        recording_id_(std::move(recording_id)),
        stage_(std::move(stage)) {}

  const std::string& recording_id() const noexcept { return recording_id_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string recording_id_;
  std::string stage_;
};

inline constexpr double kPi = 3.14159265358979323846;

inline bool all_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline double sum_squares(std::span<const double> xs) {
  double acc = 0.0;
  for (double x : xs) acc += x * x;
  return acc;
}

inline double l2_norm(std::span<const double> xs) { return std::sqrt(sum_squares(xs)); }

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  const std::size_t n = a.size() < b.size() ? a.size() : b.size();
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace lofar
