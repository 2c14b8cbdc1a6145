#pragma once

// Grayscale spectrogram images as binary PGM (P5). Frequency runs up the
// vertical axis (row 0 of the map is the bottom line), time to the right.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lofar/core.hpp"
#include "lofar/signal.hpp"

namespace lofar::image {

struct Gray8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<unsigned char> pixels;  // top-left first
};

inline Gray8 render(const Spectrogram& spec) {
  Gray8 img;
  img.width = spec.cols();
  img.height = spec.rows();
  img.pixels.assign(img.width * img.height, 0);
  if (spec.empty()) return img;
  const auto data = spec.data();
  const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  const double range = *hi - *lo;
  for (std::size_t r = 0; r < spec.rows(); ++r) {
    const std::size_t y = spec.rows() - 1 - r;
    for (std::size_t c = 0; c < spec.cols(); ++c) {
      const double v = range > 0.0 ? (spec.at(r, c) - *lo) / range : 0.0;
      img.pixels[y * img.width + c] = static_cast<unsigned char>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
    }
  }
  return img;
}

inline void write_pgm(const std::filesystem::path& path, const Gray8& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline void write_pgm(const std::filesystem::path& path, const Spectrogram& spec) { write_pgm(path, render(spec)); }

/// Writes one image per spectrogram; paths and maps pair up by index.
inline void emit_plots(const std::vector<Spectrogram>& spectrograms, const std::vector<std::filesystem::path>& paths) {
  if (spectrograms.size() != paths.size()) throw Error("emit_plots: need one path per spectrogram");
  for (std::size_t i = 0; i < paths.size(); ++i) write_pgm(paths[i], spectrograms[i]);
}

}  // namespace lofar::image
