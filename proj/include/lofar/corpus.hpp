#pragma once

// Seeded synthetic 4-class corpus: each class is a harmonic comb with its own
// fundamental over transient bursts; Noise recordings carry only sea noise.
// Written as 16-bit WAV files plus a manifest.json next to them.

#include <filesystem>
#include <string>
#include <vector>

#include "lofar/pipeline.hpp"
#include "lofar/synth.hpp"
#include "lofar/wav.hpp"

namespace lofar::corpus {

struct CorpusSpec {
  double sample_rate_hz = 52734.0;
  double seconds = 2.0;
  std::size_t recordings_per_class_split = 1;  // per class and per split
  std::size_t noise_recordings = 2;
  double fundamentals_hz[4] = {50.0, 73.0, 97.0, 131.0};  // W, X, Y, Z
};

inline constexpr pipeline::ClassLabel kShipClasses[4] = {pipeline::ClassLabel::W, pipeline::ClassLabel::X,
                                                         pipeline::ClassLabel::Y, pipeline::ClassLabel::Z};

inline pipeline::DatasetManifest write_synthetic_corpus(const std::filesystem::path& dir, const CorpusSpec& spec,
                                                        std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto n = static_cast<std::size_t>(spec.seconds * spec.sample_rate_hz);
  const auto rate = static_cast<std::uint32_t>(spec.sample_rate_hz);
  synth::Rng rng(seed);

  // Half-scale so the 16-bit encode never clips.
  auto store = [&](RealVector x, const std::string& name) {
    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    if (peak > 0.0) {
      for (double& v : x) v *= 0.5 / peak;
    }
    wav::write_wav(dir / name, {x}, rate);
    return fs::path(name);
  };

  pipeline::DatasetManifest m;
  for (int c = 0; c < 4; ++c) {
    for (auto split : {pipeline::Split::Train, pipeline::Split::Test}) {
      for (std::size_t k = 0; k < spec.recordings_per_class_split; ++k) {
        const std::string id = pipeline::to_string(kShipClasses[c]) + "_" + pipeline::to_string(split) + "_" + std::to_string(k);
        auto x = synth::ship_like(spec.sample_rate_hz, n, spec.fundamentals_hz[c], rng);
        const auto noise = synth::sea_noise(spec.sample_rate_hz, n, rng);
        for (std::size_t i = 0; i < n; ++i) x[i] += noise[i];
        m.entries.push_back({store(std::move(x), id + ".wav"), kShipClasses[c], id, split});
      }
    }
  }
  for (std::size_t k = 0; k < spec.noise_recordings; ++k) {
    const std::string id = "noise_" + std::to_string(k);
    m.entries.push_back({store(synth::sea_noise(spec.sample_rate_hz, n, rng), id + ".wav"), pipeline::ClassLabel::Noise,
                         id, pipeline::Split::Train});
  }
  pipeline::write_json(dir / "manifest.json", pipeline::manifest_to_json(m));
  for (auto& e : m.entries) e.audio_path = dir / e.audio_path;
  return m;
}

}  // namespace lofar::corpus
