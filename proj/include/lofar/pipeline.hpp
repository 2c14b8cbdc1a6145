#pragma once

// Batch pipeline: WAV ingestion -> resonance decomposition (keep the
// high-resonance part) -> STFT -> noise-calibrated line-spectrum enhancement
// -> fixed-size LOFAR samples -> LFR1 export with a JSON index.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lofar/core.hpp"
#include "lofar/image.hpp"
#include "lofar/linespec.hpp"
#include "lofar/parallel.hpp"
#include "lofar/rssd.hpp"
#include "lofar/signal.hpp"
#include "lofar/tensor_io.hpp"
#include "lofar/wav.hpp"

namespace lofar::pipeline {

using json = nlohmann::json;
namespace fs = std::filesystem;

enum class ClassLabel : std::uint8_t { W = 0, X = 1, Y = 2, Z = 3, Noise = 4 };

inline std::string to_string(ClassLabel c) {
  switch (c) {
    case ClassLabel::W: return "W";
    case ClassLabel::X: return "X";
    case ClassLabel::Y: return "Y";
    case ClassLabel::Z: return "Z";
    case ClassLabel::Noise: return "Noise";
  }
  return "?";
}

inline ClassLabel label_from_string(const std::string& s) {
  if (s == "W") return ClassLabel::W;
  if (s == "X") return ClassLabel::X;
  if (s == "Y") return ClassLabel::Y;
  if (s == "Z") return ClassLabel::Z;
  if (s == "Noise" || s == "noise") return ClassLabel::Noise;
  throw Error("unknown class label '" + s + "' (expected W, X, Y, Z or Noise)");
}

enum class Split { Train, Test };

inline std::string to_string(Split s) { return s == Split::Train ? "train" : "test"; }

inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw Error("unknown split '" + s + "' (expected train or test)");
}

struct ManifestEntry {
  fs::path audio_path;
  ClassLabel label = ClassLabel::W;
  std::string recording_id;
  Split split = Split::Train;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> noise_pool() const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries) {
      if (e.label == ClassLabel::Noise) out.push_back(&e);
    }
    return out;
  }

  /// Non-Noise classes missing from a split, as "class/split" strings.
  std::vector<std::string> missing_class_splits() const {
    std::set<std::pair<ClassLabel, Split>> seen;
    std::set<ClassLabel> classes;
    for (const auto& e : entries) {
      if (e.label == ClassLabel::Noise) continue;
      seen.insert({e.label, e.split});
      classes.insert(e.label);
    }
    std::vector<std::string> missing;
    for (auto c : classes) {
      for (auto s : {Split::Train, Split::Test}) {
        if (!seen.count({c, s})) missing.push_back(to_string(c) + "/" + to_string(s));
      }
    }
    return missing;
  }

  /// Unique audio paths and recording ids; with `classification`, every
  /// non-Noise class must also appear in both splits.
  void validate(bool classification = false) const {
    std::set<std::string> paths, ids;
    for (const auto& e : entries) {
      if (!paths.insert(e.audio_path.lexically_normal().string()).second) {
        throw Error("manifest: duplicate audio_path '" + e.audio_path.string() + "'");
      }
      if (e.recording_id.empty()) throw Error("manifest: empty recording_id for '" + e.audio_path.string() + "'");
      if (!ids.insert(e.recording_id).second) throw Error("manifest: duplicate recording_id '" + e.recording_id + "'");
    }
    if (classification) {
      const auto missing = missing_class_splits();
      if (!missing.empty()) throw Error("manifest: class/split without recordings: " + missing.front());
    }
  }
};

inline DatasetManifest manifest_from_json(const json& j, const fs::path& base_dir = {}) {
  DatasetManifest m;
  for (const auto& e : j.at("entries")) {
    ManifestEntry entry;
    entry.audio_path = e.at("audio_path").get<std::string>();
    if (entry.audio_path.is_relative() && !base_dir.empty()) entry.audio_path = base_dir / entry.audio_path;
    entry.label = label_from_string(e.at("class_label").get<std::string>());
    entry.recording_id = e.at("recording_id").get<std::string>();
    entry.split = split_from_string(e.value("split", std::string("train")));
    m.entries.push_back(std::move(entry));
  }
  m.validate();
  return m;
}

inline json manifest_to_json(const DatasetManifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"audio_path", e.audio_path.generic_string()},
                       {"class_label", to_string(e.label)},
                       {"recording_id", e.recording_id},
                       {"split", to_string(e.split)}});
  }
  return {{"entries", entries}};
}

inline json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error("'" + path.string() + "': " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline DatasetManifest load_manifest(const fs::path& path) {
  return manifest_from_json(read_json(path), path.parent_path());
}

struct RssdSettings {
  bool enabled = true;
  std::size_t block_length = 2048;
  double q_high = 4.0, r_high = 3.0;
  int j_high = 32;
  double q_low = 1.0, r_low = 3.0;
  int j_low = 3;
  double k_high = 0.5, k_low = 0.5;
  int iterations = 100;
  double salsa_mu = 2.0;

  rssd::McaConfig mca() const {
    rssd::McaConfig c;
    c.high_params = tqwt::params_from_q(q_high, r_high, j_high, block_length);
    c.low_params = tqwt::params_from_q(q_low, r_low, j_low, block_length);
    c.k_high = k_high;
    c.k_low = k_low;
    c.iterations = iterations;
    c.salsa_mu = salsa_mu;
    c.validate();
    return c;
  }
};

struct TrackerSettings {
  double lambda_f = 1.0;
  double mu_t = 1.0;
  std::size_t window_bins = 0;  // 0: derive from line_width_hz
  double line_width_hz = 0.0;
  linespec::DetectDirection direction = linespec::DetectDirection::BelowGamma;

  linespec::CostWeights weights(double bin_width_hz) const {
    linespec::CostWeights w;
    w.lambda_f = lambda_f;
    w.mu_t = mu_t;
    w.window_bins = window_bins != 0 ? window_bins : linespec::default_window_bins(line_width_hz, bin_width_hz);
    return w;
  }
};

struct PipelineConfig {
  WindowSpec window{WindowKind::Hanning, 2048, 0.75};
  std::size_t fft_size = 2048;
  std::size_t frames_per_sample = 64;
  std::size_t sample_stride = 0;  // frames between sample starts; 0 = frames_per_sample
  bool normalize_input_peak = true;
  RssdSettings rssd;
  TrackerSettings tracker;
  bool enhancement = true;
  std::string export_format = "lfr1";

  std::size_t stride() const { return sample_stride == 0 ? frames_per_sample : sample_stride; }
  std::size_t rows() const { return fft_size / 2; }

  void validate() const {
    window.validate();
    if (fft_size < window.length || (fft_size & (fft_size - 1)) != 0) {
      throw Error("config: fft_size must be a power of two >= window length");
    }
    if (frames_per_sample < 3) throw Error("config: frames_per_sample must be >= 3");
    if (export_format != "lfr1") throw Error("config: unsupported export format '" + export_format + "'");
    if (rssd.enabled) rssd.mca();
  }
};

inline json config_to_json(const PipelineConfig& c) {
  return {
      {"window", {{"kind", to_string(c.window.kind)}, {"length", c.window.length}, {"overlap", c.window.overlap_fraction}}},
      {"fft_size", c.fft_size},
      {"frames_per_sample", c.frames_per_sample},
      {"sample_stride", c.sample_stride},
      {"normalize_input_peak", c.normalize_input_peak},
      {"rssd",
       {{"enabled", c.rssd.enabled},
        {"block_length", c.rssd.block_length},
        {"q_high", c.rssd.q_high},
        {"r_high", c.rssd.r_high},
        {"j_high", c.rssd.j_high},
        {"q_low", c.rssd.q_low},
        {"r_low", c.rssd.r_low},
        {"j_low", c.rssd.j_low},
        {"k_high", c.rssd.k_high},
        {"k_low", c.rssd.k_low},
        {"iterations", c.rssd.iterations},
        {"salsa_mu", c.rssd.salsa_mu}}},
      {"tracker",
       {{"lambda_f", c.tracker.lambda_f},
        {"mu_t", c.tracker.mu_t},
        {"window_bins", c.tracker.window_bins},
        {"line_width_hz", c.tracker.line_width_hz},
        {"detect_direction", c.tracker.direction == linespec::DetectDirection::BelowGamma ? "below" : "above"}}},
      {"enhancement", c.enhancement},
      {"export_format", c.export_format},
  };
}

/// Reads a config; absent keys keep their defaults.
inline PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  if (j.contains("window")) {
    const auto& w = j["window"];
    if (w.contains("kind")) c.window.kind = window_kind_from_string(w["kind"].get<std::string>());
    c.window.length = w.value("length", c.window.length);
    c.window.overlap_fraction = w.value("overlap", c.window.overlap_fraction);
  }
  c.fft_size = j.value("fft_size", c.fft_size);
  c.frames_per_sample = j.value("frames_per_sample", c.frames_per_sample);
  c.sample_stride = j.value("sample_stride", c.sample_stride);
  c.normalize_input_peak = j.value("normalize_input_peak", c.normalize_input_peak);
  if (j.contains("rssd")) {
    const auto& r = j["rssd"];
    c.rssd.enabled = r.value("enabled", c.rssd.enabled);
    c.rssd.block_length = r.value("block_length", c.rssd.block_length);
    c.rssd.q_high = r.value("q_high", c.rssd.q_high);
    c.rssd.r_high = r.value("r_high", c.rssd.r_high);
    c.rssd.j_high = r.value("j_high", c.rssd.j_high);
    c.rssd.q_low = r.value("q_low", c.rssd.q_low);
    c.rssd.r_low = r.value("r_low", c.rssd.r_low);
    c.rssd.j_low = r.value("j_low", c.rssd.j_low);
    c.rssd.k_high = r.value("k_high", c.rssd.k_high);
    c.rssd.k_low = r.value("k_low", c.rssd.k_low);
    c.rssd.iterations = r.value("iterations", c.rssd.iterations);
    c.rssd.salsa_mu = r.value("salsa_mu", c.rssd.salsa_mu);
  }
  if (j.contains("tracker")) {
    const auto& t = j["tracker"];
    c.tracker.lambda_f = t.value("lambda_f", c.tracker.lambda_f);
    c.tracker.mu_t = t.value("mu_t", c.tracker.mu_t);
    c.tracker.window_bins = t.value("window_bins", c.tracker.window_bins);
    c.tracker.line_width_hz = t.value("line_width_hz", c.tracker.line_width_hz);
    const auto dir = t.value("detect_direction", std::string("below"));
    if (dir == "below") c.tracker.direction = linespec::DetectDirection::BelowGamma;
    else if (dir == "above") c.tracker.direction = linespec::DetectDirection::AboveGamma;
    else throw Error("config: detect_direction must be 'below' or 'above'");
  }
  c.enhancement = j.value("enhancement", c.enhancement);
  c.export_format = j.value("export_format", c.export_format);
  c.validate();
  return c;
}

inline PipelineConfig load_config(const fs::path& path) { return config_from_json(read_json(path)); }

// ---------------------------------------------------------------------------
// Stages shared by the batch run and the single-file CLI commands.

inline SampleBuffer peak_normalized(const SampleBuffer& buf) {
  double peak = 0.0;
  for (double v : buf.samples()) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return buf;
  RealVector x(buf.samples().begin(), buf.samples().end());
  for (double& v : x) v /= peak;
  return SampleBuffer(std::move(x), buf.sample_rate_hz());
}

/// Input conditioning plus the high-resonance extraction (or the conditioned
/// input itself when decomposition is disabled).
inline SampleBuffer high_resonance(const SampleBuffer& buf, const PipelineConfig& cfg, unsigned threads = 1) {
  const SampleBuffer in = cfg.normalize_input_peak ? peak_normalized(buf) : buf;
  if (!cfg.rssd.enabled) return in;
  auto parts = rssd::decompose_signal(in.samples(), cfg.rssd.mca(), threads);
  return SampleBuffer(std::move(parts.x_high), in.sample_rate_hz());
}

inline Spectrogram linear_spectrogram(const SampleBuffer& buf, const PipelineConfig& cfg) {
  return stft(buf, cfg.window, cfg.fft_size);
}

/// First frame of every sample cut from a map of `frames` columns.
inline std::vector<std::size_t> sample_starts(std::size_t frames, const PipelineConfig& cfg) {
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + cfg.frames_per_sample <= frames; s += cfg.stride()) starts.push_back(s);
  return starts;
}

/// Seconds of audio advanced per sample: frames_per_sample hops.
inline double sample_span_s(const PipelineConfig& cfg, double fs) {
  return static_cast<double>(cfg.frames_per_sample * cfg.window.hop()) / fs;
}

/// Pools noise maps (cut into sample-sized blocks) into epsilon and gamma.
inline linespec::Thresholds calibrate(const std::vector<Spectrogram>& noise, const PipelineConfig& cfg, unsigned threads = 1) {
  std::vector<Spectrogram> blocks;
  for (const auto& n : noise) {
    for (auto s : sample_starts(n.cols(), cfg)) blocks.push_back(n.columns(s, cfg.frames_per_sample));
  }
  if (blocks.empty()) throw Error("noise pool yields no block of " + std::to_string(cfg.frames_per_sample) + " frames");
  double power = 0.0;
  std::size_t cells = 0;
  for (const auto& b : blocks) {
    for (double a : b.data()) power += a * a;
    cells += b.data().size();
  }
  linespec::Thresholds th;
  th.epsilon = std::sqrt(power / static_cast<double>(cells));
  const double bin_width = noise.front().freq_axis_hz().size() > 1
                               ? noise.front().freq_axis_hz()[1] - noise.front().freq_axis_hz()[0]
                               : 1.0;
  auto w = cfg.tracker.weights(bin_width);
  w.epsilon = th.epsilon;
  RealVector gammas(blocks.size());
  parallel_for(blocks.size(), threads, [&](std::size_t i) { gammas[i] = linespec::gamma_from_noise(blocks[i], w); });
  th.gamma = *std::min_element(gammas.begin(), gammas.end());
  return th;
}

/// One output map from a linear block: the LOFAR map, or its enhanced merge.
inline Spectrogram render_sample(const Spectrogram& linear_block, const PipelineConfig& cfg,
                                 const std::optional<linespec::Thresholds>& th, unsigned threads = 1) {
  auto lofar_map = to_lofar(linear_block);
  if (!cfg.enhancement) return lofar_map;
  if (!th) throw Error("enhancement requires calibrated thresholds");
  const auto& f = linear_block.freq_axis_hz();
  const double bin_width = f.size() > 1 ? f[1] - f[0] : 1.0;
  linespec::ExtractOptions opts;
  opts.direction = cfg.tracker.direction;
  opts.threads = threads;
  const auto counts = linespec::extract_linespectrum(linear_block, *th, cfg.tracker.weights(bin_width), opts);
  return linespec::merge_enhanced(lofar_map, counts);
}

// ---------------------------------------------------------------------------

struct SampleTensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;  // row-major, frequency rows
  ClassLabel label = ClassLabel::W;
  Split split = Split::Train;
  std::string recording_id;
  std::size_t start_frame = 0;
};

struct RecordingReport {
  std::string recording_id;
  ClassLabel label = ClassLabel::W;
  Split split = Split::Train;
  double duration_s = 0.0;
  std::size_t frames = 0;
  std::size_t samples = 0;
  double seconds = 0.0;
};

struct RunReport {
  std::vector<RecordingReport> recordings;
  std::map<std::string, std::size_t> samples_per_class_split;  // "W/train" -> n
  std::optional<linespec::Thresholds> thresholds;
  std::vector<std::string> missing_class_splits;
  double total_seconds = 0.0;
  unsigned threads = 1;
};

struct PipelineOutput {
  std::vector<SampleTensor> samples;
  RunReport report;
};

struct RunOptions {
  unsigned threads = 1;
};

inline SampleTensor to_tensor(const Spectrogram& map, const ManifestEntry& e, std::size_t start) {
  SampleTensor t;
  t.rows = map.rows();
  t.cols = map.cols();
  t.data.resize(map.data().size());
  std::transform(map.data().begin(), map.data().end(), t.data.begin(), [](double v) { return static_cast<float>(v); });
  t.label = e.label;
  t.split = e.split;
  t.recording_id = e.recording_id;
  t.start_frame = start;
  return t;
}

inline PipelineOutput run_pipeline(const DatasetManifest& manifest, const PipelineConfig& cfg, RunOptions opts = {}) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  cfg.validate();
  manifest.validate();
  const auto noise = manifest.noise_pool();
  if (cfg.enhancement && noise.empty()) {
    throw StageError("<manifest>", "calibrate", "enhancement is on but the manifest has no Noise entries");
  }

  struct Work {
    Spectrogram linear;
    double duration_s = 0.0;
    double seconds = 0.0;
  };
  auto front_end = [&](const ManifestEntry& e) {
    const auto start = clock::now();
    Work w;
    SampleBuffer buf;
    try {
      buf = wav::ingest_wav(e.audio_path);
    } catch (const std::exception& ex) {
      throw StageError(e.recording_id, "ingest", ex.what());
    }
    w.duration_s = buf.duration_s();
    SampleBuffer high;
    try {
      high = high_resonance(buf, cfg);
    } catch (const std::exception& ex) {
      throw StageError(e.recording_id, "rssd", ex.what());
    }
    try {
      w.linear = linear_spectrogram(high, cfg);
    } catch (const std::exception& ex) {
      throw StageError(e.recording_id, "lofar", ex.what());
    }
    w.seconds = std::chrono::duration<double>(clock::now() - start).count();
    return w;
  };

  PipelineOutput out;
  out.report.threads = opts.threads;
  out.report.missing_class_splits = manifest.missing_class_splits();

  std::vector<RecordingReport> noise_reports;
  if (cfg.enhancement) {
    std::vector<Work> noise_work(noise.size());
    parallel_for(noise.size(), opts.threads, [&](std::size_t i) { noise_work[i] = front_end(*noise[i]); });
    std::vector<Spectrogram> maps;
    for (std::size_t i = 0; i < noise.size(); ++i) {
      maps.push_back(noise_work[i].linear);
      noise_reports.push_back({noise[i]->recording_id, ClassLabel::Noise, noise[i]->split, noise_work[i].duration_s,
                               noise_work[i].linear.cols(), 0, noise_work[i].seconds});
    }
    try {
      out.report.thresholds = calibrate(maps, cfg, opts.threads);
    } catch (const std::exception& ex) {
      throw StageError("<noise pool>", "calibrate", ex.what());
    }
  }

  std::vector<const ManifestEntry*> targets;
  for (const auto& e : manifest.entries) {
    if (e.label != ClassLabel::Noise) targets.push_back(&e);
  }
  std::vector<std::vector<SampleTensor>> per_recording(targets.size());
  std::vector<RecordingReport> reports(targets.size());
  parallel_for(targets.size(), opts.threads, [&](std::size_t i) {
    const auto& e = *targets[i];
    auto w = front_end(e);
    const auto start = clock::now();
    for (auto s : sample_starts(w.linear.cols(), cfg)) {
      try {
        const auto block = w.linear.columns(s, cfg.frames_per_sample);
        per_recording[i].push_back(to_tensor(render_sample(block, cfg, out.report.thresholds), e, s));
      } catch (const std::exception& ex) {
        throw StageError(e.recording_id, cfg.enhancement ? "enhance" : "slice", ex.what());
      }
    }
    reports[i] = {e.recording_id, e.label, e.split, w.duration_s, w.linear.cols(), per_recording[i].size(),
                  w.seconds + std::chrono::duration<double>(clock::now() - start).count()};
  });

  // Manifest order, noise first as it was processed first.
  std::size_t ti = 0, ni = 0;
  for (const auto& e : manifest.entries) {
    if (e.label == ClassLabel::Noise) {
      if (ni < noise_reports.size()) out.report.recordings.push_back(noise_reports[ni++]);
      continue;
    }
    out.report.recordings.push_back(reports[ti]);
    for (auto& s : per_recording[ti]) {
      out.report.samples_per_class_split[to_string(s.label) + "/" + to_string(s.split)] += 1;
      out.samples.push_back(std::move(s));
    }
    ++ti;
  }
  out.report.total_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  return out;
}

inline json report_to_json(const RunReport& r) {
  json recs = json::array();
  for (const auto& x : r.recordings) {
    recs.push_back({{"recording_id", x.recording_id},
                    {"class_label", to_string(x.label)},
                    {"split", to_string(x.split)},
                    {"duration_s", x.duration_s},
                    {"frames", x.frames},
                    {"samples", x.samples},
                    {"seconds", x.seconds},
                    {"realtime_factor", x.duration_s > 0.0 ? x.seconds / x.duration_s : 0.0}});
  }
  json j{{"recordings", recs},
         {"samples_per_class_split", r.samples_per_class_split},
         {"missing_class_splits", r.missing_class_splits},
         {"total_seconds", r.total_seconds},
         {"threads", r.threads}};
  if (r.thresholds) j["thresholds"] = {{"epsilon", r.thresholds->epsilon}, {"gamma", r.thresholds->gamma}};
  return j;
}

inline std::string lfr1_file_name(Split split, ClassLabel label) {
  return to_string(split) + "_" + to_string(label) + ".lfr1";
}

/// Writes one LFR1 file per (split, label) present, plus index.json. File
/// contents depend only on the samples, never on timing.
inline std::vector<fs::path> export_samples(const fs::path& out_dir, const std::vector<SampleTensor>& samples,
                                            std::size_t rows, std::size_t cols) {
  fs::create_directories(out_dir);
  std::map<std::pair<Split, ClassLabel>, std::vector<const SampleTensor*>> groups;
  for (const auto& s : samples) {
    if (s.rows != rows || s.cols != cols) throw Error("export: sample shape differs from " + std::to_string(rows) + "x" + std::to_string(cols));
    groups[{s.split, s.label}].push_back(&s);
  }
  json files = json::array();
  json entries = json::array();
  std::vector<fs::path> written;
  for (const auto& [key, group] : groups) {
    io::Lfr1File f;
    f.rows = static_cast<std::uint32_t>(rows);
    f.cols = static_cast<std::uint32_t>(cols);
    f.label_code = static_cast<std::uint8_t>(key.second);
    for (std::size_t i = 0; i < group.size(); ++i) {
      f.samples.push_back(group[i]->data);
      entries.push_back({{"file", lfr1_file_name(key.first, key.second)},
                         {"index", i},
                         {"class_label", to_string(key.second)},
                         {"label_code", static_cast<int>(key.second)},
                         {"split", to_string(key.first)},
                         {"recording_id", group[i]->recording_id},
                         {"start_frame", group[i]->start_frame}});
    }
    const auto path = out_dir / lfr1_file_name(key.first, key.second);
    try {
      io::write_lfr1(path, f);
    } catch (const std::exception& ex) {
      throw StageError(path.string(), "export", ex.what());
    }
    files.push_back({{"file", path.filename().string()},
                     {"class_label", to_string(key.second)},
                     {"label_code", static_cast<int>(key.second)},
                     {"split", to_string(key.first)},
                     {"count", group.size()}});
    written.push_back(path);
  }
  json index{{"format", "LFR1"},
             {"rows", rows},
             {"cols", cols},
             {"label_codes", {{"W", 0}, {"X", 1}, {"Y", 2}, {"Z", 3}, {"Noise", 4}}},
             {"files", files},
             {"samples", entries}};
  write_json(out_dir / "index.json", index);
  written.push_back(out_dir / "index.json");
  return written;
}

}  // namespace lofar::pipeline
