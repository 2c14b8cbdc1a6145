// lofar_cli: command-line front end for the LOFAR feature pipeline.
//
//   lofar_cli decompose <wav>                      x_high / x_low / residual WAVs
//   lofar_cli lofar <wav> [--raw]                  LOFAR image + sliced samples
//   lofar_cli enhance <wav> --noise <wav>...       enhanced sample images + samples
//   lofar_cli dataset build <manifest.json>        full batch run -> LFR1 + index.json + report.json
//   lofar_cli dataset synth                        seeded 4-class synthetic corpus
//   lofar_cli dataset mix <sig> <noise> --snr-db   SNR-controlled mix
//   lofar_cli plot <file.lfr1|file.wav>            grayscale PGM images
//
// Global flags: --config <json> --out <dir> --threads <n> --seed <n>.
// Exit status: 0 ok, 1 usage or I/O error, 2 stage error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lofar/corpus.hpp"
#include "lofar/image.hpp"
#include "lofar/pipeline.hpp"
#include "lofar/rssd.hpp"
#include "lofar/synth.hpp"
#include "lofar/tensor_io.hpp"
#include "lofar/wav.hpp"

namespace {

namespace fs = std::filesystem;
using namespace lofar;
using pipeline::PipelineConfig;

struct Globals {
  std::string config_path;
  std::string out_dir = "out";
  unsigned threads = 1;
  std::uint64_t seed = 1;

  PipelineConfig config() const {
    return config_path.empty() ? PipelineConfig{} : pipeline::load_config(config_path);
  }
  fs::path out() const {
    fs::create_directories(out_dir);
    return out_dir;
  }
};

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

SampleBuffer load(const std::string& path) {
  try {
    return wav::ingest_wav(path);
  } catch (const std::exception& e) {
    throw StageError(stem(path), "ingest", e.what());
  }
}

io::Lfr1File samples_file(const Spectrogram& whole, const PipelineConfig& cfg,
                          const std::optional<linespec::Thresholds>& th, unsigned threads) {
  io::Lfr1File f;
  f.rows = static_cast<std::uint32_t>(whole.rows());
  f.cols = static_cast<std::uint32_t>(cfg.frames_per_sample);
  for (auto s : pipeline::sample_starts(whole.cols(), cfg)) {
    const auto map = pipeline::render_sample(whole.columns(s, cfg.frames_per_sample), cfg, th, threads);
    f.samples.emplace_back(map.data().begin(), map.data().end());
  }
  return f;
}

int cmd_decompose(const Globals& g, const std::string& input) {
  const auto cfg = g.config();
  auto buf = load(input);
  if (cfg.normalize_input_peak) buf = pipeline::peak_normalized(buf);
  rssd::SignalDecomposition parts;
  try {
    parts = rssd::decompose_signal(buf.samples(), cfg.rssd.mca(), g.threads);
  } catch (const std::exception& e) {
    throw StageError(stem(input), "rssd", e.what());
  }
  const auto dir = g.out();
  const auto rate = static_cast<std::uint32_t>(buf.sample_rate_hz());
  const auto name = stem(input);
  wav::write_wav(dir / (name + "_high.wav"), {parts.x_high}, rate, wav::SampleFormat::Float32);
  wav::write_wav(dir / (name + "_low.wav"), {parts.x_low}, rate, wav::SampleFormat::Float32);
  wav::write_wav(dir / (name + "_residual.wav"), {parts.residual}, rate, wav::SampleFormat::Float32);

  const auto edges = rssd::default_band_edges(buf.sample_rate_hz());
  auto bands = [&](const RealVector& x) {
    try {
      return rssd::band_energy_percentages(SampleBuffer(x, buf.sample_rate_hz()), edges);
    } catch (const std::exception&) {
      return RealVector(edges.size() - 1, 0.0);
    }
  };
  pipeline::json summary{{"input", input},
                         {"sample_rate_hz", buf.sample_rate_hz()},
                         {"samples", buf.size()},
                         {"band_edges_hz", edges},
                         {"band_energy_percent",
                          {{"original", bands(buf.vector())}, {"high", bands(parts.x_high)}, {"low", bands(parts.x_low)}}},
                         {"objective_first", parts.objective_trace.front()},
                         {"objective_last", parts.objective_trace.back()}};
  pipeline::write_json(dir / (name + "_decompose.json"), summary);
  std::cout << "decompose: " << name << " -> " << dir.string() << '\n';
  return 0;
}

int cmd_lofar(const Globals& g, const std::string& input, bool raw) {
  auto cfg = g.config();
  if (raw) cfg.rssd.enabled = false;
  cfg.enhancement = false;
  const auto buf = load(input);
  SampleBuffer high;
  try {
    high = pipeline::high_resonance(buf, cfg, g.threads);
  } catch (const std::exception& e) {
    throw StageError(stem(input), "rssd", e.what());
  }
  const auto linear = pipeline::linear_spectrogram(high, cfg);
  const auto dir = g.out();
  const auto name = stem(input);
  image::write_pgm(dir / (name + "_lofar.pgm"), to_lofar(linear));
  const auto f = samples_file(linear, cfg, std::nullopt, g.threads);
  io::write_lfr1(dir / (name + "_lofar.lfr1"), f);
  std::cout << "lofar: " << linear.cols() << " frames, " << f.samples.size() << " samples\n";
  return 0;
}

int cmd_enhance(const Globals& g, const std::string& input, const std::vector<std::string>& noise) {
  auto cfg = g.config();
  cfg.enhancement = true;
  std::vector<Spectrogram> noise_maps;
  for (const auto& path : noise) {
    noise_maps.push_back(pipeline::linear_spectrogram(pipeline::high_resonance(load(path), cfg, g.threads), cfg));
  }
  linespec::Thresholds th;
  try {
    th = pipeline::calibrate(noise_maps, cfg, g.threads);
  } catch (const std::exception& e) {
    throw StageError("<noise pool>", "calibrate", e.what());
  }
  const auto linear = pipeline::linear_spectrogram(pipeline::high_resonance(load(input), cfg, g.threads), cfg);
  const auto dir = g.out();
  const auto name = stem(input);
  const auto f = samples_file(linear, cfg, th, g.threads);
  io::write_lfr1(dir / (name + "_enhanced.lfr1"), f);
  for (std::size_t i = 0; i < f.samples.size(); ++i) {
    RealVector cells(f.samples[i].begin(), f.samples[i].end());
    const auto map = Spectrogram::from_rows(f.rows, f.cols, std::move(cells));
    image::write_pgm(dir / (name + "_enhanced_" + std::to_string(i) + ".pgm"), map);
  }
  std::cout << "enhance: epsilon " << th.epsilon << ", gamma " << th.gamma << ", " << f.samples.size() << " samples\n";
  return 0;
}

int cmd_build(const Globals& g, const std::string& manifest_path, bool strict) {
  const auto cfg = g.config();
  const auto manifest = pipeline::load_manifest(manifest_path);
  manifest.validate(strict);
  auto result = pipeline::run_pipeline(manifest, cfg, {g.threads});
  const auto dir = g.out();
  pipeline::export_samples(dir, result.samples, cfg.rows(), cfg.frames_per_sample);
  auto report = pipeline::report_to_json(result.report);
  report["config"] = pipeline::config_to_json(cfg);
  pipeline::write_json(dir / "report.json", report);
  for (const auto& [key, n] : result.report.samples_per_class_split) std::cout << key << ": " << n << '\n';
  for (const auto& m : result.report.missing_class_splits) std::cerr << "warning: no recordings for " << m << '\n';
  return 0;
}

int cmd_synth(const Globals& g, double seconds, std::size_t per_class, std::size_t noise) {
  corpus::CorpusSpec spec;
  spec.seconds = seconds;
  spec.recordings_per_class_split = per_class;
  spec.noise_recordings = noise;
  const auto m = corpus::write_synthetic_corpus(g.out(), spec, g.seed);
  std::cout << "synth: " << m.entries.size() << " recordings -> " << (fs::path(g.out_dir) / "manifest.json").string() << '\n';
  return 0;
}

int cmd_mix(const Globals& g, const std::string& signal, const std::string& noise, double snr_db,
            const std::string& name) {
  const auto s = load(signal);
  const auto n = load(noise);
  if (s.sample_rate_hz() != n.sample_rate_hz()) throw Error("mix: sample rates differ");
  auto mixed = synth::mix_at_snr(s.samples(), n.samples(), snr_db);
  double peak = 0.0;
  for (double v : mixed) peak = std::max(peak, std::abs(v));
  if (peak > 1.0) {
    for (double& v : mixed) v /= peak;
  }
  const auto path = g.out() / (name.empty() ? stem(signal) + "_snr" + std::to_string(static_cast<int>(snr_db)) + ".wav" : name);
  wav::write_wav(path, {mixed}, static_cast<std::uint32_t>(s.sample_rate_hz()));
  std::cout << "mix: " << path.string() << '\n';
  return 0;
}

int cmd_plot(const Globals& g, const std::string& input) {
  const auto dir = g.out();
  const auto name = stem(input);
  if (fs::path(input).extension() == ".lfr1") {
    const auto f = io::read_lfr1(input);
    std::vector<Spectrogram> maps;
    std::vector<fs::path> paths;
    for (std::size_t i = 0; i < f.samples.size(); ++i) {
      maps.push_back(Spectrogram::from_rows(f.rows, f.cols, RealVector(f.samples[i].begin(), f.samples[i].end())));
      paths.push_back(dir / (name + "_" + std::to_string(i) + ".pgm"));
    }
    image::emit_plots(maps, paths);
    std::cout << "plot: " << maps.size() << " images\n";
    return 0;
  }
  const auto cfg = g.config();
  image::write_pgm(dir / (name + ".pgm"), to_lofar(pipeline::linear_spectrogram(load(input), cfg)));
  std::cout << "plot: 1 image\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LOFAR feature pipeline for ship-radiated noise"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON pipeline config")->check(CLI::ExistingFile);
  app.add_option("--out", g.out_dir, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::Range(1u, 256u));
  app.add_option("--seed", g.seed, "Seed for synthetic data");

  std::string input, noise_input, manifest;
  std::vector<std::string> noise;
  bool raw = false, strict = false;
  double seconds = 2.0, snr_db = 0.0;
  std::size_t per_class = 1, noise_count = 2;
  std::string mix_name;

  auto* dec = app.add_subcommand("decompose", "Split a recording into resonance components");
  dec->add_option("input", input, "WAV file")->required()->check(CLI::ExistingFile);

  auto* lof = app.add_subcommand("lofar", "LOFAR spectrum of the high-resonance component");
  lof->add_option("input", input, "WAV file")->required()->check(CLI::ExistingFile);
  lof->add_flag("--raw", raw, "Skip the resonance decomposition");

  auto* enh = app.add_subcommand("enhance", "Line-spectrum enhanced LOFAR samples");
  enh->add_option("input", input, "WAV file")->required()->check(CLI::ExistingFile);
  enh->add_option("--noise", noise, "Noise-only WAV files for calibration")->required()->check(CLI::ExistingFile);

  auto* ds = app.add_subcommand("dataset", "Dataset construction");
  ds->require_subcommand(1);
  auto* build = ds->add_subcommand("build", "Run the batch pipeline on a manifest");
  build->add_option("manifest", manifest, "manifest.json")->required()->check(CLI::ExistingFile);
  build->add_flag("--strict", strict, "Require every class in both splits");
  auto* syn = ds->add_subcommand("synth", "Write a synthetic 4-class corpus");
  syn->add_option("--seconds", seconds, "Seconds per recording")->check(CLI::PositiveNumber);
  syn->add_option("--per-class", per_class, "Recordings per class and split");
  syn->add_option("--noise-count", noise_count, "Noise recordings");
  auto* mix = ds->add_subcommand("mix", "Mix a signal with noise at a given SNR");
  mix->add_option("signal", input, "Signal WAV")->required()->check(CLI::ExistingFile);
  mix->add_option("noise", noise_input, "Noise WAV")->required()->check(CLI::ExistingFile);
  mix->add_option("--snr-db", snr_db, "Target SNR in dB")->required();
  mix->add_option("--name", mix_name, "Output file name");

  auto* plot = app.add_subcommand("plot", "Grayscale images of LFR1 samples or a WAV's LOFAR map");
  plot->add_option("input", input, "LFR1 or WAV file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dec) return cmd_decompose(g, input);
    if (*lof) return cmd_lofar(g, input, raw);
    if (*enh) return cmd_enhance(g, input, noise);
    if (*build) return cmd_build(g, manifest, strict);
    if (*syn) return cmd_synth(g, seconds, per_class, noise_count);
    if (*mix) return cmd_mix(g, input, noise_input, snr_db, mix_name);
    if (*plot) return cmd_plot(g, input);
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
