#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pushframe/error.hpp"
#include "pushframe/netpbm.hpp"
#include "pushframe/raw.hpp"

namespace pushframe::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kFramesMagic = "# pushframe-frames v1";
constexpr std::string_view kReportMagic = "# pushframe-report v1";
constexpr std::string_view kSweepMagic = "# pushframe-sweep v1";

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void write_text(const std::string& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  os << text;
  if (!os) throw FormatError("failed writing " + path);
}

// Options shared by every command that builds an ExperimentConfig.
struct ConfigArgs {
  std::string file;
  std::vector<std::string> sets;
  unsigned workers = 0;
  CLI::Option* workers_opt = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "Experiment config file (key = value lines)");
    app->add_option("--set", sets, "Override one config key, key=value (repeatable)");
    workers_opt = app->add_option("--workers", workers, "Worker threads, 0 = all cores (never changes results)");
  }

  // defaults -> presets -> config file -> command flags -> --set
  ExperimentConfig build(const std::vector<std::pair<std::string, std::string>>& presets,
                         const std::vector<std::pair<std::string, std::string>>& flags) const {
    ExperimentConfig cfg;
    for (const auto& [k, v] : presets) cfg.set(k, v);
    if (!file.empty()) apply_config_file(cfg, file);
    for (const auto& [k, v] : flags) cfg.set(k, v);
    for (const auto& s : sets) apply_override(cfg, s);
    if (workers_opt->count() > 0) cfg.workers = workers;
    cfg.validate();
    return cfg;
  }
};

// A single-channel calibration applies to every channel (achromatic optics).
CalibrationData broadcast(CalibrationData calib, std::size_t channels) {
  if (calib.channels == channels || calib.channels != 1) return calib;
  std::vector<double> w;
  for (std::size_t c = 0; c < channels; ++c) w.insert(w.end(), calib.weights.begin(), calib.weights.end());
  calib.weights = std::move(w);
  calib.reference.assign(channels, calib.reference.front());
  calib.channels = channels;
  return calib;
}

double max_value(const Image& img) {
  double m = 0.0;
  for (double v : img.data()) m = std::max(m, v);
  return m;
}

// Bound on any frame value: scene peak times peak illumination, plus stray
// light. Blur cannot exceed it.
double frame_scale(const SceneImage& scene, const PatternSpec& pattern, const OpticsConfig& optics) {
  const std::size_t n = pattern.order();
  const auto s = static_cast<double>(optics.supersample);
  double gain = 0.0;
  for (std::size_t r = 0; r < n * static_cast<std::size_t>(optics.supersample); ++r)
    for (std::size_t c = 0; c < n * static_cast<std::size_t>(optics.supersample); ++c)
      gain = std::max(gain, optics.illumination.gain((static_cast<double>(r) + 0.5) / s, (static_cast<double>(c) + 0.5) / s, n));
  const double scale = max_value(scene.pixels()) * gain + optics.stray_light;
  return scale > 0.0 ? scale : 1.0;
}

// Percentile window, so a single hot row (the naive DC term) does not flatten
// the rest of the panel.
Image window(const Image& img) {
  std::vector<double> sorted(img.data().begin(), img.data().end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted[sorted.size() / 100];
  const double hi = sorted[sorted.size() - 1 - sorted.size() / 100];
  const double span = hi > lo ? hi - lo : 1.0;
  Image out = img;
  for (double& v : out.data()) v = std::clamp((v - lo) / span, 0.0, 1.0);
  return out;
}

Image side_by_side(const std::vector<const Image*>& panels, std::size_t gap) {
  std::size_t width = 0;
  for (const Image* p : panels) width += p->cols();
  width += gap * (panels.size() - 1);
  const Image& first = *panels.front();
  Image out(first.rows(), width, first.channels(), 1.0);
  std::size_t x0 = 0;
  for (const Image* p : panels) {
    const Image w = window(*p);
    for (std::size_t r = 0; r < w.rows(); ++r)
      for (std::size_t c = 0; c < w.cols(); ++c)
        for (std::size_t k = 0; k < w.channels(); ++k) out.at(r, x0 + c, k) = w.at(r, c, k);
    x0 += p->cols() + gap;
  }
  return out;
}

std::string report_csv(const std::vector<std::pair<std::string, QualityReport>>& rows, const std::string& label) {
  std::string text = std::string(kReportMagic) + "\n" + label + "," + QualityReport::csv_header() + "\n";
  for (const auto& [name, r] : rows) text += name + "," + r.csv_row() + "\n";
  return text;
}

SceneImage load_truth(const std::string& path, std::size_t n) {
  SceneImage img = load_image(path);
  return img.height() == n ? img : resample_height(img, n);
}

// ---- pattern ----

struct PatternArgs {
  ConfigArgs config;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  int max_run = 0;
  int scale = 0;
  std::string out;
  CLI::Option *n_opt, *seed_opt, *max_run_opt, *scale_opt;

  void attach(CLI::App* app) {
    config.attach(app);
    n_opt = app->add_option("--n", n, "Pattern order (power of two)");
    seed_opt = app->add_option("--seed", seed, "Scramble seed (implies scrambling)");
    max_run_opt = app->add_option("--max-run", max_run, "Longest allowed row run (implies scrambling)");
    scale_opt = app->add_option("--scale", scale, "Mirrors per pattern pixel");
    app->add_option("--out", out, "Pattern file to write")->required();
  }
};

int cmd_pattern(const PatternArgs& a, std::ostream& out) {
  std::vector<std::pair<std::string, std::string>> flags;
  if (a.n_opt->count()) flags.emplace_back("pattern.n", std::to_string(a.n));
  if (a.seed_opt->count()) {
    flags.emplace_back("pattern.seed", std::to_string(a.seed));
    flags.emplace_back("pattern.scramble", "true");
  }
  if (a.max_run_opt->count()) flags.emplace_back("pattern.max_run", std::to_string(a.max_run));
  if (a.scale_opt->count()) flags.emplace_back("pattern.scale", std::to_string(a.scale));
  const ExperimentConfig cfg = a.config.build({}, flags);
  const PatternSpec p = make_pattern(cfg);
  ensure_parent(a.out);
  save_pattern(a.out, p);
  out << fmt::format("pattern order={} scrambled={} seed={} max_row_run={} digest={}\n", p.order(),
                     p.scrambled() ? "yes" : "no", p.seed(), max_row_run(p), p.digest_hex());
  return 0;
}

// ---- simulate ----

struct SimulateArgs {
  ConfigArgs config;
  std::string scene, pattern, out, frames, save_scene;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  CLI::Option *n_opt, *seed_opt;

  void attach(CLI::App* app) {
    config.attach(app);
    app->add_option("--scene", scene, "Scene image (PGM/PPM) or synthetic:<kind>");
    app->add_option("--pattern", pattern, "Pattern file (default: generate from config)");
    n_opt = app->add_option("--n", n, "Pattern order");
    seed_opt = app->add_option("--seed", seed, "Noise seed");
    app->add_option("--out", out, "Measurement stream CSV to write")->required();
    app->add_option("--keep-frames", frames, "Directory for the pre-integration frame stack");
    app->add_option("--save-scene", save_scene, "Also write the (resampled) scene as 16-bit PGM/PPM");
  }
};

PatternSpec pattern_for(const std::string& path, const ExperimentConfig& cfg) {
  if (path.empty()) return make_pattern(cfg);
  PatternSpec p = load_pattern(path);
  if (p.order() != cfg.order) {
    throw ValidationError(fmt::format("pattern file has order {}, config pattern.n is {}", p.order(), cfg.order));
  }
  return p;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  std::vector<std::pair<std::string, std::string>> flags;
  if (!a.scene.empty()) flags.emplace_back("scene.source", a.scene);
  if (a.n_opt->count()) flags.emplace_back("pattern.n", std::to_string(a.n));
  if (a.seed_opt->count()) flags.emplace_back("seed", std::to_string(a.seed));
  ExperimentConfig cfg = a.config.build({}, flags);
  if (!a.pattern.empty()) {
    // The order comes from the pattern file when one is given.
    const PatternSpec probe = load_pattern(a.pattern);
    if (!a.n_opt->count()) cfg.order = probe.order();
  }
  const PatternSpec pattern = pattern_for(a.pattern, cfg);
  const SceneImage scene = make_scene(cfg);
  const std::string digest = cfg.digest_hex();

  SimulateOptions opts;
  opts.workers = cfg.workers;
  FrameStackInfo info;
  if (!a.frames.empty()) {
    if (cfg.optics.readout != Readout::binary) throw ValidationError("--keep-frames needs optics.readout=binary");
    fs::create_directories(a.frames);
    info = {scene.width() + pattern.order() - 1, scene.channels(), cfg.optics.supersample,
            frame_scale(scene, pattern, cfg.optics), pattern.digest_hex(), digest};
    opts.frame_sink = [&](std::size_t t, const Image& frame) { write_frame(a.frames, t, frame, info.scale); };
  }
  SimulationResult sim = simulate(scene, pattern, cfg.optics, opts);
  sim.stream.meta().config_digest = digest;
  ensure_parent(a.out);
  save_stream(a.out, sim.stream);
  if (!a.frames.empty()) write_frame_manifest(a.frames, info);
  if (!a.save_scene.empty()) {
    ensure_parent(a.save_scene);
    save_image(a.save_scene, scene);
  }
  const auto& m = sim.stream.meta();
  out << fmt::format("stream n={} W={} T={} C={} readout={} pattern={} config={}\n", m.order, m.width, m.steps,
                     m.channels, to_string(m.readout), m.pattern_digest, m.config_digest);
  return 0;
}

// ---- calibrate ----

struct CalibrateArgs {
  ConfigArgs config;
  std::string pattern, out;
  std::size_t channels = 1;
  CLI::Option* channels_opt;

  void attach(CLI::App* app) {
    config.attach(app);
    app->add_option("--pattern", pattern, "Pattern file (default: generate from config)");
    channels_opt = app->add_option("--channels", channels, "Channels to calibrate (default scene.channels)");
    app->add_option("--out", out, "Calibration file to write")->required();
  }
};

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out) {
  ExperimentConfig cfg = a.config.build({}, {});
  if (!a.pattern.empty()) cfg.order = load_pattern(a.pattern).order();
  const PatternSpec pattern = pattern_for(a.pattern, cfg);
  const std::size_t channels = a.channels_opt->count() ? a.channels : cfg.synth.channels;
  if (channels != 1 && channels != 3) throw ValidationError("--channels must be 1 or 3");
  CalibrationData calib = white_calibration(pattern, cfg.optics, channels);
  calib.config_digest = cfg.digest_hex();
  ensure_parent(a.out);
  save_calibration(a.out, calib);
  std::string weights;
  for (std::size_t i = 0; i < std::min<std::size_t>(4, calib.order); ++i) weights += fmt::format("{:.4g} ", calib.weight(i, 0));
  out << fmt::format("calibration n={} C={} white_index={} reference={:.6g} W[0..]={}...\n", calib.order, calib.channels,
                     calib.white_index, calib.reference[0], weights);
  return 0;
}

// ---- reconstruct ----

struct ReconstructArgs {
  ConfigArgs config;
  std::string stream, pattern, calib, mode, truth, frames, out, raw, report;
  bool fast = false;
  double shear = 0.0;
  CLI::Option* shear_opt;

  void attach(CLI::App* app) {
    config.attach(app);
    app->add_option("--stream", stream, "Measurement stream CSV");
    app->add_option("--pattern", pattern, "Pattern file")->required();
    app->add_option("--calib", calib, "Calibration file");
    app->add_option("--mode", mode, "naive | flatfield | debiased | 2d (default recon.mode)");
    app->add_flag("--fast", fast, "Use the fast Walsh-Hadamard transform");
    shear_opt = app->add_option("--shear", shear, "Undo a shear of this many rows per column");
    app->add_option("--truth", truth, "Ground-truth image for a quality report");
    app->add_option("--frames", frames, "Frame stack directory (2d mode)");
    app->add_option("--out", out, "Reconstructed image (PGM/PPM, with .meta sidecar)")->required();
    app->add_option("--raw", raw, "Exact raw dump of the reconstruction");
    app->add_option("--report", report, "Quality report CSV (needs --truth)");
  }
};

int cmd_reconstruct(const ReconstructArgs& a, std::ostream& out) {
  std::vector<std::pair<std::string, std::string>> flags;
  if (!a.mode.empty()) flags.emplace_back("recon.mode", a.mode);
  if (a.fast) flags.emplace_back("recon.fast", "true");
  const PatternSpec pattern = load_pattern(a.pattern);
  flags.emplace_back("pattern.n", std::to_string(pattern.order()));
  const ExperimentConfig cfg = a.config.build({}, flags);

  std::optional<CalibrationData> calib;
  if (!a.calib.empty()) calib = load_calibration(a.calib);

  MeasurementStream stream;
  if (cfg.mode == CorrectionMode::corrected_2d) {
    if (a.frames.empty()) throw ValidationError("--mode 2d needs --frames");
    if (!calib) throw ValidationError("--mode 2d needs --calib");
    const FrameStackInfo info = read_frame_manifest(a.frames);
    if (info.pattern_digest != pattern.digest_hex()) {
      throw DigestMismatch(fmt::format("frame stack pattern digest {} does not match pattern {}", info.pattern_digest,
                                       pattern.digest_hex()));
    }
    stream = correct_2d(info.steps, [&](std::size_t t) { return read_frame(a.frames, info, t); }, *calib, pattern,
                        cfg.optics);
    stream.meta().config_digest = info.config_digest;
  } else {
    if (a.stream.empty()) throw ValidationError("--stream is required unless --mode 2d");
    stream = load_stream(a.stream);
    if (calib) calib = broadcast(std::move(*calib), stream.meta().channels);
  }

  const CalibrationData* calib_ptr = (calib && cfg.mode != CorrectionMode::corrected_2d) ? &*calib : nullptr;
  ReconImage recon = reconstruct(stream, pattern, calib_ptr, {.mode = cfg.mode, .use_fast = cfg.fast, .workers = cfg.workers});
  const double shear = a.shear_opt->count() ? a.shear : (cfg.shear_correct ? cfg.optics.shear_rows_per_column : 0.0);
  if (shear != 0.0) recon = shear_correct(recon, shear);

  save_recon(a.out, recon);
  if (!a.raw.empty()) {
    ensure_parent(a.raw);
    write_raw(a.raw, recon.pixels);
  }
  out << fmt::format("reconstruction {}x{}x{} mode={} fast={} interior=[{}, {}) pattern={} config={}\n",
                     recon.pixels.rows(), recon.pixels.cols(), recon.pixels.channels(), to_string(recon.meta.mode),
                     recon.meta.fast ? "yes" : "no", recon.meta.interior_begin, recon.meta.interior_end,
                     recon.meta.pattern_digest, recon.meta.config_digest);

  if (!a.truth.empty()) {
    const SceneImage truth = load_truth(a.truth, pattern.order());
    if (!truth.pixels().same_shape(recon.pixels)) {
      throw ValidationError(fmt::format("truth image is {}x{}x{}, reconstruction is {}x{}x{}", truth.height(),
                                        truth.width(), truth.channels(), recon.pixels.rows(), recon.pixels.cols(),
                                        recon.pixels.channels()));
    }
    QualityReport report = quality_report(recon.pixels, truth.pixels());
    report.pattern_digest = recon.meta.pattern_digest;
    report.config_digest = recon.meta.config_digest;
    out << report.text();
    if (!a.report.empty()) write_text(a.report, report_csv({{std::string(to_string(cfg.mode)), report}}, "mode"));
  } else if (!a.report.empty()) {
    throw ValidationError("--report needs --truth");
  }
  return 0;
}

// ---- sweep ----

struct SweepArgs {
  ConfigArgs config;
  std::string param, out;
  std::vector<std::string> values;

  void attach(CLI::App* app) {
    config.attach(app);
    app->add_option("--param", param, "Config key to vary, e.g. optics.step_error")->required();
    app->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
    app->add_option("--out", out, "Report CSV to write")->required();
  }
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  if (!ExperimentConfig::known(a.param)) {
    throw ValidationError(fmt::format("unknown sweep parameter '{}'", a.param));
  }
  std::vector<std::pair<std::string, QualityReport>> rows;
  for (const std::string& v : a.values) {
    ExperimentConfig cfg = a.config.build({}, {{a.param, v}});
    const PipelineResult r = run_pipeline(cfg);
    rows.emplace_back(a.param + "," + v, r.report);
    out << fmt::format("{}={}  psnr={:.3f} dB  ssim={:.4f}  line={:.4g}\n", a.param, v, r.report.psnr_mean,
                       r.report.ssim.front(), r.report.line_artifact_score);
  }
  std::string text = std::string(kSweepMagic) + "\nparameter,value," + QualityReport::csv_header() + "\n";
  for (const auto& [key, r] : rows) text += key + "," + r.csv_row() + "\n";
  write_text(a.out, text);
  return 0;
}

// ---- demo ----

struct DemoArgs {
  ConfigArgs config;
  std::string out;

  void attach(CLI::App* app) {
    config.attach(app);
    app->add_option("--out", out, "Output directory (default output.dir)");
  }
};

int cmd_demo(const DemoArgs& a, std::ostream& out) {
  // Mild column non-uniformity plus a little read noise on a textured scene.
  std::string gains;
  for (int i = 0; i < 128; ++i) gains += fmt::format("{}{:.6f}", i ? "," : "", 1.0 + 0.08 * std::sin(0.37 * i) + 0.04 * std::cos(1.9 * i));
  const std::vector<std::pair<std::string, std::string>> presets{
      {"pattern.n", "128"},           {"scene.source", "synthetic:sinusoid"},
      {"scene.width", "160"},         {"scene.channels", "3"},
      {"optics.illumination", "column-gains"}, {"optics.illumination.column_gains", gains},
      {"optics.read_noise", "0.02"},  {"optics.supersample", "2"},
      {"seed", "1"}};
  ExperimentConfig identity = a.config.build(presets, {{"recon.mode", "naive"}, {"pattern.scramble", "false"}});
  ExperimentConfig scrambled = a.config.build(presets, {{"recon.mode", "flatfield"}, {"pattern.scramble", "true"}});
  const std::string dir = a.out.empty() ? identity.output_dir : a.out;
  fs::create_directories(dir);

  const PipelineResult ra = run_pipeline(identity);
  const PipelineResult rb = run_pipeline(scrambled);
  const auto path = [&](const std::string& name) { return (fs::path(dir) / name).string(); };
  save_image(path("truth.ppm"), ra.truth);
  save_recon(path("identity_naive.ppm"), ra.recon);
  save_recon(path("scrambled_flatfield.ppm"), rb.recon);
  write_netpbm(path("side_by_side.ppm"), side_by_side({&ra.truth.pixels(), &ra.recon.pixels, &rb.recon.pixels}, 4));
  write_text(path("report.csv"), report_csv({{"identity_naive", ra.report}, {"scrambled_flatfield", rb.report}}, "run"));
  const std::string text = fmt::format(
      "pushframe demo: n=128, {}x{} scene, column-gain illumination, read noise 0.02\n"
      "panels in side_by_side.ppm: truth | identity pattern, naive synthesis | scrambled pattern, flat-field\n\n"
      "[identity_naive] max_row_run={}\n{}\n[scrambled_flatfield] max_row_run={}\n{}",
      ra.truth.height(), ra.truth.width(), max_row_run(ra.pattern), ra.report.text(), max_row_run(rb.pattern),
      rb.report.text());
  write_text(path("report.txt"), text);
  out << text << "outputs in " << dir << "\n";
  return 0;
}

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig& cfg) {
  cfg.validate();
  PatternSpec pattern = make_pattern(cfg);
  SceneImage truth = make_scene(cfg);
  const std::string digest = cfg.digest_hex();
  const bool two_d = cfg.mode == CorrectionMode::corrected_2d;

  std::optional<CalibrationData> calib;
  if (cfg.mode == CorrectionMode::flatfield || two_d) {
    calib = white_calibration(pattern, cfg.optics, truth.channels());
    calib->config_digest = digest;
  }

  MeasurementStream stream;
  if (two_d) {
    // Correct each frame as it is rendered rather than holding the stack.
    const std::size_t n = pattern.order(), steps = truth.width() + n - 1, ch = truth.channels();
    stream = MeasurementStream(StreamMeta{n, truth.width(), steps, ch, Readout::binary, pattern.digest_hex(), digest});
    simulate(truth, pattern, cfg.optics,
             {.frame_sink =
                  [&](std::size_t t, const Image& frame) {
                    const std::vector<double> sums = correct_frame_2d(frame, *calib, pattern);
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t c = 0; c < ch; ++c) stream.at(t, i, c) = noisy_sum(sums[i * ch + c], cfg.optics, t, i, c);
                  },
              .workers = cfg.workers});
  } else {
    SimulateOptions opts;
    opts.workers = cfg.workers;
    stream = simulate(truth, pattern, cfg.optics, opts).stream;
    stream.meta().config_digest = digest;
  }

  ReconImage recon = reconstruct(stream, pattern, cfg.mode == CorrectionMode::flatfield ? &*calib : nullptr,
                                 {.mode = cfg.mode, .use_fast = cfg.fast, .workers = cfg.workers});
  if (cfg.shear_correct) recon = shear_correct(recon, cfg.optics.shear_rows_per_column);
  QualityReport report = quality_report(recon.pixels, truth.pixels());
  report.pattern_digest = pattern.digest_hex();
  report.config_digest = digest;
  return {std::move(pattern), std::move(truth), std::move(stream), std::move(recon), std::move(report)};
}

std::string frame_file_name(std::size_t t, std::size_t channels) {
  return fmt::format("frame_{:05d}.{}", t, channels == 1 ? "pgm" : "ppm");
}

void write_frame(const std::string& dir, std::size_t t, const Image& frame, double scale) {
  Image scaled = frame;
  for (double& v : scaled.data()) v /= scale;
  write_netpbm((fs::path(dir) / frame_file_name(t, frame.channels())).string(), scaled, 65535);
}

void write_frame_manifest(const std::string& dir, const FrameStackInfo& info) {
  std::string text = std::string(kFramesMagic) + "\n";
  text += fmt::format("steps={}\nchannels={}\nsupersample={}\n", info.steps, info.channels, info.supersample);
  text += "scale=" + format_double(info.scale) + "\n";
  text += fmt::format("pattern_digest={}\nconfig_digest={}\n", info.pattern_digest, info.config_digest);
  for (std::size_t t = 0; t < info.steps; ++t) text += "frame=" + frame_file_name(t, info.channels) + "\n";
  write_text((fs::path(dir) / "manifest.txt").string(), text);
}

FrameStackInfo read_frame_manifest(const std::string& dir) {
  const std::string path = (fs::path(dir) / "manifest.txt").string();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open frame manifest " + path);
  std::string line;
  if (!std::getline(is, line) || line != kFramesMagic) throw FormatError(path + ": not a frame manifest", 0);
  std::map<std::string, std::string> kv;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    if (line.compare(0, eq, "frame") != 0) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(fmt::format("{}: manifest missing '{}'", path, key));
    return it->second;
  };
  FrameStackInfo info;
  try {
    info.steps = std::stoull(get("steps"));
    info.channels = std::stoull(get("channels"));
    info.supersample = std::stoi(get("supersample"));
  } catch (const std::logic_error&) {
    throw FormatError(path + ": manifest has a malformed size");
  }
  info.scale = parse_double(get("scale"));
  info.pattern_digest = get("pattern_digest");
  info.config_digest = get("config_digest");
  return info;
}

Image read_frame(const std::string& dir, const FrameStackInfo& info, std::size_t t) {
  Image img = read_netpbm((fs::path(dir) / frame_file_name(t, info.channels)).string()).pixels;
  for (double& v : img.data()) v *= info.scale;
  return img;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"pushframe: coded-mask pushframe imaging simulator and reconstructor", "pushframe"};
  app.require_subcommand(1);
  PatternArgs pattern;
  SimulateArgs simulate_args;
  CalibrateArgs calibrate;
  ReconstructArgs reconstruct_args;
  SweepArgs sweep;
  DemoArgs demo;
  CLI::App* pattern_cmd = app.add_subcommand("pattern", "Generate a Hadamard pattern file");
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Simulate a measurement stream");
  CLI::App* calibrate_cmd = app.add_subcommand("calibrate", "Capture a white calibration through the optics");
  CLI::App* reconstruct_cmd = app.add_subcommand("reconstruct", "Reconstruct an image from a stream");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run the pipeline over a list of parameter values");
  CLI::App* demo_cmd = app.add_subcommand("demo", "Identity/naive versus scrambled/flat-field at n=128");
  pattern.attach(pattern_cmd);
  simulate_args.attach(simulate_cmd);
  calibrate.attach(calibrate_cmd);
  reconstruct_args.attach(reconstruct_cmd);
  sweep.attach(sweep_cmd);
  demo.attach(demo_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (pattern_cmd->parsed()) return cmd_pattern(pattern, out);
    if (simulate_cmd->parsed()) return cmd_simulate(simulate_args, out);
    if (calibrate_cmd->parsed()) return cmd_calibrate(calibrate, out);
    if (reconstruct_cmd->parsed()) return cmd_reconstruct(reconstruct_args, out);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep, out);
    if (demo_cmd->parsed()) return cmd_demo(demo, out);
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DigestMismatch& e) {
    err << "digest mismatch: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

}  // namespace pushframe::cli
