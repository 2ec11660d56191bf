#include "pushframe/forward.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "pushframe/error.hpp"
#include "pushframe/stream.hpp"
#include "pushframe/util.hpp"

namespace pushframe {

namespace {

enum NoiseTag : std::uint64_t { kShotPositive = 1, kShotComplement = 2, kRead = 3 };

// dst[j] = src(j - shift) for a height x channels column, linear
// interpolation, zero outside.
void shift_rows(std::span<const double> src, std::size_t height, std::size_t channels, double shift,
                std::span<double> dst) {
  if (shift == 0.0) {
    std::copy(src.begin(), src.end(), dst.begin());
    return;
  }
  const auto h = static_cast<long long>(height);
  for (std::size_t j = 0; j < height; ++j) {
    const double y = static_cast<double>(j) - shift;
    const double fl = std::floor(y);
    const double f = y - fl;
    const auto y0 = static_cast<long long>(fl);
    for (std::size_t c = 0; c < channels; ++c) {
      const double a = (y0 >= 0 && y0 < h) ? src[static_cast<std::size_t>(y0) * channels + c] : 0.0;
      const double b = (f != 0.0 && y0 + 1 >= 0 && y0 + 1 < h) ? src[static_cast<std::size_t>(y0 + 1) * channels + c] : 0.0;
      dst[j * channels + c] = f == 0.0 ? a : a + f * (b - a);
    }
  }
}

std::vector<double> gaussian_kernel(double sigma_px) {
  const auto radius = static_cast<int>(std::ceil(4.0 * sigma_px));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int d = -radius; d <= radius; ++d) {
    k[d + radius] = std::exp(-0.5 * (d * d) / (sigma_px * sigma_px));
    sum += k[d + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable convolution with zero padding: light leaving the frame is lost.
void blur_in_place(Image& img, const std::vector<double>& kernel) {
  const auto radius = static_cast<long long>(kernel.size() / 2);
  const std::size_t rows = img.rows(), cols = img.cols(), ch = img.channels();
  std::vector<double> tmp(img.size(), 0.0);
  auto data = img.data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      for (long long d = -radius; d <= radius; ++d) {
        const long long cc = static_cast<long long>(c) + d;
        if (cc < 0 || cc >= static_cast<long long>(cols)) continue;
        const double w = kernel[d + radius];
        const double* s = &data[(r * cols + static_cast<std::size_t>(cc)) * ch];
        double* o = &tmp[(r * cols + c) * ch];
        for (std::size_t k = 0; k < ch; ++k) o[k] += w * s[k];
      }
    }
  }
  std::fill(data.begin(), data.end(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (long long d = -radius; d <= radius; ++d) {
      const long long rr = static_cast<long long>(r) + d;
      if (rr < 0 || rr >= static_cast<long long>(rows)) continue;
      const double w = kernel[d + radius];
      const double* s = &tmp[static_cast<std::size_t>(rr) * cols * ch];
      double* o = &data[r * cols * ch];
      for (std::size_t k = 0; k < cols * ch; ++k) o[k] += w * s[k];
    }
  }
}

// Precomputed illumination x mirror reflectance maps for both polarities.
class FrameRenderer {
 public:
  FrameRenderer(const PatternSpec& pattern, const OpticsConfig& cfg, std::size_t channels)
      : n_(pattern.order()), s_(static_cast<std::size_t>(cfg.supersample)), ch_(channels), cfg_(cfg) {
    const std::size_t side = n_ * s_;
    positive_.resize(side * side);
    complement_.resize(side * side);
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) {
        const double g = cfg.illumination.gain((static_cast<double>(r) + 0.5) / static_cast<double>(s_),
                                               (static_cast<double>(c) + 0.5) / static_cast<double>(s_), n_);
        const bool on = pattern.on(r / s_, c / s_);
        positive_[r * side + c] = g * (on ? 1.0 : cfg.contrast_floor);
        complement_[r * side + c] = g * (on ? cfg.contrast_floor : 1.0);
      }
    }
    if (cfg.blur_sigma > 0.0) kernel_ = gaussian_kernel(cfg.blur_sigma * static_cast<double>(s_));
  }

  // columns: n pattern columns, each n rows x C (channel fastest).
  Image render(std::span<const double> columns, Polarity polarity) const {
    const std::size_t side = n_ * s_;
    Image frame(side, side, ch_);
    const auto& gain = polarity == Polarity::positive ? positive_ : complement_;
    for (std::size_t r = 0; r < side; ++r) {
      const std::size_t j = r / s_;
      for (std::size_t c = 0; c < side; ++c) {
        const std::size_t i = c / s_;
        const double g = gain[r * side + c];
        const double* v = &columns[(i * n_ + j) * ch_];
        for (std::size_t k = 0; k < ch_; ++k) frame.at(r, c, k) = v[k] * g + cfg_.stray_light;
      }
    }
    if (!kernel_.empty()) blur_in_place(frame, kernel_);
    return frame;
  }

 private:
  std::size_t n_, s_, ch_;
  const OpticsConfig& cfg_;
  std::vector<double> positive_, complement_;
  std::vector<double> kernel_;
};

// Scene columns seen by each pattern column at step t: x = t(1 + d) - i,
// shifted down by shear * x.
void gather_columns(const SceneImage& scene, const OpticsConfig& cfg, std::size_t t, std::vector<double>& columns) {
  const std::size_t n = scene.height(), ch = scene.channels();
  const double w = static_cast<double>(scene.width());
  columns.assign(n * n * ch, 0.0);
  std::vector<double> col(n * ch);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(t) * (1.0 + cfg.step_error) - static_cast<double>(i);
    if (x <= -1.0 || x >= w) continue;
    column_at(scene, x, col);
    shift_rows(col, n, ch, cfg.shear_rows_per_column * x, std::span<double>(columns).subspan(i * n * ch, n * ch));
  }
}

double shot_sample(double mean, const OpticsConfig& cfg, NoiseTag tag, std::size_t t, std::size_t i, std::size_t c) {
  if (!(mean > 0.0)) return 0.0;
  KeyedRng rng = KeyedRng::from(cfg.seed, tag, t, i, c);
  std::poisson_distribution<long long> shot(mean * cfg.photons_per_unit);
  return static_cast<double>(shot(rng)) / cfg.photons_per_unit;
}

void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) throw ValidationError(fmt::format("optics.{} must be finite", field));
}

}  // namespace

std::string_view to_string(IlluminationMode m) {
  switch (m) {
    case IlluminationMode::uniform: return "uniform";
    case IlluminationMode::column_gains: return "column-gains";
    case IlluminationMode::separable: return "separable";
    case IlluminationMode::vignette: return "vignette";
  }
  return "unknown";
}

IlluminationMode parse_illumination_mode(std::string_view s) {
  if (s == "uniform") return IlluminationMode::uniform;
  if (s == "column-gains") return IlluminationMode::column_gains;
  if (s == "separable") return IlluminationMode::separable;
  if (s == "vignette") return IlluminationMode::vignette;
  throw ValidationError(fmt::format("unknown illumination mode '{}'", s));
}

IlluminationField IlluminationField::columns(std::vector<double> gains) {
  IlluminationField f;
  f.mode = IlluminationMode::column_gains;
  f.column_gains = std::move(gains);
  return f;
}

IlluminationField IlluminationField::separable(std::vector<double> rows, std::vector<double> cols) {
  IlluminationField f;
  f.mode = IlluminationMode::separable;
  f.row_gains = std::move(rows);
  f.column_gains = std::move(cols);
  return f;
}

IlluminationField IlluminationField::vignette(double center_row, double center_col, double sigma, double floor) {
  IlluminationField f;
  f.mode = IlluminationMode::vignette;
  f.center_row = center_row;
  f.center_col = center_col;
  f.sigma = sigma;
  f.floor = floor;
  return f;
}

double IlluminationField::gain(double row, double col, std::size_t n) const {
  const auto index = [n](double v) { return std::min(static_cast<std::size_t>(std::max(v, 0.0)), n - 1); };
  switch (mode) {
    case IlluminationMode::uniform:
      return 1.0;
    case IlluminationMode::column_gains:
      return column_gains[index(col)];
    case IlluminationMode::separable:
      return row_gains[index(row)] * column_gains[index(col)];
    case IlluminationMode::vignette: {
      const double nn = static_cast<double>(n);
      const double dr = row / nn - center_row, dc = col / nn - center_col;
      return floor + (1.0 - floor) * std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
    }
  }
  return 1.0;
}

void IlluminationField::validate(std::size_t n) const {
  auto check = [n](const std::vector<double>& g, const char* what) {
    if (g.size() != n) throw ValidationError(fmt::format("illumination {} must have {} entries, got {}", what, n, g.size()));
    for (double v : g)
      if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(fmt::format("illumination {} must be positive", what));
  };
  switch (mode) {
    case IlluminationMode::uniform:
      break;
    case IlluminationMode::column_gains:
      check(column_gains, "column gains");
      break;
    case IlluminationMode::separable:
      check(row_gains, "row gains");
      check(column_gains, "column gains");
      break;
    case IlluminationMode::vignette:
      if (!(floor > 0.0 && floor <= 1.0)) throw ValidationError("illumination vignette floor must be in (0, 1]");
      if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("illumination vignette sigma must be positive");
      if (!std::isfinite(center_row) || !std::isfinite(center_col)) throw ValidationError("illumination vignette center must be finite");
      break;
  }
}

void OpticsConfig::validate(std::size_t n) const {
  require_finite(contrast_floor, "contrast_floor");
  require_finite(blur_sigma, "blur_sigma");
  require_finite(step_error, "step_error");
  require_finite(stray_light, "stray_light");
  require_finite(read_noise, "read_noise");
  require_finite(photons_per_unit, "photons_per_unit");
  require_finite(shear_rows_per_column, "shear_rows_per_column");
  if (contrast_floor < 0.0 || contrast_floor >= 0.5) throw ValidationError("optics.contrast_floor must be in [0, 0.5)");
  if (blur_sigma < 0.0) throw ValidationError("optics.blur_sigma must be >= 0");
  if (step_error <= -1.0) throw ValidationError("optics.step_error must be > -1");
  if (stray_light < 0.0) throw ValidationError("optics.stray_light must be >= 0");
  if (read_noise < 0.0) throw ValidationError("optics.read_noise must be >= 0");
  if (!(photons_per_unit > 0.0)) throw ValidationError("optics.photons_per_unit must be > 0");
  if (supersample < 1) throw ValidationError("optics.supersample must be >= 1");
  illumination.validate(n);
}

std::string OpticsConfig::canonical() const {
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_double(v[k]);
    return s;
  };
  std::string out;
  out += "blur_sigma=" + format_double(blur_sigma) + "\n";
  out += "contrast_floor=" + format_double(contrast_floor) + "\n";
  out += fmt::format("illumination={}\n", to_string(illumination.mode));
  out += "illumination.center_col=" + format_double(illumination.center_col) + "\n";
  out += "illumination.center_row=" + format_double(illumination.center_row) + "\n";
  out += "illumination.column_gains=" + list(illumination.column_gains) + "\n";
  out += "illumination.floor=" + format_double(illumination.floor) + "\n";
  out += "illumination.row_gains=" + list(illumination.row_gains) + "\n";
  out += "illumination.sigma=" + format_double(illumination.sigma) + "\n";
  out += "photons_per_unit=" + format_double(photons_per_unit) + "\n";
  out += "read_noise=" + format_double(read_noise) + "\n";
  out += fmt::format("readout={}\n", to_string(readout));
  out += fmt::format("seed={}\n", seed);
  out += "shear_rows_per_column=" + format_double(shear_rows_per_column) + "\n";
  out += fmt::format("shot_noise={}\n", shot_noise ? "true" : "false");
  out += "step_error=" + format_double(step_error) + "\n";
  out += "stray_light=" + format_double(stray_light) + "\n";
  out += fmt::format("supersample={}\n", supersample);
  return out;
}

std::string OpticsConfig::digest_hex() const { return hex64(fnv1a64(canonical())); }

Image render_frame(const SceneImage& scene, const PatternSpec& pattern, const OpticsConfig& cfg, std::size_t t,
                   Polarity polarity) {
  const std::size_t n = pattern.order();
  if (scene.height() != n) throw ValidationError(fmt::format("scene height {} != pattern order {}", scene.height(), n));
  cfg.validate(n);
  const std::size_t steps = scene.width() + n - 1;
  if (t >= steps) throw ValidationError(fmt::format("render_frame: step {} outside [0, {})", t, steps));
  FrameRenderer renderer(pattern, cfg, scene.channels());
  std::vector<double> columns;
  gather_columns(scene, cfg, t, columns);
  return renderer.render(columns, polarity);
}

std::vector<double> integrate_columns(const Image& frame, std::size_t supersample) {
  if (supersample == 0 || frame.cols() % supersample != 0 || frame.rows() % supersample != 0) {
    throw ValidationError(fmt::format("integrate_columns: frame {}x{} is not a multiple of supersample {}", frame.rows(),
                                      frame.cols(), supersample));
  }
  const std::size_t n = frame.cols() / supersample, ch = frame.channels();
  std::vector<double> out(n * ch, 0.0);
  for (std::size_t r = 0; r < frame.rows(); ++r)
    for (std::size_t c = 0; c < frame.cols(); ++c)
      for (std::size_t k = 0; k < ch; ++k) out[(c / supersample) * ch + k] += frame.at(r, c, k);
  const double norm = 1.0 / static_cast<double>(supersample * supersample);
  for (double& v : out) v *= norm;
  return out;
}

double noisy_sum(double clean, const OpticsConfig& cfg, std::size_t t, std::size_t i, std::size_t c) {
  double v = clean;
  if (cfg.shot_noise) v = shot_sample(v, cfg, kShotPositive, t, i, c);
  if (cfg.read_noise > 0.0) {
    KeyedRng rng = KeyedRng::from(cfg.seed, kRead, t, i, c);
    std::normal_distribution<double> read(0.0, cfg.read_noise);
    v += read(rng);
  }
  return v;
}

SimulationResult simulate(const SceneImage& scene, const PatternSpec& pattern, const OpticsConfig& cfg,
                          const SimulateOptions& opts) {
  const std::size_t n = pattern.order();
  if (scene.height() != n) {
    throw ValidationError(fmt::format("scene height {} != pattern order {} (resample first)", scene.height(), n));
  }
  cfg.validate(n);
  if (opts.keep_frames && cfg.readout == Readout::differential) {
    throw ValidationError("diagnostic frames are only available with binary readout");
  }
  const std::size_t ch = scene.channels();
  const auto s = static_cast<std::size_t>(cfg.supersample);
  StreamMeta meta{n, scene.width(), scene.width() + n - 1, ch, cfg.readout, pattern.digest_hex(), cfg.digest_hex()};
  SimulationResult result{MeasurementStream(meta), {}};
  if (opts.keep_frames) result.frames.resize(meta.steps);

  const FrameRenderer renderer(pattern, cfg, ch);
  MeasurementStream& stream = result.stream;
  parallel_for(meta.steps, opts.workers, [&](std::size_t t) {
    std::vector<double> columns;
    gather_columns(scene, cfg, t, columns);
    Image frame = renderer.render(columns, Polarity::positive);
    const std::vector<double> pos = integrate_columns(frame, s);
    if (cfg.readout == Readout::binary) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < ch; ++c) stream.at(t, i, c) = noisy_sum(pos[i * ch + c], cfg, t, i, c);
    } else {
      const std::vector<double> neg = integrate_columns(renderer.render(columns, Polarity::complement), s);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < ch; ++c) {
          double a = pos[i * ch + c], b = neg[i * ch + c];
          if (cfg.shot_noise) {
            a = shot_sample(a, cfg, kShotPositive, t, i, c);
            b = shot_sample(b, cfg, kShotComplement, t, i, c);
          }
          double v = a - b;
          if (cfg.read_noise > 0.0) {
            KeyedRng rng = KeyedRng::from(cfg.seed, kRead, t, i, c);
            std::normal_distribution<double> read(0.0, cfg.read_noise);
            v += read(rng);
          }
          stream.at(t, i, c) = v;
        }
      }
    }
    if (opts.frame_sink) opts.frame_sink(t, frame);
    if (opts.keep_frames) result.frames[t] = std::move(frame);
  });
  return result;
}

CalibrationData white_calibration(const PatternSpec& pattern, const OpticsConfig& cfg_in, std::size_t channels) {
  if (channels != 1 && channels != 3) throw ValidationError("calibration channels must be 1 or 3");
  const std::size_t n = pattern.order();
  OpticsConfig cfg = cfg_in;
  cfg.read_noise = 0.0;
  cfg.shot_noise = false;
  cfg.validate(n);
  // One channel is rendered; the optics are achromatic so every channel shares it.
  const FrameRenderer renderer(pattern, cfg, 1);
  const std::vector<double> ones(n * n, 1.0);
  Image frame = renderer.render(ones, Polarity::positive);
  const auto s = static_cast<std::size_t>(cfg.supersample);
  const std::vector<double> sums = integrate_columns(frame, s);

  CalibrationData calib;
  calib.order = n;
  calib.channels = channels;
  calib.supersample = cfg.supersample;
  calib.white_index = pattern.white_column();
  double mean = 0.0;
  for (double v : sums) mean += v;
  mean /= static_cast<double>(n);
  for (std::size_t c = 0; c < channels; ++c) {
    calib.weights.insert(calib.weights.end(), sums.begin(), sums.end());
    calib.reference.push_back(mean);
  }
  Image white(frame.rows(), frame.cols(), channels);
  Image gain(frame.rows(), frame.cols(), channels, 1.0);
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    for (std::size_t c = 0; c < frame.cols(); ++c) {
      const bool on = pattern.on(r / s, c / s);
      for (std::size_t k = 0; k < channels; ++k) {
        white.at(r, c, k) = frame.at(r, c);
        if (on) gain.at(r, c, k) = frame.at(r, c);
      }
    }
  }
  calib.white_frame = std::move(white);
  calib.gain_map = std::move(gain);
  calib.pattern_digest = pattern.digest_hex();
  calib.validate();
  return calib;
}

}  // namespace pushframe
