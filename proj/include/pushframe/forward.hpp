#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pushframe/calibration.hpp"
#include "pushframe/image.hpp"
#include "pushframe/pattern.hpp"
#include "pushframe/scene.hpp"
#include "pushframe/stream.hpp"

namespace pushframe {

enum class IlluminationMode { uniform, column_gains, separable, vignette };

std::string_view to_string(IlluminationMode m);
IlluminationMode parse_illumination_mode(std::string_view s);

// Static gain of the optical path over the mask, in pattern-pixel
// coordinates (row, col) in [0, n).
struct IlluminationField {
  IlluminationMode mode = IlluminationMode::uniform;
  std::vector<double> column_gains;  // column_gains and separable modes, length n
  std::vector<double> row_gains;     // separable mode, length n
  // Vignette: floor + (1 - floor) * exp(-d^2 / (2 sigma^2)), positions and
  // sigma as fractions of n.
  double center_row = 0.5;
  double center_col = 0.5;
  double sigma = 0.5;
  double floor = 0.5;

  static IlluminationField uniform() { return {}; }
  static IlluminationField columns(std::vector<double> gains);
  static IlluminationField separable(std::vector<double> rows, std::vector<double> cols);
  static IlluminationField vignette(double center_row, double center_col, double sigma, double floor);

  double gain(double row, double col, std::size_t n) const;
  void validate(std::size_t n) const;
};

struct OpticsConfig {
  double contrast_floor = 0.0;  // reflectance of an "off" mirror, [0, 0.5)
  double blur_sigma = 0.0;      // Gaussian PSF std in pattern pixels
  IlluminationField illumination;
  double step_error = 0.0;  // scene advances 1 + step_error columns per step
  double stray_light = 0.0;  // additive pedestal per supersampled pixel
  double read_noise = 0.0;   // std of additive noise on each column sum
  bool shot_noise = false;
  double photons_per_unit = 1e4;
  int supersample = 4;
  double shear_rows_per_column = 0.0;
  std::uint64_t seed = 0;
  Readout readout = Readout::binary;

  // Throws ValidationError naming the offending field.
  void validate(std::size_t n) const;
  bool noiseless() const noexcept { return read_noise == 0.0 && !shot_noise; }
  std::string canonical() const;
  std::string digest_hex() const;
};

enum class Polarity { positive, complement };

// Supersampled (n*s) x (n*s) x C image of the masked, degraded scene at step
// t, before the column integration.
Image render_frame(const SceneImage& scene, const PatternSpec& pattern, const OpticsConfig& cfg, std::size_t t,
                   Polarity polarity = Polarity::positive);

// Sum each band of s frame columns over all rows, divided by s^2. Result is
// n x C, channel fastest.
std::vector<double> integrate_columns(const Image& frame, std::size_t supersample);

// Called once per step with the pre-integration frame (positive polarity).
// May be invoked concurrently from several workers with distinct t.
using FrameSink = std::function<void(std::size_t t, const Image& frame)>;

struct SimulateOptions {
  bool keep_frames = false;
  FrameSink frame_sink;
  unsigned workers = 0;  // 0 = hardware concurrency
};

struct SimulationResult {
  MeasurementStream stream;
  std::vector<Image> frames;  // filled when keep_frames
};

SimulationResult simulate(const SceneImage& scene, const PatternSpec& pattern, const OpticsConfig& cfg,
                          const SimulateOptions& opts = {});

// Detector noise applied to a clean binary-readout column sum: Poisson shot
// noise (if enabled) then Gaussian read noise, keyed by (seed, t, i, c).
double noisy_sum(double clean, const OpticsConfig& cfg, std::size_t t, std::size_t i, std::size_t c);

// Uniform unit scene through the same optics, noise forced off. The optics
// are achromatic, so every channel receives the same reference.
CalibrationData white_calibration(const PatternSpec& pattern, const OpticsConfig& cfg, std::size_t channels = 1);

}  // namespace pushframe
