#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pushframe/calibration.hpp"
#include "pushframe/forward.hpp"
#include "pushframe/image.hpp"
#include "pushframe/pattern.hpp"
#include "pushframe/stream.hpp"

namespace pushframe {

// Column synthesis: naive uses the sums as +-1 code coefficients directly;
// debiased first maps 0/1-mask sums to +-1 coefficients via 2 s_i - s_white.
enum class Synthesis { naive, debiased };

enum class CorrectionMode { naive, flatfield, debiased, corrected_2d };

std::string_view to_string(CorrectionMode m);
CorrectionMode parse_correction_mode(std::string_view s);  // naive|flatfield|debiased|2d

struct ReconMeta {
  CorrectionMode mode = CorrectionMode::naive;
  std::string pattern_digest;
  std::string config_digest;
  bool normalized = true;  // 1/n applied
  bool fast = false;
  Readout readout = Readout::binary;
  // Columns [interior_begin, interior_end) were captured with the scene
  // covering the whole pattern at every step; the rest are edge columns.
  std::size_t interior_begin = 0;
  std::size_t interior_end = 0;
  double shear_corrected = 0.0;
};

struct ReconImage {
  Image pixels;  // n x W x C
  ReconMeta meta;
};

// S'_{t,i} = S_{t,i} * w-bar / W_i per channel.
MeasurementStream flat_field(const MeasurementStream& stream, const CalibrationData& calib);

// Unnormalized Walsh-Hadamard transform in natural (Sylvester) order.
void fwht(std::span<double> v);
std::vector<double> fwht(std::vector<double> v);

// C = (1/n) sum_i H_{pi(i)} s_i, optionally after debiasing. `fast` uses the
// O(n log n) transform after un-permuting s.
std::vector<double> reconstruct_column(std::span<const double> s, const PatternSpec& pattern, Synthesis synthesis,
                                       bool fast = false);

struct ReconOptions {
  CorrectionMode mode = CorrectionMode::debiased;
  bool use_fast = false;
  unsigned workers = 0;
};

// Scene column k is synthesised from s_i = S_{t=k+i, i}. A calibration, when
// given, is applied as a per-code gain correction before synthesis (not in
// corrected_2d mode, whose stream is already gain-compensated).
ReconImage reconstruct(const MeasurementStream& stream, const PatternSpec& pattern, const CalibrationData* calib,
                       const ReconOptions& opts);

// 2D diagnostic correction of one frame: divide by the white gain map, zero
// every pixel of an "off" mirror, integrate columns. Returns n x C clean sums.
std::vector<double> correct_frame_2d(const Image& frame, const CalibrationData& calib, const PatternSpec& pattern);

// Whole-stack correction; applies the detector noise model of `cfg` to the
// corrected sums with the same keys simulate uses.
MeasurementStream correct_2d(std::span<const Image> frames, const CalibrationData& calib, const PatternSpec& pattern,
                             const OpticsConfig& cfg);
// Same, pulling frame t on demand so the stack never has to be resident.
MeasurementStream correct_2d(std::size_t steps, const std::function<Image(std::size_t t)>& frame_at,
                             const CalibrationData& calib, const PatternSpec& pattern, const OpticsConfig& cfg);

// Shifts column k by -shear * k rows (linear interpolation, zero fill).
ReconImage shear_correct(const ReconImage& img, double shear_rows_per_column);
Image shear_columns(const Image& img, double shift_per_column);

// 16-bit PGM/PPM windowed to [min, max] plus a "<path>.meta" sidecar holding
// the window and metadata.
void save_recon(const std::string& path, const ReconImage& img);

}  // namespace pushframe
