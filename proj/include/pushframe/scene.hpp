#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pushframe/image.hpp"

namespace pushframe {

// Non-negative multi-channel radiance image that translates across the mask.
// Rows are the pattern axis (height must equal the pattern order at
// simulation time), columns are the motion axis.
class SceneImage {
 public:
  SceneImage() = default;
  // Throws ValidationError on negative or non-finite values, or a channel
  // count other than 1 or 3.
  explicit SceneImage(Image pixels);

  std::size_t height() const noexcept { return px_.rows(); }
  std::size_t width() const noexcept { return px_.cols(); }
  std::size_t channels() const noexcept { return px_.channels(); }
  double at(std::size_t r, std::size_t c, std::size_t ch = 0) const { return px_.at(r, c, ch); }
  const Image& pixels() const noexcept { return px_; }

 private:
  Image px_;
};

SceneImage load_image(const std::string& path);
// 16-bit unless maxval says otherwise.
void save_image(const std::string& path, const SceneImage& s, unsigned maxval = 65535);

// Align-corners linear interpolation along the rows; n >= 2.
SceneImage resample_height(const SceneImage& s, std::size_t n);

// Column at fractional position x, as height x channels values (channel
// fastest). Neighbours outside [0, width) read as zero.
void column_at(const SceneImage& s, double x, std::span<double> out);
std::vector<double> column_at(const SceneImage& s, double x);

enum class SyntheticKind { uniform, horizontal_gradient, vertical_gradient, checkerboard, delta, sinusoid };

SyntheticKind parse_synthetic_kind(std::string_view name);
std::string_view to_string(SyntheticKind kind);

struct SyntheticParams {
  std::size_t channels = 1;
  double level = 1.0;         // uniform level; gradient / texture peak
  std::size_t period = 2;     // checkerboard cell size in pixels
  std::size_t delta_row = 0;
  std::size_t delta_col = 0;
};

// Deterministic analytic fixtures. Gradients ramp 0..level, checkerboard
// alternates 0/level, sinusoid is a band-limited texture in [0, level].
SceneImage synthetic(SyntheticKind kind, std::size_t n, std::size_t width, const SyntheticParams& params = {});

}  // namespace pushframe
