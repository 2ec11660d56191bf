#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pushframe/image.hpp"

namespace pushframe {

// White reference captured through the optics: per-channel column sums W_i
// and, for the 2D diagnostic path, the pre-integration white frame.
struct CalibrationData {
  std::size_t order = 0;
  std::size_t channels = 0;
  int supersample = 1;
  std::size_t white_index = 0;   // pattern column showing the all-ones code
  std::vector<double> weights;   // W, index c * order + i
  std::vector<double> reference; // w-bar per channel, mean of W
  std::optional<Image> white_frame;
  std::optional<Image> gain_map;  // white value on "on" pixels, 1 elsewhere
  std::string pattern_digest;
  std::string config_digest;  // optional provenance stamp

  double weight(std::size_t i, std::size_t c) const { return weights[c * order + i]; }
  // Throws ValidationError if any weight or gain is not strictly positive.
  void validate() const;
};

// Text calibration file; the optional white frame goes to a raw dump next to
// it (path + ".white.raw").
void save_calibration(const std::string& path, const CalibrationData& calib);
CalibrationData load_calibration(const std::string& path);

}  // namespace pushframe
