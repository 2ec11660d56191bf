#pragma once

#include <limits>
#include <string>
#include <vector>

#include "pushframe/image.hpp"

namespace pushframe {

inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

// Peak is fixed at 1.0. Identical inputs give +infinity.
std::vector<double> psnr(const Image& a, const Image& b);
double rmse(const Image& a, const Image& b);

// Mean SSIM over every window x window block (stride 1), uniform weights,
// dynamic range 1.0.
std::vector<double> ssim(const Image& a, const Image& b, std::size_t window = 8, double k1 = 0.01, double k2 = 0.03);

// max over columns of |column mean - global mean| / |global mean|, per
// channel; 0 for an all-zero channel.
std::vector<double> line_artifact_score(const Image& img);

struct QualityReport {
  std::vector<double> psnr;  // per channel
  double psnr_mean = 0.0;
  double rmse = 0.0;
  std::vector<double> ssim;
  double line_artifact_score = 0.0;  // mean over channels
  std::string pattern_digest;
  std::string config_digest;

  static std::string csv_header();
  std::string csv_row() const;
  std::string text() const;
};

QualityReport quality_report(const Image& reconstruction, const Image& truth);

}  // namespace pushframe
