#include "pushframe/metrics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "pushframe/error.hpp"
#include "pushframe/stream.hpp"

namespace pushframe {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ValidationError(fmt::format("{}: shape mismatch {}x{}x{} vs {}x{}x{}", op, a.rows(), a.cols(), a.channels(),
                                      b.rows(), b.cols(), b.channels()));
  }
}

std::string fmt_db(double v) { return std::isinf(v) ? std::string("inf") : format_double(v); }

}  // namespace

std::vector<double> psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  const std::size_t ch = a.channels();
  std::vector<double> sse(ch, 0.0);
  const auto da = a.data(), db = b.data();
  for (std::size_t k = 0; k < da.size(); ++k) {
    const double d = da[k] - db[k];
    sse[k % ch] += d * d;
  }
  std::vector<double> out(ch);
  const double count = static_cast<double>(a.rows() * a.cols());
  for (std::size_t c = 0; c < ch; ++c) {
    const double mse = sse[c] / count;
    out[c] = mse == 0.0 ? kPsnrIdentical : 10.0 * std::log10(1.0 / mse);
  }
  return out;
}

double rmse(const Image& a, const Image& b) {
  require_same_shape(a, b, "rmse");
  double sse = 0.0;
  const auto da = a.data(), db = b.data();
  for (std::size_t k = 0; k < da.size(); ++k) sse += (da[k] - db[k]) * (da[k] - db[k]);
  return da.empty() ? 0.0 : std::sqrt(sse / static_cast<double>(da.size()));
}

std::vector<double> ssim(const Image& a, const Image& b, std::size_t window, double k1, double k2) {
  require_same_shape(a, b, "ssim");
  if (window < 2 || a.rows() < window || a.cols() < window) {
    throw ValidationError(fmt::format("ssim: image {}x{} smaller than window {}", a.rows(), a.cols(), window));
  }
  const double c1 = k1 * k1, c2 = k2 * k2;
  const double npx = static_cast<double>(window * window);
  std::vector<double> out(a.channels(), 0.0);
  for (std::size_t ch = 0; ch < a.channels(); ++ch) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r + window <= a.rows(); ++r) {
      for (std::size_t c = 0; c + window <= a.cols(); ++c) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (std::size_t y = r; y < r + window; ++y) {
          for (std::size_t x = c; x < c + window; ++x) {
            const double va = a.at(y, x, ch), vb = b.at(y, x, ch);
            sa += va;
            sb += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
          }
        }
        const double ma = sa / npx, mb = sb / npx;
        // Sample (n-1) covariances as in the reference implementation.
        const double va = (saa - npx * ma * ma) / (npx - 1), vb = (sbb - npx * mb * mb) / (npx - 1);
        const double cov = (sab - npx * ma * mb) / (npx - 1);
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    }
    out[ch] = total / static_cast<double>(count);
  }
  return out;
}

std::vector<double> line_artifact_score(const Image& img) {
  std::vector<double> out(img.channels(), 0.0);
  if (img.empty()) return out;
  for (std::size_t ch = 0; ch < img.channels(); ++ch) {
    std::vector<double> col_mean(img.cols(), 0.0);
    double global = 0.0;
    for (std::size_t c = 0; c < img.cols(); ++c) {
      for (std::size_t r = 0; r < img.rows(); ++r) col_mean[c] += img.at(r, c, ch);
      global += col_mean[c];
      col_mean[c] /= static_cast<double>(img.rows());
    }
    global /= static_cast<double>(img.rows() * img.cols());
    if (global == 0.0) continue;
    double worst = 0.0;
    for (double m : col_mean) worst = std::max(worst, std::abs(m - global));
    out[ch] = worst / std::abs(global);
  }
  return out;
}

QualityReport quality_report(const Image& reconstruction, const Image& truth) {
  QualityReport q;
  q.psnr = psnr(reconstruction, truth);
  double sum = 0.0;
  for (double v : q.psnr) sum += v;
  q.psnr_mean = sum / static_cast<double>(q.psnr.size());
  q.rmse = rmse(reconstruction, truth);
  const std::size_t window = std::min<std::size_t>({8, truth.rows(), truth.cols()});
  if (window >= 2) {
    q.ssim = ssim(reconstruction, truth, window);
  } else {
    q.ssim.assign(truth.channels(), std::numeric_limits<double>::quiet_NaN());
  }
  const auto lines = line_artifact_score(reconstruction);
  for (double v : lines) q.line_artifact_score += v / static_cast<double>(lines.size());
  return q;
}

std::string QualityReport::csv_header() {
  return "psnr_mean,psnr_channels,rmse,ssim_channels,line_artifact_score,pattern_digest,config_digest";
}

std::string QualityReport::csv_row() const {
  auto join = [](const std::vector<double>& v, bool db) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ";" : "") + (db ? fmt_db(v[k]) : format_double(v[k]));
    return s;
  };
  return fmt::format("{},{},{},{},{},{},{}", fmt_db(psnr_mean), join(psnr, true), format_double(rmse), join(ssim, false),
                     format_double(line_artifact_score), pattern_digest, config_digest);
}

std::string QualityReport::text() const {
  std::string out = fmt::format("PSNR        {} dB (mean)\n", std::isinf(psnr_mean) ? "inf" : fmt::format("{:.3f}", psnr_mean));
  for (std::size_t c = 0; c < psnr.size(); ++c) {
    out += fmt::format("  channel {}  {} dB, SSIM {:.5f}\n", c, std::isinf(psnr[c]) ? "inf" : fmt::format("{:.3f}", psnr[c]), ssim[c]);
  }
  out += fmt::format("RMSE        {:.6g}\nline score  {:.6g}\n", rmse, line_artifact_score);
  if (!pattern_digest.empty()) out += fmt::format("pattern     {}\n", pattern_digest);
  if (!config_digest.empty()) out += fmt::format("config      {}\n", config_digest);
  return out;
}

}  // namespace pushframe
