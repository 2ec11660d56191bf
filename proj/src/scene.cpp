#include "pushframe/scene.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "pushframe/error.hpp"
#include "pushframe/netpbm.hpp"

namespace pushframe {

SceneImage::SceneImage(Image pixels) : px_(std::move(pixels)) {
  if (px_.channels() != 1 && px_.channels() != 3) {
    throw ValidationError(fmt::format("scene must have 1 or 3 channels, got {}", px_.channels()));
  }
  for (double v : px_.data()) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("scene values must be finite and non-negative");
  }
}

SceneImage load_image(const std::string& path) { return SceneImage(read_netpbm(path).pixels); }

void save_image(const std::string& path, const SceneImage& s, unsigned maxval) {
  write_netpbm(path, s.pixels(), maxval);
}

SceneImage resample_height(const SceneImage& s, std::size_t n) {
  if (n < 2) throw ValidationError("resample_height: target height must be >= 2");
  const std::size_t h = s.height();
  if (h == n) return s;
  Image out(n, s.width(), s.channels());
  for (std::size_t r = 0; r < n; ++r) {
    const double y = h == 1 ? 0.0 : static_cast<double>(r) * static_cast<double>(h - 1) / static_cast<double>(n - 1);
    const std::size_t y0 = std::min(static_cast<std::size_t>(y), h - 1);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double f = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < s.width(); ++c) {
      for (std::size_t ch = 0; ch < s.channels(); ++ch) {
        const double a = s.at(y0, c, ch);
        // a + f(b - a) keeps constant inputs exact.
        out.at(r, c, ch) = std::max(0.0, a + f * (s.at(y1, c, ch) - a));
      }
    }
  }
  return SceneImage(std::move(out));
}

void column_at(const SceneImage& s, double x, std::span<double> out) {
  const std::size_t h = s.height(), ch = s.channels();
  if (out.size() != h * ch) throw ValidationError("column_at: output span has wrong size");
  const double fl = std::floor(x);
  const double f = x - fl;
  const auto w = static_cast<long long>(s.width());
  const auto c0 = static_cast<long long>(fl);
  const long long c1 = c0 + 1;
  const bool in0 = c0 >= 0 && c0 < w;
  const bool in1 = c1 >= 0 && c1 < w && f != 0.0;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t k = 0; k < ch; ++k) {
      const double a = in0 ? s.at(r, static_cast<std::size_t>(c0), k) : 0.0;
      const double b = in1 ? s.at(r, static_cast<std::size_t>(c1), k) : 0.0;
      out[r * ch + k] = f == 0.0 ? a : a + f * (b - a);
    }
  }
}

std::vector<double> column_at(const SceneImage& s, double x) {
  std::vector<double> out(s.height() * s.channels());
  column_at(s, x, out);
  return out;
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "uniform") return SyntheticKind::uniform;
  if (name == "horizontal-gradient") return SyntheticKind::horizontal_gradient;
  if (name == "vertical-gradient") return SyntheticKind::vertical_gradient;
  if (name == "checkerboard") return SyntheticKind::checkerboard;
  if (name == "delta") return SyntheticKind::delta;
  if (name == "sinusoid") return SyntheticKind::sinusoid;
  throw ValidationError(fmt::format("unknown synthetic scene kind '{}'", name));
}

std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::uniform: return "uniform";
    case SyntheticKind::horizontal_gradient: return "horizontal-gradient";
    case SyntheticKind::vertical_gradient: return "vertical-gradient";
    case SyntheticKind::checkerboard: return "checkerboard";
    case SyntheticKind::delta: return "delta";
    case SyntheticKind::sinusoid: return "sinusoid";
  }
  return "unknown";
}

SceneImage synthetic(SyntheticKind kind, std::size_t n, std::size_t width, const SyntheticParams& p) {
  if (n == 0 || width == 0) throw ValidationError("synthetic scene needs non-zero dimensions");
  if (p.channels != 1 && p.channels != 3) throw ValidationError("synthetic scene channels must be 1 or 3");
  if (!(p.level >= 0.0)) throw ValidationError("synthetic scene level must be non-negative");
  if (kind == SyntheticKind::checkerboard && p.period == 0) throw ValidationError("checkerboard period must be positive");
  if (kind == SyntheticKind::delta && (p.delta_row >= n || p.delta_col >= width)) {
    throw ValidationError("delta position outside the scene");
  }
  constexpr double pi = std::numbers::pi;
  Image img(n, width, p.channels);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      for (std::size_t ch = 0; ch < p.channels; ++ch) {
        double v = 0.0;
        switch (kind) {
          case SyntheticKind::uniform:
            v = p.level;
            break;
          case SyntheticKind::horizontal_gradient:
            v = width > 1 ? p.level * static_cast<double>(c) / static_cast<double>(width - 1) : p.level;
            break;
          case SyntheticKind::vertical_gradient:
            v = n > 1 ? p.level * static_cast<double>(r) / static_cast<double>(n - 1) : p.level;
            break;
          case SyntheticKind::checkerboard:
            v = ((r / p.period + c / p.period) % 2 == 0) ? p.level : 0.0;
            break;
          case SyntheticKind::delta:
            v = (r == p.delta_row && c == p.delta_col) ? p.level : 0.0;
            break;
          case SyntheticKind::sinusoid: {
            // A few incommensurate tones; channel shifts the phases.
            const double y = static_cast<double>(r), x = static_cast<double>(c), phase = 0.9 * static_cast<double>(ch);
            const double t = std::sin(2 * pi * (x / 7.3 + y / 11.1) + phase) + 0.8 * std::sin(2 * pi * (x / 3.7 - y / 5.9) + 2 * phase) +
                             0.6 * std::cos(2 * pi * (y / 4.3) + 0.5 * x / 13.0 + 3 * phase);
            v = p.level * (0.5 + t / 4.8);
            break;
          }
        }
        img.at(r, c, ch) = v;
      }
    }
  }
  return SceneImage(std::move(img));
}

}  // namespace pushframe
