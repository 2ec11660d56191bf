#include "pushframe/recon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "pushframe/error.hpp"
#include "pushframe/netpbm.hpp"
#include "pushframe/util.hpp"

namespace pushframe {

namespace {

void check_calibration(const MeasurementStream& stream, const CalibrationData& calib) {
  const auto& m = stream.meta();
  if (calib.pattern_digest != m.pattern_digest) {
    throw DigestMismatch(fmt::format("calibration pattern digest {} does not match stream {}", calib.pattern_digest,
                                     m.pattern_digest));
  }
  if (calib.order != m.order) throw ValidationError("calibration order does not match stream");
  if (calib.channels != m.channels) {
    throw ValidationError(fmt::format("calibration has {} channels, stream has {}", calib.channels, m.channels));
  }
  calib.validate();
}

}  // namespace

std::string_view to_string(CorrectionMode m) {
  switch (m) {
    case CorrectionMode::naive: return "naive";
    case CorrectionMode::flatfield: return "flatfield";
    case CorrectionMode::debiased: return "debiased";
    case CorrectionMode::corrected_2d: return "2d";
  }
  return "unknown";
}

CorrectionMode parse_correction_mode(std::string_view s) {
  if (s == "naive") return CorrectionMode::naive;
  if (s == "flatfield") return CorrectionMode::flatfield;
  if (s == "debiased") return CorrectionMode::debiased;
  if (s == "2d") return CorrectionMode::corrected_2d;
  throw ValidationError(fmt::format("unknown correction mode '{}' (naive|flatfield|debiased|2d)", s));
}

MeasurementStream flat_field(const MeasurementStream& stream, const CalibrationData& calib) {
  check_calibration(stream, calib);
  MeasurementStream out = stream;
  const auto& m = stream.meta();
  for (std::size_t t = 0; t < m.steps; ++t)
    for (std::size_t c = 0; c < m.channels; ++c)
      for (std::size_t i = 0; i < m.order; ++i) out.at(t, i, c) *= calib.reference[c] / calib.weight(i, c);
  return out;
}

void fwht(std::span<double> v) {
  if (!is_power_of_two(v.size())) throw ValidationError(fmt::format("fwht: length {} is not a power of two", v.size()));
  const std::size_t n = v.size();
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = v[j], b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
}

std::vector<double> fwht(std::vector<double> v) {
  fwht(std::span<double>(v));
  return v;
}

std::vector<double> reconstruct_column(std::span<const double> s, const PatternSpec& pattern, Synthesis synthesis,
                                       bool fast) {
  const std::size_t n = pattern.order();
  if (s.size() != n) throw ValidationError(fmt::format("reconstruct_column: got {} sums, pattern order is {}", s.size(), n));
  std::vector<double> coef(s.begin(), s.end());
  if (synthesis == Synthesis::debiased) {
    const double white = s[pattern.white_column()];
    for (double& v : coef) v = 2.0 * v - white;
    coef[pattern.white_column()] = white;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> out(n, 0.0);
  if (fast) {
    // Base column pi(i) carries coefficient i; H is symmetric in Sylvester order.
    for (std::size_t i = 0; i < n; ++i) out[pattern.permutation()[i]] = coef[i];
    fwht(std::span<double>(out));
    for (double& v : out) v *= inv_n;
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += pattern(j, i) * coef[i];
      out[j] = acc * inv_n;
    }
  }
  return out;
}

ReconImage reconstruct(const MeasurementStream& stream, const PatternSpec& pattern, const CalibrationData* calib,
                       const ReconOptions& opts) {
  const auto& m = stream.meta();
  const std::size_t n = pattern.order();
  if (m.pattern_digest != pattern.digest_hex()) {
    throw DigestMismatch(
        fmt::format("stream pattern digest {} does not match pattern {}", m.pattern_digest, pattern.digest_hex()));
  }
  if (m.order != n) throw ValidationError("stream order does not match pattern");
  if (m.steps < m.width + n - 1) {
    throw ValidationError(fmt::format("stream truncated: {} steps, need W + n - 1 = {}", m.steps, m.width + n - 1));
  }
  if (opts.mode == CorrectionMode::flatfield && calib == nullptr) {
    throw ValidationError("flatfield reconstruction needs a calibration");
  }
  if (opts.mode == CorrectionMode::corrected_2d && m.readout != Readout::binary) {
    throw ValidationError("2d-corrected reconstruction needs a binary-readout stream");
  }

  const bool use_calib = calib != nullptr && opts.mode != CorrectionMode::corrected_2d;
  const MeasurementStream* source = &stream;
  MeasurementStream flattened;
  if (use_calib) {
    flattened = flat_field(stream, *calib);
    source = &flattened;
  }
  // After flat_field every code reads w-bar on a white scene; scale by the
  // code's on-count over w-bar to return to mask-sum units.
  std::vector<double> rescale(n * m.channels, 1.0);
  if (use_calib) {
    for (std::size_t c = 0; c < m.channels; ++c)
      for (std::size_t i = 0; i < n; ++i)
        rescale[c * n + i] = static_cast<double>(pattern.on_count(i)) / calib->reference[c];
  }
  const Synthesis synthesis = (opts.mode == CorrectionMode::naive || m.readout == Readout::differential)
                                  ? Synthesis::naive
                                  : Synthesis::debiased;

  ReconImage out;
  out.pixels = Image(n, m.width, m.channels);
  out.meta.mode = opts.mode;
  out.meta.pattern_digest = m.pattern_digest;
  out.meta.config_digest = m.config_digest;
  out.meta.fast = opts.use_fast;
  out.meta.readout = m.readout;
  out.meta.interior_begin = std::min(n - 1, m.width);
  out.meta.interior_end = m.width + 1 >= n ? std::max(out.meta.interior_begin, m.width + 1 - n) : out.meta.interior_begin;

  parallel_for(m.width, opts.workers, [&](std::size_t k) {
    std::vector<double> s(n);
    for (std::size_t c = 0; c < m.channels; ++c) {
      for (std::size_t i = 0; i < n; ++i) s[i] = source->at(k + i, i, c) * rescale[c * n + i];
      const std::vector<double> col = reconstruct_column(s, pattern, synthesis, opts.use_fast);
      for (std::size_t j = 0; j < n; ++j) out.pixels.at(j, k, c) = col[j];
    }
  });
  return out;
}

std::vector<double> correct_frame_2d(const Image& frame, const CalibrationData& calib, const PatternSpec& pattern) {
  if (!calib.gain_map) throw ValidationError("2D correction needs a calibration with a white frame");
  const Image& gain = *calib.gain_map;
  const std::size_t n = pattern.order();
  const auto s = static_cast<std::size_t>(calib.supersample);
  if (frame.rows() != n * s || frame.cols() != n * s) {
    throw ValidationError(fmt::format("2D correction: frame is {}x{}, expected {}x{}", frame.rows(), frame.cols(), n * s, n * s));
  }
  if (gain.rows() != frame.rows() || gain.cols() != frame.cols() ||
      (gain.channels() != frame.channels() && gain.channels() != 1)) {
    throw ValidationError("2D correction: gain map shape does not match frame");
  }
  const std::size_t ch = frame.channels();
  Image corrected(frame.rows(), frame.cols(), ch, 0.0);
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    for (std::size_t c = 0; c < frame.cols(); ++c) {
      if (!pattern.on(r / s, c / s)) continue;  // infinite-contrast correction
      for (std::size_t k = 0; k < ch; ++k) {
        corrected.at(r, c, k) = frame.at(r, c, k) / gain.at(r, c, gain.channels() == 1 ? 0 : k);
      }
    }
  }
  return integrate_columns(corrected, s);
}

MeasurementStream correct_2d(std::span<const Image> frames, const CalibrationData& calib, const PatternSpec& pattern,
                             const OpticsConfig& cfg) {
  return correct_2d(frames.size(), [&](std::size_t t) { return frames[t]; }, calib, pattern, cfg);
}

MeasurementStream correct_2d(std::size_t steps, const std::function<Image(std::size_t t)>& frame_at,
                             const CalibrationData& calib, const PatternSpec& pattern, const OpticsConfig& cfg) {
  const std::size_t n = pattern.order();
  if (steps < n) throw ValidationError("2D correction: frame stack shorter than the pattern order");
  if (calib.pattern_digest != pattern.digest_hex()) throw DigestMismatch("2D correction: calibration is for a different pattern");
  if (cfg.readout != Readout::binary) throw ValidationError("2D correction needs binary readout");
  MeasurementStream stream;
  for (std::size_t t = 0; t < steps; ++t) {
    const Image frame = frame_at(t);
    if (t == 0) {
      stream = MeasurementStream(StreamMeta{n, steps - n + 1, steps, frame.channels(), Readout::binary, pattern.digest_hex(),
                                            cfg.digest_hex()});
    } else if (frame.channels() != stream.meta().channels) {
      throw ValidationError("2D correction: frames disagree on channel count");
    }
    const std::vector<double> sums = correct_frame_2d(frame, calib, pattern);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < stream.meta().channels; ++c)
        stream.at(t, i, c) = noisy_sum(sums[i * stream.meta().channels + c], cfg, t, i, c);
  }
  return stream;
}

Image shear_columns(const Image& img, double shift_per_column) {
  Image out(img.rows(), img.cols(), img.channels(), 0.0);
  const auto h = static_cast<long long>(img.rows());
  for (std::size_t k = 0; k < img.cols(); ++k) {
    const double shift = shift_per_column * static_cast<double>(k);
    for (std::size_t r = 0; r < img.rows(); ++r) {
      const double y = static_cast<double>(r) - shift;
      const double fl = std::floor(y);
      const double f = y - fl;
      const auto y0 = static_cast<long long>(fl);
      for (std::size_t c = 0; c < img.channels(); ++c) {
        const double a = (y0 >= 0 && y0 < h) ? img.at(static_cast<std::size_t>(y0), k, c) : 0.0;
        const double b = (f != 0.0 && y0 + 1 >= 0 && y0 + 1 < h) ? img.at(static_cast<std::size_t>(y0 + 1), k, c) : 0.0;
        out.at(r, k, c) = f == 0.0 ? a : a + f * (b - a);
      }
    }
  }
  return out;
}

ReconImage shear_correct(const ReconImage& img, double shear_rows_per_column) {
  if (shear_rows_per_column == 0.0) return img;
  ReconImage out{shear_columns(img.pixels, -shear_rows_per_column), img.meta};
  out.meta.shear_corrected = shear_rows_per_column;
  return out;
}

void save_recon(const std::string& path, const ReconImage& img) {
  const auto data = img.pixels.data();
  double lo = 0.0, hi = 1.0;
  if (!data.empty()) {
    const auto [mn, mx] = std::minmax_element(data.begin(), data.end());
    lo = *mn;
    hi = *mx;
  }
  Image scaled = img.pixels;
  const double span = hi > lo ? hi - lo : 1.0;
  for (double& v : scaled.data()) v = (v - lo) / span;
  write_netpbm(path, scaled, 65535);
  std::ofstream os(path + ".meta", std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + ".meta for writing");
  os << "# pushframe-recon v1\n"
     << fmt::format("rows={}\ncols={}\nchannels={}\n", img.pixels.rows(), img.pixels.cols(), img.pixels.channels())
     << "window_min=" << format_double(lo) << "\nwindow_max=" << format_double(hi) << "\n"
     << fmt::format("mode={}\nreadout={}\nnormalized={}\nfast={}\npattern_digest={}\nconfig_digest={}\n", to_string(img.meta.mode),
                    to_string(img.meta.readout), img.meta.normalized ? "1/n" : "none", img.meta.fast ? "true" : "false",
                    img.meta.pattern_digest, img.meta.config_digest)
     << fmt::format("interior_columns={}..{}\n", img.meta.interior_begin, img.meta.interior_end)
     << "shear_corrected=" << format_double(img.meta.shear_corrected) << "\n";
  if (!os) throw FormatError("failed writing " + path + ".meta");
}

}  // namespace pushframe
