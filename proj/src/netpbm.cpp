#include "pushframe/netpbm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "pushframe/error.hpp"

namespace pushframe {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::string& b) : b_(b) {}

  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (std::isspace(static_cast<unsigned char>(b_[pos_]))) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint64_t number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::uint64_t v = 0;
    while (pos_ < b_.size() && std::isdigit(static_cast<unsigned char>(b_[pos_]))) {
      v = v * 10 + static_cast<unsigned>(b_[pos_] - '0');
      if (v > 0xffffffffULL) throw FormatError(fmt::format("netpbm: {} out of range", what), start);
      ++pos_;
    }
    if (pos_ == start) throw FormatError(fmt::format("netpbm: malformed header, expected {}", what), start);
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }

 private:
  const std::string& b_;
  std::size_t pos_ = 0;
};

}  // namespace

NetpbmImage decode_netpbm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError("netpbm: unsupported magic (binary P5/P6 only)", 0);
  }
  const std::size_t channels = bytes[1] == '5' ? 1 : 3;
  HeaderReader h(bytes);
  h.advance();
  h.advance();
  const std::uint64_t width = h.number("width");
  const std::uint64_t height = h.number("height");
  const std::size_t maxval_at = h.pos();
  const std::uint64_t maxval = h.number("maxval");
  if (width == 0 || height == 0) throw FormatError("netpbm: zero image dimension", maxval_at);
  if (maxval == 0 || maxval > 65535) throw FormatError("netpbm: unsupported depth (maxval must be 1..65535)", maxval_at);
  if (h.pos() >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[h.pos()]))) {
    throw FormatError("netpbm: missing whitespace after maxval", h.pos());
  }
  const std::size_t data_at = h.pos() + 1;
  const std::size_t bps = maxval > 255 ? 2 : 1;
  const std::size_t samples = width * height * channels;
  if (bytes.size() - data_at < samples * bps) {
    throw FormatError(fmt::format("netpbm: truncated payload, need {} bytes, have {}", samples * bps,
                                  bytes.size() - data_at),
                      bytes.size());
  }

  NetpbmImage out{Image(height, width, channels), static_cast<std::uint32_t>(maxval)};
  auto dst = out.pixels.data();
  const auto* src = reinterpret_cast<const unsigned char*>(bytes.data() + data_at);
  const double inv = 1.0 / static_cast<double>(maxval);
  for (std::size_t k = 0; k < samples; ++k) {
    const unsigned code = bps == 2 ? (src[2 * k] << 8) | src[2 * k + 1] : src[k];
    if (code > maxval) throw FormatError("netpbm: sample exceeds maxval", data_at + k * bps);
    dst[k] = code * inv;
  }
  return out;
}

NetpbmImage read_netpbm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open image " + path);
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  try {
    return decode_netpbm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::string encode_netpbm(const Image& img, std::uint32_t maxval) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw ValidationError(fmt::format("netpbm: cannot encode {} channels", img.channels()));
  }
  if (maxval == 0 || maxval > 65535) throw ValidationError("netpbm: maxval must be 1..65535");
  std::string out = fmt::format("{}\n{} {}\n{}\n", img.channels() == 1 ? "P5" : "P6", img.cols(), img.rows(), maxval);
  const std::size_t bps = maxval > 255 ? 2 : 1;
  const std::size_t header = out.size();
  out.resize(header + img.size() * bps);
  auto* dst = reinterpret_cast<unsigned char*>(out.data() + header);
  const auto src = img.data();
  for (std::size_t k = 0; k < src.size(); ++k) {
    const double v = std::isfinite(src[k]) ? std::clamp(src[k], 0.0, 1.0) : 0.0;
    const auto code = static_cast<unsigned>(std::lround(v * maxval));
    if (bps == 2) {
      dst[2 * k] = static_cast<unsigned char>(code >> 8);
      dst[2 * k + 1] = static_cast<unsigned char>(code & 0xff);
    } else {
      dst[k] = static_cast<unsigned char>(code);
    }
  }
  return out;
}

void write_netpbm(const std::string& path, const Image& img, std::uint32_t maxval) {
  const std::string bytes = encode_netpbm(img, maxval);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw FormatError("failed writing " + path);
}

}  // namespace pushframe
