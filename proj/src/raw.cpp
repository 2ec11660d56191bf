#include "pushframe/raw.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>

#include "pushframe/error.hpp"

namespace pushframe {

std::string encode_raw(const Image& img) {
  std::string out = fmt::format("PFRAW v1 {} {} {}\n", img.rows(), img.cols(), img.channels());
  const std::size_t header = out.size();
  out.resize(header + img.size() * 8);
  auto* dst = reinterpret_cast<unsigned char*>(out.data() + header);
  for (double v : img.data()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) *dst++ = static_cast<unsigned char>(bits >> (8 * b));
  }
  return out;
}

Image decode_raw(const std::string& bytes) {
  const std::size_t eol = bytes.find('\n');
  if (eol == std::string::npos || bytes.compare(0, 9, "PFRAW v1 ") != 0) throw FormatError("not a raw image dump", 0);
  std::istringstream hs(bytes.substr(9, eol - 9));
  std::size_t rows = 0, cols = 0, channels = 0;
  if (!(hs >> rows >> cols >> channels) || !(hs >> std::ws).eof()) throw FormatError("raw dump: malformed header", 9);
  const std::size_t count = rows * cols * channels;
  if (bytes.size() - eol - 1 != count * 8) {
    throw FormatError(fmt::format("raw dump: payload is {} bytes, expected {}", bytes.size() - eol - 1, count * 8),
                      bytes.size());
  }
  Image img(rows, cols, channels);
  const auto* src = reinterpret_cast<const unsigned char*>(bytes.data() + eol + 1);
  for (double& v : img.data()) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(*src++) << (8 * b);
    v = std::bit_cast<double>(bits);
  }
  return img;
}

void write_raw(const std::string& path, const Image& img) {
  const std::string bytes = encode_raw(img);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw FormatError("failed writing " + path);
}

Image read_raw(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open raw dump " + path);
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  try {
    return decode_raw(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace pushframe
