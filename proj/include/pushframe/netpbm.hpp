#pragma once

#include <cstdint>
#include <string>

#include "pushframe/image.hpp"

namespace pushframe {

// Binary PGM (P5, 1 channel) and PPM (P6, 3 channels). maxval <= 255 means
// one byte per sample, otherwise two bytes big-endian.
struct NetpbmImage {
  Image pixels;  // samples divided by maxval
  std::uint32_t maxval = 255;
};

NetpbmImage decode_netpbm(const std::string& bytes);
NetpbmImage read_netpbm(const std::string& path);

// Values are clamped to [0, 1] and rounded to the nearest code.
std::string encode_netpbm(const Image& img, std::uint32_t maxval = 65535);
void write_netpbm(const std::string& path, const Image& img, std::uint32_t maxval = 65535);

}  // namespace pushframe
