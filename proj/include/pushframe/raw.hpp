#pragma once

#include <string>

#include "pushframe/image.hpp"

namespace pushframe {

// Exact image dump: ASCII line "PFRAW v1 <rows> <cols> <channels>\n" followed
// by rows*cols*channels little-endian IEEE-754 doubles, row-major, channel
// fastest.
std::string encode_raw(const Image& img);
Image decode_raw(const std::string& bytes);
void write_raw(const std::string& path, const Image& img);
Image read_raw(const std::string& path);

}  // namespace pushframe
