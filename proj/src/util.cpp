#include "pushframe/util.hpp"

#include <fmt/format.h>

namespace pushframe {

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

}  // namespace pushframe
