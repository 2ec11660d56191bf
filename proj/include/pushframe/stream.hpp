#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace pushframe {

// 0/1 physical masks, or the difference of a mask and its complement (a
// balanced +-1 measurement).
enum class Readout { binary, differential };

std::string_view to_string(Readout r);
Readout parse_readout(std::string_view s);

struct StreamMeta {
  std::size_t order = 0;     // n, pattern columns per step
  std::size_t width = 0;     // W, scene columns
  std::size_t steps = 0;     // T = W + n - 1
  std::size_t channels = 0;  // C
  Readout readout = Readout::binary;
  std::string pattern_digest;
  std::string config_digest;

  friend bool operator==(const StreamMeta&, const StreamMeta&) = default;
};

// T x C x n column sums; one row of n sums per (step, channel).
class MeasurementStream {
 public:
  MeasurementStream() = default;
  explicit MeasurementStream(StreamMeta meta);

  const StreamMeta& meta() const noexcept { return meta_; }
  StreamMeta& meta() noexcept { return meta_; }

  double& at(std::size_t t, std::size_t i, std::size_t c) { return sums_[(t * meta_.channels + c) * meta_.order + i]; }
  double at(std::size_t t, std::size_t i, std::size_t c) const {
    return sums_[(t * meta_.channels + c) * meta_.order + i];
  }
  std::vector<double>& sums() noexcept { return sums_; }
  const std::vector<double>& sums() const noexcept { return sums_; }

  friend bool operator==(const MeasurementStream&, const MeasurementStream&) = default;

 private:
  StreamMeta meta_;
  std::vector<double> sums_;
};

// CSV: magic line, key=value metadata line, column header, then one row per
// (t, channel). Doubles use the shortest round-trip representation.
std::string serialize_stream(const MeasurementStream& s);
MeasurementStream parse_stream(const std::string& text);
void save_stream(const std::string& path, const MeasurementStream& s);
MeasurementStream load_stream(const std::string& path);

// Shortest decimal that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

}  // namespace pushframe
