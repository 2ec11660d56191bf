#include "pushframe/calibration.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "pushframe/error.hpp"
#include "pushframe/raw.hpp"
#include "pushframe/stream.hpp"

namespace pushframe {

namespace {
constexpr std::string_view kCalibMagic = "# pushframe-calibration v1";

std::string join(std::span<const double> v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_double(v[k]);
  return s;
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = std::min(s.find(',', start), s.size());
    out.push_back(parse_double(std::string_view(s).substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}
}  // namespace

void CalibrationData::validate() const {
  if (order == 0 || channels == 0) throw ValidationError("calibration has zero order or channels");
  if (weights.size() != order * channels || reference.size() != channels) {
    throw ValidationError("calibration weight table does not match order x channels");
  }
  if (white_index >= order) throw ValidationError("calibration white column index out of range");
  for (double w : weights)
    if (!(w > 0.0)) throw ValidationError("calibration column weight W_i must be > 0");
  for (double w : reference)
    if (!(w > 0.0)) throw ValidationError("calibration reference level must be > 0");
  if (gain_map) {
    for (double g : gain_map->data())
      if (!(g > 0.0)) throw ValidationError("calibration gain map must be strictly positive");
  }
}

void save_calibration(const std::string& path, const CalibrationData& calib) {
  const std::string frame_name = std::filesystem::path(path).filename().string() + ".white.raw";
  const std::string gain_name = std::filesystem::path(path).filename().string() + ".gain.raw";
  const auto dir = std::filesystem::path(path).parent_path();
  std::string text(kCalibMagic);
  text += '\n';
  text += fmt::format("order={}\nchannels={}\nsupersample={}\nwhite_index={}\npattern_digest={}\n", calib.order,
                      calib.channels, calib.supersample, calib.white_index, calib.pattern_digest);
  if (!calib.config_digest.empty()) text += "config_digest=" + calib.config_digest + "\n";
  text += fmt::format("white_frame={}\n", calib.white_frame ? frame_name : "none");
  text += fmt::format("gain_map={}\n", calib.gain_map ? gain_name : "none");
  text += "reference=" + join(calib.reference) + "\n";
  for (std::size_t c = 0; c < calib.channels; ++c) {
    text += fmt::format("weights.{}=", c) +
            join(std::span<const double>(calib.weights).subspan(c * calib.order, calib.order)) + "\n";
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  os << text;
  if (!os) throw FormatError("failed writing " + path);
  if (calib.white_frame) write_raw((dir / frame_name).string(), *calib.white_frame);
  if (calib.gain_map) write_raw((dir / gain_name).string(), *calib.gain_map);
}

CalibrationData load_calibration(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open calibration file " + path);
  std::string line;
  if (!std::getline(is, line) || line != kCalibMagic) throw FormatError(path + ": not a calibration file", 0);
  std::map<std::string, std::string> kv;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(path + ": calibration line without '='");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(fmt::format("{}: calibration missing '{}'", path, key));
    return it->second;
  };
  auto get_size = [&](const std::string& key) {
    try {
      return static_cast<std::size_t>(std::stoull(get(key)));
    } catch (const std::logic_error&) {
      throw FormatError(fmt::format("{}: calibration '{}' is not an integer", path, key));
    }
  };

  CalibrationData calib;
  calib.order = get_size("order");
  calib.channels = get_size("channels");
  calib.supersample = static_cast<int>(get_size("supersample"));
  calib.white_index = get_size("white_index");
  calib.pattern_digest = get("pattern_digest");
  if (auto it = kv.find("config_digest"); it != kv.end()) calib.config_digest = it->second;
  calib.reference = split_doubles(get("reference"));
  for (std::size_t c = 0; c < calib.channels; ++c) {
    auto w = split_doubles(get(fmt::format("weights.{}", c)));
    if (w.size() != calib.order) throw FormatError(fmt::format("{}: weights.{} has wrong length", path, c));
    calib.weights.insert(calib.weights.end(), w.begin(), w.end());
  }
  const auto dir = std::filesystem::path(path).parent_path();
  if (const std::string f = get("white_frame"); f != "none") calib.white_frame = read_raw((dir / f).string());
  if (const std::string f = get("gain_map"); f != "none") calib.gain_map = read_raw((dir / f).string());
  try {
    calib.validate();
  } catch (const ValidationError& e) {
    throw FormatError(path + ": " + e.what());
  }
  return calib;
}

}  // namespace pushframe
