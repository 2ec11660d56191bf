#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "pushframe/error.hpp"
#include "pushframe/util.hpp"

namespace pushframe::cli {

namespace {

constexpr std::string_view kSyntheticPrefix = "synthetic:";

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_integer(std::string_view key, std::string_view v) {
  T out{};
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size()) {
    throw ValidationError(fmt::format("{}: '{}' is not a valid integer", key, v));
  }
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  try {
    return parse_double(v);
  } catch (const FormatError&) {
    throw ValidationError(fmt::format("{}: '{}' is not a number", key, v));
  }
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError(fmt::format("{}: '{}' is not a boolean", key, v));
}

std::vector<double> parse_list(std::string_view key, std::string_view v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = v.find(',', pos);
    out.push_back(parse_real(key, trim(v.substr(pos, comma - pos))));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string list_text(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_double(v[k]);
  return s;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

struct Field {
  std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Field integer(T ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, std::string_view k, std::string_view v) { c.*member = parse_integer<T>(k, v); },
          [member](const ExperimentConfig& c) { return std::to_string(c.*member); }};
}

Field boolean(bool ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, std::string_view k, std::string_view v) { c.*member = parse_bool(k, v); },
          [member](const ExperimentConfig& c) { return bool_text(c.*member); }};
}

Field optics_real(double OpticsConfig::*member) {
  return {[member](ExperimentConfig& c, std::string_view k, std::string_view v) { c.optics.*member = parse_real(k, v); },
          [member](const ExperimentConfig& c) { return format_double(c.optics.*member); }};
}

Field illum_real(double IlluminationField::*member) {
  return {[member](ExperimentConfig& c, std::string_view k, std::string_view v) {
            c.optics.illumination.*member = parse_real(k, v);
          },
          [member](const ExperimentConfig& c) { return format_double(c.optics.illumination.*member); }};
}

Field illum_list(std::vector<double> IlluminationField::*member) {
  return {[member](ExperimentConfig& c, std::string_view k, std::string_view v) {
            c.optics.illumination.*member = parse_list(k, v);
          },
          [member](const ExperimentConfig& c) { return list_text(c.optics.illumination.*member); }};
}

template <class T>
Field synth_integer(T SyntheticParams::*member) {
  return {[member](ExperimentConfig& c, std::string_view k, std::string_view v) { c.synth.*member = parse_integer<T>(k, v); },
          [member](const ExperimentConfig& c) { return std::to_string(c.synth.*member); }};
}

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = [] {
    std::map<std::string, Field, std::less<>> t;
    t["pattern.n"] = integer(&ExperimentConfig::order);
    t["pattern.scramble"] = boolean(&ExperimentConfig::scramble);
    t["pattern.seed"] = integer(&ExperimentConfig::pattern_seed);
    t["pattern.max_run"] = {[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                              if (v == "auto" || v.empty()) {
                                c.max_run.reset();
                              } else {
                                c.max_run = parse_integer<int>(k, v);
                              }
                            },
                            [](const ExperimentConfig& c) {
                              return c.max_run ? std::to_string(*c.max_run) : std::string("auto");
                            }};
    t["pattern.scale"] = integer(&ExperimentConfig::scale);

    t["scene.source"] = {[](ExperimentConfig& c, std::string_view, std::string_view v) { c.scene_source = v; },
                         [](const ExperimentConfig& c) { return c.scene_source; }};
    t["scene.width"] = integer(&ExperimentConfig::scene_width);
    t["scene.channels"] = synth_integer(&SyntheticParams::channels);
    t["scene.level"] = {[](ExperimentConfig& c, std::string_view k, std::string_view v) { c.synth.level = parse_real(k, v); },
                        [](const ExperimentConfig& c) { return format_double(c.synth.level); }};
    t["scene.period"] = synth_integer(&SyntheticParams::period);
    t["scene.delta_row"] = synth_integer(&SyntheticParams::delta_row);
    t["scene.delta_col"] = synth_integer(&SyntheticParams::delta_col);

    t["optics.contrast_floor"] = optics_real(&OpticsConfig::contrast_floor);
    t["optics.blur_sigma"] = optics_real(&OpticsConfig::blur_sigma);
    t["optics.step_error"] = optics_real(&OpticsConfig::step_error);
    t["optics.stray_light"] = optics_real(&OpticsConfig::stray_light);
    t["optics.read_noise"] = optics_real(&OpticsConfig::read_noise);
    t["optics.photons_per_unit"] = optics_real(&OpticsConfig::photons_per_unit);
    t["optics.shear_rows_per_column"] = optics_real(&OpticsConfig::shear_rows_per_column);
    t["optics.shot_noise"] = {[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                                c.optics.shot_noise = parse_bool(k, v);
                              },
                              [](const ExperimentConfig& c) { return bool_text(c.optics.shot_noise); }};
    t["optics.supersample"] = {[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                                 c.optics.supersample = parse_integer<int>(k, v);
                               },
                               [](const ExperimentConfig& c) { return std::to_string(c.optics.supersample); }};
    t["optics.readout"] = {[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                             try {
                               c.optics.readout = parse_readout(v);
                             } catch (const ValidationError& e) {
                               throw ValidationError(fmt::format("{}: {}", k, e.what()));
                             }
                           },
                           [](const ExperimentConfig& c) { return std::string(to_string(c.optics.readout)); }};
    t["optics.illumination"] = {[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                                  try {
                                    c.optics.illumination.mode = parse_illumination_mode(v);
                                  } catch (const ValidationError& e) {
                                    throw ValidationError(fmt::format("{}: {}", k, e.what()));
                                  }
                                },
                                [](const ExperimentConfig& c) { return std::string(to_string(c.optics.illumination.mode)); }};
    t["optics.illumination.column_gains"] = illum_list(&IlluminationField::column_gains);
    t["optics.illumination.row_gains"] = illum_list(&IlluminationField::row_gains);
    t["optics.illumination.center_row"] = illum_real(&IlluminationField::center_row);
    t["optics.illumination.center_col"] = illum_real(&IlluminationField::center_col);
    t["optics.illumination.sigma"] = illum_real(&IlluminationField::sigma);
    t["optics.illumination.floor"] = illum_real(&IlluminationField::floor);
    t["seed"] = {[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                   c.optics.seed = parse_integer<std::uint64_t>(k, v);
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.optics.seed); }};

    t["recon.mode"] = {[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                         try {
                           c.mode = parse_correction_mode(v);
                         } catch (const ValidationError& e) {
                           throw ValidationError(fmt::format("{}: {}", k, e.what()));
                         }
                       },
                       [](const ExperimentConfig& c) { return std::string(to_string(c.mode)); }};
    t["recon.fast"] = boolean(&ExperimentConfig::fast);
    t["recon.shear"] = boolean(&ExperimentConfig::shear_correct);

    t["output.dir"] = {[](ExperimentConfig& c, std::string_view, std::string_view v) { c.output_dir = v; },
                       [](const ExperimentConfig& c) { return c.output_dir; }};
    t["workers"] = integer(&ExperimentConfig::workers);
    return t;
  }();
  return table;
}

bool excluded_from_digest(std::string_view key) { return key == "output.dir" || key == "workers"; }

}  // namespace

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> list = [] {
    std::vector<std::string> k;
    for (const auto& [name, field] : fields()) k.push_back(name);
    return k;
  }();
  return list;
}

bool ExperimentConfig::known(std::string_view key) { return fields().contains(key); }

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ValidationError(fmt::format("unknown configuration key '{}'", key));
  it->second.set(*this, key, trim(value));
}

std::string ExperimentConfig::get(std::string_view key) const {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ValidationError(fmt::format("unknown configuration key '{}'", key));
  return it->second.get(*this);
}

void ExperimentConfig::validate() const {
  std::vector<std::string> problems;
  auto check = [&](auto&& fn) {
    try {
      fn();
    } catch (const ValidationError& e) {
      if (std::find(problems.begin(), problems.end(), e.what()) == problems.end()) problems.emplace_back(e.what());
    }
  };

  check([&] {
    if (!is_power_of_two(order) || order > HadamardMatrix::kMaxOrder) {
      throw ValidationError(fmt::format("pattern.n: {} is not a power of two in [1, {}]", order, HadamardMatrix::kMaxOrder));
    }
  });
  check([&] {
    if (scale < 1) throw ValidationError("pattern.scale must be >= 1");
  });
  check([&] {
    if (max_run && *max_run < 2) throw ValidationError("pattern.max_run must be >= 2");
  });

  const bool synthetic_scene = scene_source.starts_with(kSyntheticPrefix);
  check([&] {
    if (synthetic_scene) (void)parse_synthetic_kind(std::string_view(scene_source).substr(kSyntheticPrefix.size()));
    else if (scene_source.empty()) throw ValidationError("scene.source is empty");
  });
  if (synthetic_scene) {
    check([&] {
      if (scene_width == 0) throw ValidationError("scene.width must be >= 1");
    });
    check([&] {
      if (synth.channels != 1 && synth.channels != 3) throw ValidationError("scene.channels must be 1 or 3");
    });
    check([&] {
      if (!(synth.level >= 0.0) || !std::isfinite(synth.level)) throw ValidationError("scene.level must be finite and >= 0");
    });
    check([&] {
      if (synth.period == 0) throw ValidationError("scene.period must be >= 1");
    });
    check([&] {
      if (synth.delta_row >= order || synth.delta_col >= scene_width) {
        throw ValidationError("scene.delta_row/delta_col must lie inside the scene");
      }
    });
  }

  // Validate each optics key against otherwise-default optics so that every
  // offending field is reported, not just the first.
  if (is_power_of_two(order) && order <= HadamardMatrix::kMaxOrder) {
    for (const std::string& key : keys()) {
      if (!key.starts_with("optics.") || key.starts_with("optics.illumination")) continue;
      check([&] {
        ExperimentConfig probe;
        probe.set(key, get(key));
        probe.optics.validate(order);
      });
    }
    check([&] {
      OpticsConfig probe;
      probe.illumination = optics.illumination;
      probe.validate(order);
    });
    check([&] { optics.validate(order); });
  }

  check([&] {
    if (mode == CorrectionMode::corrected_2d && optics.readout != Readout::binary) {
      throw ValidationError("recon.mode=2d needs optics.readout=binary");
    }
  });

  if (problems.empty()) return;
  std::string msg = fmt::format("invalid configuration ({} problem{}):", problems.size(), problems.size() == 1 ? "" : "s");
  for (const auto& p : problems) msg += "\n  - " + p;
  throw ValidationError(msg);
}

std::string ExperimentConfig::canonical() const {
  std::string out = "# pushframe-config v1\n";
  for (const auto& [key, field] : fields()) {
    if (excluded_from_digest(key)) continue;
    out += key + "=" + field.get(*this) + "\n";
  }
  return out;
}

std::string ExperimentConfig::digest_hex() const { return hex64(fnv1a64(canonical())); }

void apply_config_text(ExperimentConfig& cfg, const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string raw, section;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw FormatError(fmt::format("{}:{}: unterminated section header", origin, line_no));
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError(fmt::format("{}:{}: expected 'key = value'", origin, line_no));
    std::string key(trim(line.substr(0, eq)));
    if (!section.empty()) key = section + "." + key;
    try {
      cfg.set(key, line.substr(eq + 1));
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{}:{}: {}", origin, line_no, e.what()));
    }
  }
}

void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  apply_config_text(cfg, ss.str(), path);
}

void apply_override(ExperimentConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ValidationError(fmt::format("--set expects key=value, got '{}'", assignment));
  cfg.set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

PatternSpec make_pattern(const ExperimentConfig& cfg) {
  const HadamardMatrix h = sylvester(cfg.order);
  if (!cfg.scrambled()) return PatternSpec(h, cfg.scale);
  return scramble(h, cfg.pattern_seed, cfg.max_run.value_or(default_max_run(cfg.order)), {.scale = cfg.scale});
}

SceneImage make_scene(const ExperimentConfig& cfg) {
  if (cfg.scene_source.starts_with(kSyntheticPrefix)) {
    const auto kind = parse_synthetic_kind(std::string_view(cfg.scene_source).substr(kSyntheticPrefix.size()));
    return synthetic(kind, cfg.order, cfg.scene_width, cfg.synth);
  }
  SceneImage img = load_image(cfg.scene_source);
  return img.height() == cfg.order ? img : resample_height(img, cfg.order);
}

}  // namespace pushframe::cli
