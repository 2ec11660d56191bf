#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pushframe/forward.hpp"
#include "pushframe/pattern.hpp"
#include "pushframe/recon.hpp"
#include "pushframe/scene.hpp"

namespace pushframe::cli {

// Everything one experiment needs. Keys are flat dotted names
// ("optics.blur_sigma"); see keys() for the full list.
struct ExperimentConfig {
  std::size_t order = 128;
  bool scramble = false;
  std::uint64_t pattern_seed = 0;
  std::optional<int> max_run;  // unset: default_max_run(order) when scrambling
  int scale = PatternSpec::kDefaultScale;

  // "synthetic:<kind>" or a PGM/PPM path (resampled to `order` rows).
  std::string scene_source = "synthetic:sinusoid";
  std::size_t scene_width = 160;
  SyntheticParams synth;

  OpticsConfig optics;  // optics.seed is the global "seed" key

  CorrectionMode mode = CorrectionMode::debiased;
  bool fast = false;
  bool shear_correct = false;

  // Not part of the digest: they never change results.
  std::string output_dir = "out";
  unsigned workers = 0;

  static const std::vector<std::string>& keys();
  static bool known(std::string_view key);

  // Throws ValidationError naming the key on an unknown key or bad value.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;

  // Collects every problem into one ValidationError.
  void validate() const;
  std::string canonical() const;
  std::string digest_hex() const;

  bool scrambled() const { return scramble || max_run.has_value(); }
};

// `key = value` lines, '#' comments, optional "[section]" headers that
// prefix the keys that follow.
void apply_config_text(ExperimentConfig& cfg, const std::string& text, const std::string& origin);
void apply_config_file(ExperimentConfig& cfg, const std::string& path);
// "key=value" override from the command line.
void apply_override(ExperimentConfig& cfg, std::string_view assignment);

PatternSpec make_pattern(const ExperimentConfig& cfg);
SceneImage make_scene(const ExperimentConfig& cfg);

}  // namespace pushframe::cli
