#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"
#include "pushframe/metrics.hpp"
#include "pushframe/recon.hpp"
#include "pushframe/stream.hpp"

namespace pushframe::cli {

// Runs one CLI invocation (arguments exclude the program name) and returns
// the process exit code: 0 ok, 1 validation, 2 io/format, 3 invariant.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct PipelineResult {
  PatternSpec pattern;
  SceneImage truth;
  MeasurementStream stream;
  ReconImage recon;
  QualityReport report;
};

// pattern -> scene -> simulate -> (calibrate) -> reconstruct -> metrics,
// entirely from the config.
PipelineResult run_pipeline(const ExperimentConfig& cfg);

// Diagnostic frame stack: one 16-bit PGM/PPM per step, all divided by a
// common scale, plus manifest.txt recording the scale and digests.
struct FrameStackInfo {
  std::size_t steps = 0;
  std::size_t channels = 0;
  int supersample = 1;
  double scale = 1.0;
  std::string pattern_digest;
  std::string config_digest;
};

std::string frame_file_name(std::size_t t, std::size_t channels);
void write_frame(const std::string& dir, std::size_t t, const Image& frame, double scale);
void write_frame_manifest(const std::string& dir, const FrameStackInfo& info);
FrameStackInfo read_frame_manifest(const std::string& dir);
Image read_frame(const std::string& dir, const FrameStackInfo& info, std::size_t t);

}  // namespace pushframe::cli
