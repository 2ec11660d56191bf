#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "doctest.h"
#include "pushframe/error.hpp"
#include "pushframe/raw.hpp"

using namespace pushframe;
using namespace pushframe::cli;
namespace fs = std::filesystem;

namespace {

struct Workdir {
  fs::path root;
  explicit Workdir(const std::string& name) : root(fs::temp_directory_path() / ("pushframe_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workdir() { fs::remove_all(root); }
  std::string operator()(const std::string& file) const { return (root / file).string(); }
};

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

// psnr_mean column of each data row of a sweep CSV.
std::vector<double> sweep_psnr(const std::string& path) {
  std::vector<double> out;
  const auto ls = lines(slurp(path));
  for (std::size_t k = 2; k < ls.size(); ++k) {
    std::istringstream row(ls[k]);
    std::string param, value, psnr;
    std::getline(row, param, ',');
    std::getline(row, value, ',');
    std::getline(row, psnr, ',');
    out.push_back(psnr == "inf" ? std::numeric_limits<double>::infinity() : std::stod(psnr));
  }
  return out;
}

}  // namespace

TEST_CASE("config text: sections, comments, overrides") {
  ExperimentConfig cfg;
  apply_config_text(cfg,
                    "# comment\n"
                    "pattern.n = 64   # trailing comment\n"
                    "[optics]\n"
                    "blur_sigma = 0.5\n"
                    "illumination = column-gains\n"
                    "illumination.column_gains = 1, 2 ,3\n"
                    "[]\n"
                    "seed = 9\n",
                    "inline");
  CHECK(cfg.order == 64);
  CHECK(cfg.optics.blur_sigma == 0.5);
  CHECK(cfg.optics.illumination.mode == IlluminationMode::column_gains);
  CHECK(cfg.optics.illumination.column_gains == std::vector<double>{1, 2, 3});
  CHECK(cfg.optics.seed == 9);
  apply_override(cfg, "optics.blur_sigma=0.25");
  CHECK(cfg.optics.blur_sigma == 0.25);

  CHECK_THROWS_WITH_AS(apply_config_text(cfg, "optics.nope = 1\n", "f"), doctest::Contains("optics.nope"), ValidationError);
  CHECK_THROWS_AS(apply_config_text(cfg, "pattern.n 64\n", "f"), FormatError);
  CHECK_THROWS_WITH_AS(cfg.set("pattern.n", "abc"), doctest::Contains("pattern.n"), ValidationError);
  CHECK_THROWS_AS(cfg.set("recon.fast", "maybe"), ValidationError);
}

TEST_CASE("config digest ignores workers and output directory only") {
  ExperimentConfig a, b;
  b.workers = 7;
  b.output_dir = "elsewhere";
  CHECK(a.digest_hex() == b.digest_hex());
  b.optics.read_noise = 0.01;
  CHECK(a.digest_hex() != b.digest_hex());
  for (const std::string& key : ExperimentConfig::keys()) {
    ExperimentConfig c;
    c.set(key, a.get(key));
    CHECK(c.canonical() == a.canonical());
  }
}

TEST_CASE("config validation lists every offending field") {
  ExperimentConfig cfg;
  cfg.optics.contrast_floor = 0.9;
  cfg.optics.read_noise = -1.0;
  cfg.synth.channels = 2;
  try {
    cfg.validate();
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("contrast_floor") != std::string::npos);
    CHECK(msg.find("read_noise") != std::string::npos);
    CHECK(msg.find("scene.channels") != std::string::npos);
  }
}

TEST_CASE("pattern command") {
  Workdir dir("pattern");
  auto r = invoke({"pattern", "--n", "128", "--out", dir("id.txt")});
  REQUIRE(r.code == 0);
  const PatternSpec id = load_pattern(dir("id.txt"));
  CHECK(id.order() == 128);
  CHECK_FALSE(id.scrambled());

  r = invoke({"pattern", "--n", "128", "--seed", "7", "--max-run", "8", "--out", dir("s.txt")});
  REQUIRE(r.code == 0);
  const PatternSpec s = load_pattern(dir("s.txt"));
  CHECK(s.scrambled());
  CHECK(max_row_run(s) <= 8);
  CHECK(r.out.find("max_row_run=") != std::string::npos);

  r = invoke({"pattern", "--n", "100", "--out", dir("bad.txt")});
  CHECK(r.code == 1);
  CHECK_FALSE(fs::exists(dir("bad.txt")));

  r = invoke({"pattern", "--n", "64", "--max-run", "4", "--out", dir("inf.txt")});
  CHECK(r.code == 1);
  CHECK(r.err.find("smallest achieved run length") != std::string::npos);

  CHECK(invoke({"pattern"}).code == 1);
  CHECK(invoke({"frobnicate"}).code == 1);
  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("simulate command") {
  Workdir dir("simulate");
  auto r = invoke({"simulate", "--n", "128", "--set", "scene.width=100", "--set", "optics.read_noise=0.1", "--set",
                "optics.shot_noise=true", "--out", dir("a.csv")});
  REQUIRE(r.code == 0);
  const MeasurementStream s = load_stream(dir("a.csv"));
  CHECK(s.meta().steps == 227);
  CHECK(s.meta().order == 128);

  REQUIRE(invoke({"simulate", "--n", "128", "--set", "scene.width=100", "--set", "optics.read_noise=0.1", "--set",
               "optics.shot_noise=true", "--out", dir("b.csv"), "--workers", "1"})
              .code == 0);
  CHECK(slurp(dir("a.csv")) == slurp(dir("b.csv")));

  r = invoke({"simulate", "--scene", dir("missing.pgm"), "--out", dir("c.csv")});
  CHECK(r.code == 2);
  r = invoke({"simulate", "--set", "optics.blur_sigma=-2", "--out", dir("c.csv")});
  CHECK(r.code == 1);
  CHECK(r.err.find("optics.blur_sigma") != std::string::npos);
}

TEST_CASE("reconstruct command") {
  Workdir dir("reconstruct");
  REQUIRE(invoke({"pattern", "--n", "64", "--seed", "3", "--out", dir("p.txt")}).code == 0);
  REQUIRE(invoke({"pattern", "--n", "64", "--seed", "4", "--out", dir("q.txt")}).code == 0);
  REQUIRE(invoke({"simulate", "--pattern", dir("p.txt"), "--set", "scene.width=70", "--set", "scene.channels=3", "--out",
               dir("s.csv"), "--save-scene", dir("scene.ppm")})
              .code == 0);

  auto r = invoke({"reconstruct", "--stream", dir("s.csv"), "--pattern", dir("p.txt"), "--mode", "debiased", "--truth",
                dir("scene.ppm"), "--out", dir("r.ppm"), "--raw", dir("r.raw"), "--report", dir("report.csv")});
  REQUIRE(r.code == 0);
  const auto report = lines(slurp(dir("report.csv")));
  REQUIRE(report.size() == 3);
  CHECK(report[0] == "# pushframe-report v1");
  const double psnr = std::stod(report[2].substr(report[2].find(',') + 1));
  CHECK(psnr >= 60.0);
  CHECK(slurp(dir("r.ppm.meta")).find("mode=debiased") != std::string::npos);

  REQUIRE(invoke({"reconstruct", "--stream", dir("s.csv"), "--pattern", dir("p.txt"), "--fast", "--out", dir("f.ppm"),
               "--raw", dir("f.raw")})
              .code == 0);
  const Image slow = read_raw(dir("r.raw")), fast = read_raw(dir("f.raw"));
  double worst = 0.0, peak = 0.0;
  for (std::size_t k = 0; k < slow.size(); ++k) {
    worst = std::max(worst, std::abs(slow.data()[k] - fast.data()[k]));
    peak = std::max(peak, std::abs(slow.data()[k]));
  }
  CHECK(worst <= 1e-9 * peak);

  r = invoke({"reconstruct", "--stream", dir("s.csv"), "--pattern", dir("q.txt"), "--out", dir("x.ppm")});
  CHECK(r.code == 1);
  CHECK(r.err.find("digest") != std::string::npos);

  r = invoke({"reconstruct", "--stream", dir("s.csv"), "--pattern", dir("p.txt"), "--mode", "flatfield", "--out", dir("x.ppm")});
  CHECK(r.code == 1);
  std::ofstream(dir("junk.csv")) << "not a stream\n";
  CHECK(invoke({"reconstruct", "--stream", dir("junk.csv"), "--pattern", dir("p.txt"), "--out", dir("x.ppm")}).code == 2);
}

TEST_CASE("calibrate and flatfield through the CLI") {
  Workdir dir("calibrate");
  std::ofstream(dir("exp.cfg")) << "pattern.n = 32\npattern.scramble = true\nscene.width = 40\n"
                                   "[optics]\nillumination = column-gains\nsupersample = 2\n"
                                   "illumination.column_gains = "
                                << [] {
                                     std::string g;
                                     for (int i = 0; i < 32; ++i) g += (i ? "," : "") + std::to_string(0.6 + 0.025 * i);
                                     return g;
                                   }()
                                << "\n";
  REQUIRE(invoke({"pattern", "--config", dir("exp.cfg"), "--out", dir("p.txt")}).code == 0);
  REQUIRE(invoke({"simulate", "--config", dir("exp.cfg"), "--pattern", dir("p.txt"), "--out", dir("s.csv"), "--save-scene",
               dir("scene.pgm")})
              .code == 0);
  REQUIRE(invoke({"calibrate", "--config", dir("exp.cfg"), "--pattern", dir("p.txt"), "--out", dir("cal/c.txt")}).code == 0);
  CHECK(load_calibration(dir("cal/c.txt")).config_digest.size() == 16);
  auto r = invoke({"reconstruct", "--stream", dir("s.csv"), "--pattern", dir("p.txt"), "--calib", dir("cal/c.txt"), "--mode",
                "flatfield", "--truth", dir("scene.pgm"), "--out", dir("r.pgm")});
  REQUIRE(r.code == 0);
  // Quantization of the saved truth bounds the PSNR, not the reconstruction.
  CHECK(r.out.find("PSNR") != std::string::npos);
  const double psnr = std::stod(r.out.substr(r.out.find("PSNR") + 4));
  CHECK(psnr >= 60.0);
}

TEST_CASE("2d correction through the CLI frame stack") {
  Workdir dir("frames");
  std::ofstream(dir("exp.cfg")) << "pattern.n = 16\nscene.width = 12\nscene.channels = 3\n"
                                   "optics.illumination = vignette\noptics.illumination.floor = 0.5\n"
                                   "optics.contrast_floor = 0.1\noptics.supersample = 2\n";
  REQUIRE(invoke({"pattern", "--config", dir("exp.cfg"), "--out", dir("p.txt")}).code == 0);
  REQUIRE(invoke({"simulate", "--config", dir("exp.cfg"), "--pattern", dir("p.txt"), "--out", dir("s.csv"), "--keep-frames",
               dir("frames"), "--save-scene", dir("scene.ppm")})
              .code == 0);
  CHECK(fs::exists(dir("frames/manifest.txt")));
  CHECK(fs::exists(dir("frames/frame_00026.ppm")));
  REQUIRE(invoke({"calibrate", "--config", dir("exp.cfg"), "--pattern", dir("p.txt"), "--out", dir("c.txt")}).code == 0);
  auto r = invoke({"reconstruct", "--config", dir("exp.cfg"), "--pattern", dir("p.txt"), "--calib", dir("c.txt"), "--mode", "2d",
                "--frames", dir("frames"), "--truth", dir("scene.ppm"), "--out", dir("r.ppm")});
  REQUIRE(r.code == 0);
  // 16-bit frames on disk limit this path to about 1e-4 of full scale.
  const double psnr = std::stod(r.out.substr(r.out.find("PSNR") + 4));
  CHECK(psnr >= 60.0);

  r = invoke({"reconstruct", "--pattern", dir("p.txt"), "--calib", dir("c.txt"), "--mode", "2d", "--out", dir("x.ppm")});
  CHECK(r.code == 1);
}

TEST_CASE("sweep command") {
  Workdir dir("sweep");
  const std::vector<std::string> base{"sweep", "--set", "pattern.n=32", "--set", "scene.width=40", "--set", "optics.supersample=1"};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return invoke(a);
  };

  REQUIRE(with({"--param", "optics.step_error", "--values", "0,1e-4,1e-3", "--out", dir("d.csv")}).code == 0);
  const auto ls = lines(slurp(dir("d.csv")));
  REQUIRE(ls.size() == 5);
  CHECK(ls[0] == "# pushframe-sweep v1");
  CHECK(ls[1].find("psnr_mean") != std::string::npos);

  REQUIRE(with({"--set", "recon.mode=naive", "--param", "optics.contrast_floor", "--values", "0,0.05,0.1", "--out", dir("e.csv")})
              .code == 0);
  const auto eps = sweep_psnr(dir("e.csv"));
  REQUIRE(eps.size() == 3);
  CHECK(eps[0] >= eps[1]);
  CHECK(eps[1] >= eps[2]);

  REQUIRE(with({"--param", "seed", "--values", "1,2,3", "--out", dir("s.csv")}).code == 0);
  const auto seeds = sweep_psnr(dir("s.csv"));
  CHECK(seeds[0] == seeds[1]);
  CHECK(seeds[1] == seeds[2]);

  CHECK(with({"--param", "optics.nope", "--values", "1", "--out", dir("x.csv")}).code == 1);
}

TEST_CASE("outputs do not depend on worker count") {
  Workdir dir("workers");
  for (const std::string w : {"1", "4"}) {
    REQUIRE(invoke({"simulate", "--set", "pattern.n=64", "--set", "scene.channels=3", "--set", "optics.read_noise=0.05",
                 "--set", "optics.shot_noise=true", "--set", "optics.blur_sigma=0.5", "--workers", w, "--out",
                 dir("s" + w + ".csv")})
                .code == 0);
    REQUIRE(invoke({"pattern", "--n", "64", "--out", dir("p.txt")}).code == 0);
    REQUIRE(invoke({"reconstruct", "--stream", dir("s" + w + ".csv"), "--pattern", dir("p.txt"), "--workers", w, "--out",
                 dir("r" + w + ".ppm"), "--raw", dir("r" + w + ".raw")})
                .code == 0);
  }
  CHECK(slurp(dir("s1.csv")) == slurp(dir("s4.csv")));
  CHECK(slurp(dir("r1.raw")) == slurp(dir("r4.raw")));
  CHECK(slurp(dir("r1.ppm")) == slurp(dir("r4.ppm")));
  CHECK(slurp(dir("r1.ppm.meta")) == slurp(dir("r4.ppm.meta")));
}
