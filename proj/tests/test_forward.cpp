#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "pushframe/error.hpp"
#include "pushframe/forward.hpp"

using namespace pushframe;

namespace {

OpticsConfig ideal(int supersample = 1) {
  OpticsConfig cfg;
  cfg.supersample = supersample;
  return cfg;
}

double frame_sum(const Image& f) { return std::accumulate(f.data().begin(), f.data().end(), 0.0); }

}  // namespace

TEST_CASE("render_frame with an all-on and an all-off mask") {
  const PatternSpec one(sylvester(1));
  const SceneImage scene = synthetic(SyntheticKind::uniform, 1, 3);
  OpticsConfig cfg = ideal(4);
  const Image on = render_frame(scene, one, cfg, 1);
  CHECK(on.rows() == 4);
  CHECK(on.cols() == 4);
  for (double v : on.data()) CHECK(v == 1.0);

  cfg.contrast_floor = 0.1;
  const Image off = render_frame(scene, one, cfg, 1, Polarity::complement);
  for (double v : off.data()) CHECK(v == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("render_frame honours mask, floor and stray light") {
  const PatternSpec p(sylvester(4));
  const SceneImage scene = synthetic(SyntheticKind::uniform, 4, 8);
  OpticsConfig cfg = ideal(2);
  cfg.contrast_floor = 0.2;
  cfg.stray_light = 0.05;
  const Image f = render_frame(scene, p, cfg, 5);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c) CHECK(f.at(r, c) == doctest::Approx((p.on(r / 2, c / 2) ? 1.0 : 0.2) + 0.05));
  CHECK_THROWS_AS(render_frame(scene, p, cfg, 11), ValidationError);
}

TEST_CASE("blur kernel is renormalized") {
  const PatternSpec p(sylvester(16));
  const SceneImage scene = synthetic(SyntheticKind::delta, 16, 16, {.delta_row = 5, .delta_col = 4});
  OpticsConfig cfg = ideal(2);
  const std::size_t t = 12;  // pattern column 8 sees the delta, away from the frame edge
  const Image sharp = render_frame(scene, p, cfg, t);
  cfg.blur_sigma = 0.8;
  const Image blurred = render_frame(scene, p, cfg, t);
  REQUIRE(frame_sum(sharp) > 0.0);
  CHECK(std::abs(frame_sum(blurred) - frame_sum(sharp)) / frame_sum(sharp) < 1e-6);
  // Light actually spread out.
  REQUIRE(sharp.at(10, 16) == 1.0);
  CHECK(blurred.at(10, 16) < sharp.at(10, 16));
}

TEST_CASE("integrate_columns") {
  CHECK(integrate_columns(Image(4, 4, 1, 1.0), 1) == std::vector<double>{4, 4, 4, 4});
  CHECK(integrate_columns(Image(8, 8, 1, 1.0), 2) == std::vector<double>{4, 4, 4, 4});
  Image d(4, 4, 1);
  d.at(1, 2) = 3.0;
  CHECK(integrate_columns(d, 1) == std::vector<double>{0, 0, 3, 0});
  Image rgb(2, 2, 3, 1.0);
  rgb.at(0, 1, 2) = 5.0;
  CHECK(integrate_columns(rgb, 1) == std::vector<double>{2, 2, 2, 2, 2, 6});
  CHECK_THROWS_AS(integrate_columns(Image(6, 6, 1), 4), ValidationError);
}

TEST_CASE("simulate traces a single pixel through the mask") {
  for (const PatternSpec& p : {PatternSpec(sylvester(16)), scramble(sylvester(16), 4, 5)}) {
    const std::size_t j = 5, k = 3;
    const SceneImage scene = synthetic(SyntheticKind::delta, 16, 9, {.delta_row = j, .delta_col = k});
    const auto stream = simulate(scene, p, ideal()).stream;
    CHECK(stream.meta().steps == 9 + 16 - 1);
    for (std::size_t t = 0; t < stream.meta().steps; ++t) {
      for (std::size_t i = 0; i < 16; ++i) {
        const double want = (t == k + i && p.on(j, i)) ? 1.0 : 0.0;
        REQUIRE(stream.at(t, i, 0) == want);
      }
    }
  }
}

TEST_CASE("simulate of a uniform scene counts mask ones") {
  const PatternSpec p(sylvester(4));
  const auto stream = simulate(synthetic(SyntheticKind::uniform, 4, 6), p, ideal()).stream;
  for (std::size_t t = 3; t <= 5; ++t) {
    CHECK(stream.at(t, 0, 0) == 4.0);
    for (std::size_t i = 1; i < 4; ++i) CHECK(stream.at(t, i, 0) == 2.0);
  }
}

TEST_CASE("ideal simulate equals the direct inner product") {
  const PatternSpec p = scramble(sylvester(32), 8, 6);
  const auto h = oracle::hadamard_by_doubling(32);
  const SceneImage scene = synthetic(SyntheticKind::sinusoid, 32, 20, {.channels = 3});
  const auto stream = simulate(scene, p, ideal()).stream;
  for (std::size_t t = 0; t < stream.meta().steps; ++t)
    for (std::size_t i = 0; i < 32; ++i)
      for (std::size_t c = 0; c < 3; ++c) REQUIRE(stream.at(t, i, c) == oracle::ideal_sum(scene, h, p.permutation(), t, i, c));
}

TEST_CASE("simulate is linear without noise or stray light") {
  const PatternSpec p = scramble(sylvester(16), 1, 5);
  OpticsConfig cfg = ideal(2);
  cfg.blur_sigma = 0.6;
  cfg.contrast_floor = 0.07;
  cfg.step_error = 0.01;
  cfg.shear_rows_per_column = 0.3;
  cfg.illumination = IlluminationField::vignette(0.4, 0.6, 0.5, 0.3);
  const SceneImage a = synthetic(SyntheticKind::sinusoid, 16, 12);
  const SceneImage b = synthetic(SyntheticKind::checkerboard, 16, 12, {.period = 3});
  const double alpha = 0.3, beta = 1.7;
  Image mix(16, 12, 1);
  for (std::size_t k = 0; k < mix.size(); ++k) mix.data()[k] = alpha * a.pixels().data()[k] + beta * b.pixels().data()[k];
  const auto sa = simulate(a, p, cfg).stream, sb = simulate(b, p, cfg).stream, sm = simulate(SceneImage(mix), p, cfg).stream;
  for (std::size_t k = 0; k < sm.sums().size(); ++k) {
    REQUIRE(sm.sums()[k] == doctest::Approx(alpha * sa.sums()[k] + beta * sb.sums()[k]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("simulate is deterministic and independent of worker count") {
  const PatternSpec p = scramble(sylvester(32), 2, 6);
  OpticsConfig cfg = ideal(2);
  cfg.read_noise = 0.05;
  cfg.shot_noise = true;
  cfg.blur_sigma = 0.4;
  cfg.seed = 99;
  const SceneImage scene = synthetic(SyntheticKind::sinusoid, 32, 24, {.channels = 3});
  const auto one = simulate(scene, p, cfg, {.workers = 1}).stream;
  const auto many = simulate(scene, p, cfg, {.workers = 5}).stream;
  const auto again = simulate(scene, p, cfg, {.workers = 3}).stream;
  CHECK(one == many);
  CHECK(one == again);
  cfg.seed = 100;
  CHECK_FALSE(simulate(scene, p, cfg).stream == one);
}

TEST_CASE("read noise has the configured spread") {
  const PatternSpec p(sylvester(64));
  OpticsConfig cfg = ideal();
  cfg.read_noise = 0.25;
  cfg.seed = 5;
  const SceneImage dark = synthetic(SyntheticKind::uniform, 64, 40, {.level = 0.0});
  const auto stream = simulate(dark, p, cfg).stream;
  double sum = 0.0, sq = 0.0;
  for (double v : stream.sums()) {
    sum += v;
    sq += v * v;
  }
  const double count = static_cast<double>(stream.sums().size());
  const double mean = sum / count;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::sqrt(sq / count - mean * mean) == doctest::Approx(0.25).epsilon(0.03));
}

TEST_CASE("differential readout yields +-1 code sums") {
  const PatternSpec p = scramble(sylvester(16), 3, 5);
  OpticsConfig cfg = ideal();
  cfg.readout = Readout::differential;
  const SceneImage scene = synthetic(SyntheticKind::sinusoid, 16, 5);
  const auto stream = simulate(scene, p, cfg).stream;
  CHECK(stream.meta().readout == Readout::differential);
  for (std::size_t t = 0; t < stream.meta().steps; ++t) {
    for (std::size_t i = 0; i < 16; ++i) {
      const long long x = static_cast<long long>(t) - static_cast<long long>(i);
      double want = 0.0;
      if (x >= 0 && x < 5)
        for (std::size_t j = 0; j < 16; ++j) want += p(j, i) * scene.at(j, static_cast<std::size_t>(x));
      REQUIRE(stream.at(t, i, 0) == doctest::Approx(want).epsilon(1e-12).scale(1.0));
    }
  }
  CHECK_THROWS_AS(simulate(scene, p, cfg, {.keep_frames = true}), ValidationError);
}

TEST_CASE("keep_frames and frame sink see the pre-integration frames") {
  const PatternSpec p(sylvester(8));
  const SceneImage scene = synthetic(SyntheticKind::checkerboard, 8, 4);
  const OpticsConfig cfg = ideal(2);
  std::vector<int> seen(11, 0);
  const auto result = simulate(scene, p, cfg, {.keep_frames = true, .frame_sink = [&](std::size_t t, const Image&) { seen[t]++; }});
  REQUIRE(result.frames.size() == 11);
  for (int s : seen) CHECK(s == 1);
  for (std::size_t t = 0; t < 11; ++t) {
    CHECK(result.frames[t] == render_frame(scene, p, cfg, t));
    const auto sums = integrate_columns(result.frames[t], 2);
    for (std::size_t i = 0; i < 8; ++i) CHECK(sums[i] == result.stream.at(t, i, 0));
  }
}

TEST_CASE("step error and shear move the sampled scene") {
  const PatternSpec p(sylvester(8));
  const SceneImage scene = synthetic(SyntheticKind::delta, 8, 10, {.delta_row = 2, .delta_col = 4});
  OpticsConfig cfg = ideal();
  cfg.step_error = 0.5;
  // Pattern column 2 at step 4 samples x = 4 * 1.5 - 2 = 4.
  const auto s1 = simulate(scene, p, cfg).stream;
  CHECK(s1.at(4, 2, 0) == (p.on(2, 2) ? 1.0 : 0.0));
  cfg.step_error = 0.0;
  cfg.shear_rows_per_column = 1.0;
  // Scene column 4 is shifted down by 4 rows: the delta lands on row 6.
  const auto frame = render_frame(scene, p, cfg, 4);
  CHECK(frame.at(6, 0) == (p.on(6, 0) ? 1.0 : 0.0));
  CHECK(frame.at(2, 0) == 0.0);
}

TEST_CASE("white calibration") {
  const PatternSpec p(sylvester(4));
  const auto calib = white_calibration(p, ideal());
  CHECK(calib.weights == std::vector<double>{4, 2, 2, 2});
  CHECK(calib.reference[0] == 2.5);
  CHECK(calib.white_index == 0);
  REQUIRE(calib.white_frame);
  CHECK(calib.white_frame->rows() == 4);

  OpticsConfig gains = ideal();
  gains.illumination = IlluminationField::columns({2, 1, 1, 1});
  CHECK(white_calibration(p, gains).weights == std::vector<double>{8, 2, 2, 2});

  OpticsConfig noisy = ideal(2);
  noisy.read_noise = 1.0;
  noisy.shot_noise = true;
  noisy.blur_sigma = 0.5;
  const auto a = white_calibration(p, noisy, 3), b = white_calibration(p, noisy, 3);
  CHECK(a.weights == b.weights);
  CHECK(a.weights.size() == 12);
  CHECK(*a.white_frame == *b.white_frame);
}

TEST_CASE("optics validation names the field") {
  const PatternSpec p(sylvester(4));
  const SceneImage scene = synthetic(SyntheticKind::uniform, 4, 4);
  OpticsConfig cfg = ideal();
  cfg.contrast_floor = 0.5;
  CHECK_THROWS_WITH_AS(simulate(scene, p, cfg), doctest::Contains("contrast_floor"), ValidationError);
  cfg = ideal();
  cfg.read_noise = std::nan("");
  CHECK_THROWS_WITH_AS(simulate(scene, p, cfg), doctest::Contains("read_noise"), ValidationError);
  cfg = ideal();
  cfg.illumination = IlluminationField::columns({1, 1});
  CHECK_THROWS_AS(simulate(scene, p, cfg), ValidationError);
  CHECK_THROWS_AS(simulate(synthetic(SyntheticKind::uniform, 8, 4), p, ideal()), ValidationError);
}
