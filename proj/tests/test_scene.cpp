#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "oracles.hpp"
#include "pushframe/error.hpp"
#include "pushframe/netpbm.hpp"
#include "pushframe/scene.hpp"
#include "pushframe/util.hpp"

using namespace pushframe;

namespace {
std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("pushframe_test_" + name)).string();
}
}  // namespace

TEST_CASE("netpbm decode normalizes by maxval") {
  const std::string pgm = std::string("P5\n2 1\n255\n") + static_cast<char>(255) + static_cast<char>(0);
  const auto img = decode_netpbm(pgm);
  CHECK(img.maxval == 255);
  CHECK(img.pixels.channels() == 1);
  CHECK(img.pixels.at(0, 0) == 1.0);
  CHECK(img.pixels.at(0, 1) == 0.0);

  std::string ppm = "P6\n# comment\n1 1\n65535\n";
  ppm += std::string(6, '\0');
  const auto rgb = decode_netpbm(ppm);
  CHECK(rgb.pixels.channels() == 3);
  CHECK(rgb.pixels.at(0, 0, 2) == 0.0);

  // Big-endian 16-bit samples.
  std::string be = "P5\n1 1\n1000\n";
  be += static_cast<char>(0x01);
  be += static_cast<char>(0xF4);
  CHECK(decode_netpbm(be).pixels.at(0, 0) == doctest::Approx(500.0 / 1000.0));
}

TEST_CASE("netpbm format errors carry offsets") {
  CHECK_THROWS_AS(decode_netpbm("P2\n1 1\n255\n0"), FormatError);
  CHECK_THROWS_AS(decode_netpbm("P5\n1 x\n255\n"), FormatError);
  CHECK_THROWS_AS(decode_netpbm("P5\n1 1\n70000\n\x01\x02"), FormatError);
  try {
    decode_netpbm("P5\n4 4\n255\nab");
    FAIL("expected truncation error");
  } catch (const FormatError& e) {
    CHECK(e.offset() != FormatError::npos);
    CHECK(std::string(e.what()).find("truncated") != std::string::npos);
  }
}

TEST_CASE("16-bit save/load round trip") {
  KeyedRng rng(11);
  Image img(5, 7, 3);
  for (double& v : img.data()) v = static_cast<double>(rng() >> 11) / 9007199254740992.0;
  const std::string path = temp_path("roundtrip.ppm");
  save_image(path, SceneImage(img));
  const SceneImage back = load_image(path);
  REQUIRE(back.pixels().same_shape(img));
  CHECK(oracle::max_abs_diff(back.pixels(), img) <= 1.0 / 65535.0);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_image(temp_path("missing.pgm")), FormatError);
}

TEST_CASE("scene rejects negative values") {
  Image img(2, 2, 1, 0.5);
  img.at(1, 1) = -0.1;
  CHECK_THROWS_AS(SceneImage{img}, ValidationError);
}

TEST_CASE("resample_height") {
  const SceneImage g = synthetic(SyntheticKind::vertical_gradient, 16, 3);
  CHECK(resample_height(g, 16).pixels() == g.pixels());

  const SceneImage u = synthetic(SyntheticKind::uniform, 5, 4, {.level = 0.5});
  for (std::size_t n : {2u, 3u, 64u, 129u}) {
    const SceneImage r = resample_height(u, n);
    CHECK(r.height() == n);
    for (double v : r.pixels().data()) REQUIRE(v == 0.5);
  }

  Image two(2, 1, 1);
  two.at(1, 0) = 1.0;
  const SceneImage three = resample_height(SceneImage(two), 3);
  CHECK(three.at(0, 0) == 0.0);
  CHECK(three.at(1, 0) == 0.5);
  CHECK(three.at(2, 0) == 1.0);
  CHECK_THROWS_AS(resample_height(u, 1), ValidationError);
}

TEST_CASE("column_at interpolation and zero padding") {
  Image img(2, 3, 1);
  img.at(0, 0) = 1.0;
  img.at(1, 0) = 2.0;
  img.at(0, 1) = 3.0;
  img.at(1, 1) = 6.0;
  const SceneImage s(img);
  CHECK(column_at(s, 1.0) == std::vector<double>{3.0, 6.0});
  CHECK(column_at(s, 0.5) == std::vector<double>{2.0, 4.0});
  CHECK(column_at(s, -0.5) == std::vector<double>{0.5, 1.0});
  CHECK(column_at(s, 2.5) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("column_at is linear in the image") {
  const SceneImage a = synthetic(SyntheticKind::sinusoid, 8, 9);
  const SceneImage b = synthetic(SyntheticKind::checkerboard, 8, 9, {.period = 3});
  const double alpha = 0.7, beta = 1.9;
  Image mix(8, 9, 1);
  for (std::size_t k = 0; k < mix.size(); ++k) mix.data()[k] = alpha * a.pixels().data()[k] + beta * b.pixels().data()[k];
  const SceneImage m(mix);
  for (double x : {-0.75, 0.0, 0.3, 4.5, 7.99, 8.4}) {
    const auto cm = column_at(m, x), ca = column_at(a, x), cb = column_at(b, x);
    for (std::size_t j = 0; j < cm.size(); ++j) CHECK(cm[j] == doctest::Approx(alpha * ca[j] + beta * cb[j]).epsilon(1e-12));
  }
}

TEST_CASE("synthetic fixtures") {
  const SceneImage u = synthetic(SyntheticKind::uniform, 4, 6);
  for (double v : u.pixels().data()) CHECK(v == 1.0);

  const SceneImage d = synthetic(SyntheticKind::delta, 4, 4, {.delta_row = 0, .delta_col = 0});
  int nonzero = 0;
  for (double v : d.pixels().data()) nonzero += v != 0.0;
  CHECK(nonzero == 1);
  CHECK(d.at(0, 0) == 1.0);

  const SceneImage c = synthetic(SyntheticKind::checkerboard, 8, 8, {.period = 2});
  double sum = 0.0;
  for (double v : c.pixels().data()) sum += v;
  CHECK(sum / 64.0 == 0.5);

  const SceneImage rgb = synthetic(SyntheticKind::sinusoid, 16, 20, {.channels = 3});
  CHECK(rgb.channels() == 3);
  for (double v : rgb.pixels().data()) CHECK((v >= 0.0 && v <= 1.0));

  CHECK(parse_synthetic_kind("horizontal-gradient") == SyntheticKind::horizontal_gradient);
  CHECK_THROWS_AS(parse_synthetic_kind("plaid"), ValidationError);
  CHECK_THROWS_AS(synthetic(SyntheticKind::delta, 4, 4, {.delta_row = 4}), ValidationError);
}
