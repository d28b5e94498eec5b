#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "lumenfix/image.hpp"
#include "lumenfix/rng.hpp"
#include "support/test_util.hpp"

using namespace lumenfix;

namespace {

void write_bytes(const std::filesystem::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

}  // namespace

TEST_CASE("load_image: P5 zero bytes map to 0.0") {
  const auto dir = testutil::fresh_dir("img");
  write_bytes(dir / "z.pgm", std::string("P5\n3 2\n255\n") + std::string(6, '\0'));
  const auto loaded = load_image((dir / "z.pgm").string());
  const auto& p = std::get<ImagePlane>(loaded);
  CHECK(p.width == 3);
  CHECK(p.height == 2);
  for (double v : p.pixels) CHECK(v == 0.0);
}

TEST_CASE("load_image: P6 255 bytes map to 1.0") {
  const auto dir = testutil::fresh_dir("img");
  write_bytes(dir / "w.ppm", std::string("P6\n2 2\n255\n") + std::string(12, '\xff'));
  const RgbImage img = std::get<RgbImage>(load_image((dir / "w.ppm").string()));
  for (double v : img.r.pixels) CHECK(v == 1.0);
  for (double v : img.g.pixels) CHECK(v == 1.0);
  for (double v : img.b.pixels) CHECK(v == 1.0);
}

TEST_CASE("load_image: single byte 128 divides to 128/255") {
  const auto dir = testutil::fresh_dir("img");
  write_bytes(dir / "m.pgm", std::string("P5\n1 1\n255\n") + std::string(1, '\x80'));
  const ImagePlane p = std::get<ImagePlane>(load_image((dir / "m.pgm").string()));
  CHECK(p.pixels[0] == doctest::Approx(128.0 / 255.0).epsilon(1e-15));
}

TEST_CASE("load_image: header comments are tolerated") {
  const auto dir = testutil::fresh_dir("img");
  write_bytes(dir / "c.pgm", std::string("P5\n# a comment\n2 1 # trailing\n255\n") + "\x10\x20");
  const ImagePlane p = std::get<ImagePlane>(load_image((dir / "c.pgm").string()));
  CHECK(p.width == 2);
  CHECK(p.pixels[0] == doctest::Approx(16.0 / 255.0));
}

TEST_CASE("load_image errors carry byte offsets") {
  const auto dir = testutil::fresh_dir("img");

  write_bytes(dir / "bad_magic.pgm", "P3\n1 1\n255\n0");
  CHECK_THROWS_WITH_AS(load_image((dir / "bad_magic.pgm").string()),
                       doctest::Contains("magic"), CodecError);

  write_bytes(dir / "bad_maxval.pgm", std::string("P5\n1 1\n65535\n") + std::string(2, '\0'));
  try {
    load_image((dir / "bad_maxval.pgm").string());
    FAIL("expected CodecError");
  } catch (const CodecError& e) {
    CHECK(std::string(e.what()).find("maxval 65535") != std::string::npos);
    CHECK(std::string(e.what()).find("byte offset 7") != std::string::npos);
  }

  write_bytes(dir / "short.ppm", std::string("P6\n2 2\n255\n") + std::string(5, '\x01'));
  CHECK_THROWS_WITH_AS(load_image((dir / "short.ppm").string()),
                       doctest::Contains("truncated"), CodecError);
}

TEST_CASE("save_image: quantization endpoints and round trip") {
  const auto dir = testutil::fresh_dir("img");
  ImagePlane p(3, 1);
  p.pixels = {0.0, 0.5, 1.0};
  save_image(p, (dir / "q.pgm").string());

  const std::string raw = testutil::slurp_file(dir / "q.pgm");
  const auto raster = raw.substr(raw.size() - 3);
  CHECK(static_cast<unsigned char>(raster[0]) == 0);
  CHECK(static_cast<unsigned char>(raster[1]) == 128);  // round(0.5 * 255) half-up
  CHECK(static_cast<unsigned char>(raster[2]) == 255);

  const ImagePlane back = std::get<ImagePlane>(load_image((dir / "q.pgm").string()));
  CHECK(back.pixels[1] == doctest::Approx(128.0 / 255.0).epsilon(1e-15));
}

TEST_CASE("save_image then load_image is identity on byte-valued planes") {
  const auto dir = testutil::fresh_dir("img");
  ImagePlane zero(4, 3, 0.0);
  save_image(zero, (dir / "z.pgm").string());
  const ImagePlane back = std::get<ImagePlane>(load_image((dir / "z.pgm").string()));
  CHECK(back.pixels == zero.pixels);
}

TEST_CASE("codec round trip is bit-exact at 8-bit precision") {
  const auto dir = testutil::fresh_dir("img");
  Rng rng(7);
  RgbImage img(17, 9);
  for (size_t i = 0; i < img.r.size(); ++i) {
    img.r.pixels[i] = rng.uniform_int(256) / 255.0;
    img.g.pixels[i] = rng.uniform_int(256) / 255.0;
    img.b.pixels[i] = rng.uniform_int(256) / 255.0;
  }
  save_image(img, (dir / "a.ppm").string());
  const std::string first = testutil::slurp_file(dir / "a.ppm");
  const RgbImage back = std::get<RgbImage>(load_image((dir / "a.ppm").string()));
  save_image(back, (dir / "b.ppm").string());
  CHECK(first == testutil::slurp_file(dir / "b.ppm"));
}

TEST_CASE("luminance: printed coefficients") {
  RgbImage img(1, 1);
  img.r.pixels[0] = 1.0;
  img.g.pixels[0] = 1.0;
  img.b.pixels[0] = 1.0;
  CHECK(luminance(img).pixels[0] == doctest::Approx(0.9999).epsilon(1e-12));

  img.g.pixels[0] = 0.0;
  img.b.pixels[0] = 0.0;
  CHECK(luminance(img).pixels[0] == doctest::Approx(0.2989).epsilon(1e-12));

  img.r.pixels[0] = 0.0;
  CHECK(luminance(img).pixels[0] == 0.0);
}

TEST_CASE("luminance: gray pixel scales by the coefficient sum") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const double v = rng.uniform01();
    RgbImage img(1, 1);
    img.r.pixels[0] = img.g.pixels[0] = img.b.pixels[0] = v;
    CHECK(luminance(img).pixels[0] == doctest::Approx(0.9999 * v).epsilon(1e-12));
    CHECK(luminance(img, true).pixels[0] == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("log domain: floor, identity, round trip") {
  ImagePlane p(3, 1);
  p.pixels = {1.0, 0.0, 0.25};
  const ImagePlane lg = to_log_domain(p);
  CHECK(lg.domain == Domain::log);
  CHECK(lg.pixels[0] == 0.0);
  CHECK(lg.pixels[1] == doctest::Approx(std::log(1.0 / 255.0)).epsilon(1e-12));
  CHECK(lg.pixels[1] == doctest::Approx(-5.5412635451584258).epsilon(1e-12));

  const ImagePlane back = from_log_domain(lg);
  CHECK(back.domain == Domain::linear);
  CHECK(back.pixels[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(back.pixels[2] == doctest::Approx(0.25).epsilon(1e-12));

  // Values above 0 in log domain clamp to 1 on the way back.
  ImagePlane hot(1, 1, 0.5, Domain::log);
  CHECK(from_log_domain(hot).pixels[0] == 1.0);
}

TEST_CASE("histogram_truncate: identity and degenerate cases") {
  ImagePlane p(4, 1);
  p.pixels = {0.1, 0.9, 0.4, 0.6};
  CHECK(histogram_truncate(p, 0.0, 0.0).pixels == p.pixels);

  ImagePlane flat(5, 5, 0.3);
  CHECK(histogram_truncate(flat, 0.2, 0.2).pixels == flat.pixels);
}

TEST_CASE("histogram_truncate: 100-pixel ramp clamps to 2nd-smallest/-largest") {
  ImagePlane p(100, 1);
  for (int i = 0; i < 100; ++i) p.pixels[i] = i / 100.0;
  const ImagePlane t = histogram_truncate(p, 0.01, 0.01);
  CHECK(plane_min(t) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(plane_max(t) == doctest::Approx(0.98).epsilon(1e-15));
}

TEST_CASE("histogram_truncate: never widens the range, idempotent") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    ImagePlane p(12, 7);
    for (double& v : p.pixels) v = rng.uniform01();
    const double range_before = plane_max(p) - plane_min(p);
    const ImagePlane once = histogram_truncate(p, 0.1, 0.05);
    CHECK(plane_max(once) - plane_min(once) <= range_before + 1e-15);
    const ImagePlane twice = histogram_truncate(once, 0.1, 0.05);
    CHECK(twice.pixels == once.pixels);
  }
}

TEST_CASE("histogram_truncate: rejects bad fractions") {
  ImagePlane p(2, 2, 0.5);
  CHECK_THROWS_AS(histogram_truncate(p, 0.5, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(histogram_truncate(p, -0.1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(histogram_truncate(p, 0.1, 0.6), std::invalid_argument);
}

TEST_CASE("linear_stretch: identity, midpoint rule, affine map") {
  ImagePlane span(2, 1);
  span.pixels = {0.0, 1.0};
  CHECK(linear_stretch(span, 0.0, 1.0).pixels == span.pixels);

  ImagePlane flat(3, 1, 0.3);
  for (double v : linear_stretch(flat, 0.0, 1.0).pixels) CHECK(v == doctest::Approx(0.5));

  ImagePlane p(3, 1);
  p.pixels = {0.2, 0.4, 0.6};
  const ImagePlane s = linear_stretch(p, 0.0, 1.0);
  CHECK(s.pixels[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.pixels[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.pixels[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("linear_stretch: output extremes hit the targets within 1e-12") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    ImagePlane p(9, 4);
    for (double& v : p.pixels) v = rng.uniform(-2.0, 3.0);
    const ImagePlane s = linear_stretch(p, -0.5, 1.5);
    CHECK(std::abs(plane_min(s) - -0.5) < 1e-12);
    CHECK(std::abs(plane_max(s) - 1.5) < 1e-12);
  }
  ImagePlane p(2, 1, 0.1);
  CHECK_THROWS_AS(linear_stretch(p, 1.0, 1.0), std::invalid_argument);
}
