#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lumenfix/metrics.hpp"
#include "lumenfix/rng.hpp"

using namespace lumenfix;

TEST_CASE("entropy: constant, two-level, full-histogram cases") {
  CHECK(entropy(ImagePlane(8, 8, 0.37)) == 0.0);

  ImagePlane half(2, 1);
  half.pixels = {0.0, 1.0};
  CHECK(entropy(half) == doctest::Approx(1.0).epsilon(1e-12));

  // Four pixels per level puts every one of the 256 bins at equal mass.
  ImagePlane full(256, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 256; ++x) full.at(x, y) = x / 255.0;
  CHECK(entropy(full) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("entropy: bounded by 8 bits and a function of the histogram only") {
  Rng rng(21);
  ImagePlane p(16, 16);
  for (double& v : p.pixels) v = rng.uniform01();
  const double h = entropy(p);
  CHECK(h >= 0.0);
  CHECK(h <= 8.0);

  ImagePlane shuffled = p;
  for (size_t i = shuffled.size(); i > 1; --i)
    std::swap(shuffled.pixels[i - 1], shuffled.pixels[static_cast<size_t>(rng.uniform_int(static_cast<int>(i)))]);
  CHECK(entropy(shuffled) == h);
}

TEST_CASE("mean_value: endpoint and midpoint cases") {
  CHECK(mean_value(ImagePlane(4, 4, 0.0)) == 0.0);
  CHECK(mean_value(ImagePlane(4, 4, 1.0)) == 1.0);

  ImagePlane half(2, 2);
  half.pixels = {0.0, 0.0, 1.0, 1.0};
  CHECK(mean_value(half) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("mean_value commutes with affine maps") {
  Rng rng(4);
  ImagePlane p(7, 5);
  for (double& v : p.pixels) v = rng.uniform01();
  const double m = mean_value(p);
  ImagePlane q = p;
  for (double& v : q.pixels) v = 0.4 * v + 0.13;
  CHECK(mean_value(q) == doctest::Approx(0.4 * m + 0.13).epsilon(1e-12));
}

TEST_CASE("avg_gradient: constant and ramp closed forms") {
  CHECK(avg_gradient(ImagePlane(5, 5, 0.8)) == 0.0);

  // Horizontal ramp with slope c per pixel: every interior gradient is c/sqrt(2).
  const double c = 0.01;
  ImagePlane ramp(10, 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 10; ++x) ramp.at(x, y) = c * x;
  CHECK(avg_gradient(ramp) == doctest::Approx(c / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("avg_gradient: scales linearly with pixel scaling") {
  Rng rng(5);
  ImagePlane p(9, 9);
  for (double& v : p.pixels) v = rng.uniform01();
  const double g = avg_gradient(p);
  ImagePlane q = p;
  for (double& v : q.pixels) v *= 0.25;
  CHECK(avg_gradient(q) == doctest::Approx(0.25 * g).epsilon(1e-12));
}

TEST_CASE("avg_gradient: rejects images smaller than 2x2") {
  CHECK_THROWS_AS(avg_gradient(ImagePlane(1, 5, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(avg_gradient(ImagePlane(5, 1, 0.0)), std::invalid_argument);
}

TEST_CASE("compute_metrics on color images measures the luminance") {
  RgbImage img(4, 4);
  for (size_t i = 0; i < img.r.size(); ++i) {
    img.r.pixels[i] = 0.5;
    img.g.pixels[i] = 0.25;
    img.b.pixels[i] = 0.75;
  }
  const MetricsReport m = compute_metrics(img);
  CHECK(m.mean_value ==
        doctest::Approx(0.2989 * 0.5 + 0.587 * 0.25 + 0.114 * 0.75).epsilon(1e-12));
  CHECK(m.entropy_bits == 0.0);
  CHECK(m.avg_gradient == 0.0);
}
