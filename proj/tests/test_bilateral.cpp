#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lumenfix/bilateral.hpp"
#include "lumenfix/rng.hpp"
#include "support/test_util.hpp"

using namespace lumenfix;

namespace {

ImagePlane step_edge(int w, int h, double lo, double hi) {
  ImagePlane p(w, h, lo);
  for (int y = 0; y < h; ++y)
    for (int x = w / 2; x < w; ++x) p.at(x, y) = hi;
  return p;
}

}  // namespace

TEST_CASE("bilateral_direct: constant image is a fixed point") {
  const ImagePlane p(16, 12, 0.42);
  for (const double sr : {0.05, 1.0}) {
    const ImagePlane out = bilateral_direct(p, {3.0, sr});
    CHECK(testutil::max_abs_diff(out, p) < 1e-12);
  }
}

TEST_CASE("bilateral_direct: huge sigma_r degenerates to a Gaussian blur") {
  const ImagePlane p = testutil::make_smooth_plane(32, 24, 101, 3.0);
  const ImagePlane out = bilateral_direct(p, {2.0, 1e6});
  const ImagePlane blur = testutil::gaussian_blur_oracle(p, 2.0);
  CHECK(testutil::max_abs_diff(out, blur) < 1e-9);
}

TEST_CASE("bilateral_direct: matches the per-pixel windowed-sum oracle") {
  Rng rng(55);
  ImagePlane p(14, 11);
  for (double& v : p.pixels) v = rng.uniform01();
  const BilateralParams params{1.5, 0.2};
  const ImagePlane out = bilateral_direct(p, params);
  for (const auto [x, y] : {std::pair{0, 0}, {13, 10}, {6, 5}, {2, 9}}) {
    CHECK(out.at(x, y) ==
          doctest::Approx(testutil::bilateral_pixel_oracle(p, x, y, 1.5, 0.2)).epsilon(1e-12));
  }
}

TEST_CASE("bilateral_direct: step edge survives, far pixels barely move") {
  const ImagePlane p = step_edge(64, 64, 0.1, 0.9);
  const ImagePlane out = bilateral_direct(p, {4.0, 0.05});
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const int dist_from_edge = x < 32 ? 31 - x : x - 32;
      if (dist_from_edge >= 8) CHECK(std::abs(out.at(x, y) - p.at(x, y)) < 1e-3);
    }
  }
}

TEST_CASE("grid_build: 1x1 image fills exactly one cell") {
  const ImagePlane p(1, 1, 0.7);
  const BilateralGrid g = grid_build(p, 4.0, 0.1);
  int nonzero = 0;
  for (const GridCell& c : g.cells) {
    if (c.weight_sum != 0.0) {
      ++nonzero;
      CHECK(c.value_sum == 0.7);
      CHECK(c.weight_sum == 1.0);
    } else {
      CHECK(c.value_sum == 0.0);
    }
  }
  CHECK(nonzero == 1);
}

TEST_CASE("grid_build: total weight equals pixel count exactly") {
  Rng rng(9);
  for (const auto [w, h] : {std::pair{17, 13}, {64, 64}, {1, 31}}) {
    ImagePlane p(w, h);
    for (double& v : p.pixels) v = rng.uniform01();
    const BilateralGrid g = grid_build(p, 3.0, 0.07);
    CHECK(g.total_weight() == doctest::Approx(w * h).epsilon(1e-12));
  }
}

TEST_CASE("grid_build: colliding pixels accumulate in one cell") {
  ImagePlane p(2, 1);
  p.pixels = {0.5, 0.55};
  // Both pixels round to spatial cell 0 and the same range cell.
  const BilateralGrid g = grid_build(p, 4.0, 0.25);
  int nonzero = 0;
  for (const GridCell& c : g.cells) {
    if (c.weight_sum != 0.0) {
      ++nonzero;
      CHECK(c.value_sum == doctest::Approx(1.05).epsilon(1e-12));
      CHECK(c.weight_sum == 2.0);
    }
  }
  CHECK(nonzero == 1);
}

TEST_CASE("grid_blur: zero-weight grid stays zero") {
  ImagePlane p(4, 4, 0.5);
  BilateralGrid g = grid_build(p, 2.0, 0.1);
  for (GridCell& c : g.cells) c = {0.0, 0.0};
  const BilateralGrid out = grid_blur(g, 1.0);
  for (const GridCell& c : out.cells) {
    CHECK(c.value_sum == 0.0);
    CHECK(c.weight_sum == 0.0);
  }
}

TEST_CASE("grid_blur: unit impulse reproduces the normalized 3-D kernel") {
  BilateralGrid g;
  g.nx = g.ny = g.nt = 9;
  g.s_spatial = g.s_range = 1.0;
  g.cells.assign(9 * 9 * 9, {});
  g.cell(4, 4, 4) = {0.0, 1.0};

  const double sigma = 1.0;
  const BilateralGrid out = grid_blur(g, sigma);

  // Tabulate the sampled normalized 1-D kernel, radius ceil(3 sigma).
  const int radius = 3;
  double k[7], sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-i * i / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;

  for (int t = 0; t < 9; ++t) {
    for (int y = 0; y < 9; ++y) {
      for (int x = 0; x < 9; ++x) {
        const int dx = x - 4, dy = y - 4, dt = t - 4;
        const double expect =
            (std::abs(dx) <= radius && std::abs(dy) <= radius && std::abs(dt) <= radius)
                ? k[dx + radius] * k[dy + radius] * k[dt + radius]
                : 0.0;
        CHECK(out.cell(x, y, t).weight_sum == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
  CHECK(out.total_weight() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("grid_slice: constant image through build-blur-slice is unchanged") {
  const ImagePlane p(20, 15, 0.33);
  const BilateralGrid g = grid_blur(grid_build(p, 4.0, 0.1), 1.0);
  const ImagePlane out = grid_slice(g, p);
  CHECK(testutil::max_abs_diff(out, p) < 1e-9);
}

TEST_CASE("grid_slice: unblurred slice at cell centers returns the input") {
  // s_spatial = 1 puts every pixel at a spatial cell center; values at
  // exact multiples of s_range land on range centers.
  ImagePlane p(6, 5);
  Rng rng(77);
  for (double& v : p.pixels) v = rng.uniform_int(11) * 0.1;
  const BilateralGrid g = grid_build(p, 1.0, 0.1);
  const ImagePlane out = grid_slice(g, p);
  CHECK(testutil::max_abs_diff(out, p) < 1e-9);
}

TEST_CASE("bilateral_fast: constant image unchanged") {
  const ImagePlane p(33, 21, 0.6);
  const ImagePlane out = bilateral_fast(p, {8.0, 0.1});
  CHECK(testutil::max_abs_diff(out, p) < 1e-9);
}

TEST_CASE("bilateral_fast: agrees with direct on a smooth random plane") {
  const ImagePlane p = testutil::make_smooth_plane(128, 128, 2024, 8.0);
  const BilateralParams params{8.0, 0.1};
  const ImagePlane fast = bilateral_fast(p, params);
  const ImagePlane direct = bilateral_direct(p, params);
  CHECK(testutil::max_abs_diff(fast, direct) <= 0.03);
}

TEST_CASE("bilateral_fast: step edge stays within module tolerance of direct") {
  const ImagePlane p = step_edge(64, 64, 0.1, 0.9);
  const BilateralParams params{4.0, 0.1};
  const ImagePlane fast = bilateral_fast(p, params);
  const ImagePlane direct = bilateral_direct(p, params);
  CHECK(testutil::max_abs_diff(fast, direct) <= 3.0 * params.sigma_r);
}

TEST_CASE("both paths stay within [min, max] of the input") {
  Rng rng(31);
  for (int trial = 0; trial < 4; ++trial) {
    ImagePlane p(24, 18);
    for (double& v : p.pixels) v = rng.uniform01();
    const double lo = plane_min(p), hi = plane_max(p);
    for (const ImagePlane& out : {bilateral_direct(p, {3.0, 0.1}), bilateral_fast(p, {3.0, 0.1})}) {
      CHECK(plane_min(out) >= lo - 1e-9);
      CHECK(plane_max(out) <= hi + 1e-9);
    }
  }
}

TEST_CASE("shift equivariance on interior pixels") {
  const int shift = 5;
  const ImagePlane base = testutil::make_smooth_plane(48, 40, 12, 4.0);
  ImagePlane shifted(48, 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 48; ++x)
      shifted.at(x, y) = base.at(std::clamp(x - shift, 0, 47), y);

  const BilateralParams params{2.0, 0.15};
  const int radius = static_cast<int>(std::ceil(3.0 * params.sigma_s));
  const ImagePlane f_base = bilateral_direct(base, params);
  const ImagePlane f_shift = bilateral_direct(shifted, params);
  for (int y = radius; y < 40 - radius; ++y) {
    for (int x = radius + shift; x < 48 - radius; ++x) {
      CHECK(f_shift.at(x, y) == doctest::Approx(f_base.at(x - shift, y)).epsilon(1e-9));
    }
  }
}

TEST_CASE("parameter validation") {
  const ImagePlane p(4, 4, 0.5);
  CHECK_THROWS_AS(bilateral_direct(p, {0.0, 0.1}), std::invalid_argument);
  CHECK_THROWS_AS(bilateral_fast(p, {1.0, -0.1}), std::invalid_argument);
  CHECK_THROWS_AS(grid_build(p, 0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(grid_blur(grid_build(p, 1.0, 0.1), 0.0), std::invalid_argument);
}
