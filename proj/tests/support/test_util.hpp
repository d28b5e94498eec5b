#pragma once

// Shared test helpers and independent oracles. Everything here is written
// from the definitions alone and never calls the library paths it checks.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "lumenfix/image.hpp"
#include "lumenfix/rng.hpp"

namespace testutil {

inline std::filesystem::path fresh_dir(const std::string& tag) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("lumenfix_" + tag + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp_file(const std::filesystem::path& p) {
  std::string out;
  FILE* f = std::fopen(p.string().c_str(), "rb");
  if (!f) return out;
  char buf[4096];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) out.append(buf, n);
  std::fclose(f);
  return out;
}

// Plain separable Gaussian blur with clamped borders and radius ceil(3s),
// the oracle for the huge-sigma_r bilateral limit.
inline lumenfix::ImagePlane gaussian_blur_oracle(const lumenfix::ImagePlane& p, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;

  lumenfix::ImagePlane tmp = p, out = p;
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += k[i + radius] * p.at(std::clamp(x + i, 0, p.width - 1), y);
      tmp.at(x, y) = acc;
    }
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += k[i + radius] * tmp.at(x, std::clamp(y + i, 0, p.height - 1));
      out.at(x, y) = acc;
    }
  return out;
}

// Literal windowed bilateral evaluation, one pixel at a time.
inline double bilateral_pixel_oracle(const lumenfix::ImagePlane& p, int x, int y, double sigma_s,
                                     double sigma_r) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_s));
  const double center = p.at(x, y);
  double acc = 0.0, c = 0.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const double v =
          p.at(std::clamp(x + dx, 0, p.width - 1), std::clamp(y + dy, 0, p.height - 1));
      const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_s * sigma_s)) *
                       std::exp(-(v - center) * (v - center) / (2.0 * sigma_r * sigma_r));
      acc += w * v;
      c += w;
    }
  }
  return acc / c;
}

// Band-limited random plane: blurred white noise stretched into [lo, hi].
inline lumenfix::ImagePlane make_smooth_plane(int w, int h, uint64_t seed, double blur_sigma = 6.0,
                                              double lo = 0.1, double hi = 0.9) {
  lumenfix::Rng rng(seed);
  lumenfix::ImagePlane p(w, h);
  for (double& v : p.pixels) v = rng.uniform01();
  p = gaussian_blur_oracle(p, blur_sigma);
  return lumenfix::linear_stretch(p, lo, hi);
}

inline double max_abs_diff(const lumenfix::ImagePlane& a, const lumenfix::ImagePlane& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.pixels[i] - b.pixels[i]));
  return m;
}

}  // namespace testutil
