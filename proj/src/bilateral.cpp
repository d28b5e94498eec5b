#include "lumenfix/bilateral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lumenfix {

void BilateralParams::validate() const {
  if (!(sigma_s > 0.0) || !(sigma_r > 0.0))
    throw std::invalid_argument("BilateralParams: sigmas must be > 0");
}

double BilateralGrid::total_weight() const {
  double w = 0.0;
  for (const auto& c : cells) w += c.weight_sum;
  return w;
}

namespace {

std::vector<double> gaussian_kernel_1d(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace

ImagePlane bilateral_direct(const ImagePlane& p, const BilateralParams& params) {
  params.validate();
  const int radius = static_cast<int>(std::ceil(3.0 * params.sigma_s));
  const int side = 2 * radius + 1;

  // Unnormalized spatial weights; the per-pixel factor c normalizes.
  std::vector<double> spatial(static_cast<size_t>(side) * side);
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      spatial[static_cast<size_t>(dy + radius) * side + (dx + radius)] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * params.sigma_s * params.sigma_s));

  const double inv_2sr2 = 1.0 / (2.0 * params.sigma_r * params.sigma_r);
  ImagePlane out = p;
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      const double center = p.at(x, y);
      double acc = 0.0, c = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int sy = clampi(y + dy, 0, p.height - 1);
        const double* row = &p.pixels[static_cast<size_t>(sy) * p.width];
        const double* srow = &spatial[static_cast<size_t>(dy + radius) * side + radius];
        for (int dx = -radius; dx <= radius; ++dx) {
          const double v = row[clampi(x + dx, 0, p.width - 1)];
          const double d = v - center;
          const double w = srow[dx] * std::exp(-d * d * inv_2sr2);
          acc += w * v;
          c += w;
        }
      }
      out.at(x, y) = acc / c;
    }
  }
  return out;
}

BilateralGrid grid_build(const ImagePlane& p, double s_spatial, double s_range) {
  if (!(s_spatial > 0.0) || !(s_range > 0.0))
    throw std::invalid_argument("grid_build: sampling rates must be > 0");

  BilateralGrid g;
  g.s_spatial = s_spatial;
  g.s_range = s_range;
  g.range_origin = plane_min(p);
  const double range_span = plane_max(p) - g.range_origin;
  // Nearest-cell extents plus one boundary cell per side.
  g.nx = static_cast<int>(std::lround((p.width - 1) / s_spatial)) + 3;
  g.ny = static_cast<int>(std::lround((p.height - 1) / s_spatial)) + 3;
  g.nt = static_cast<int>(std::lround(range_span / s_range)) + 3;
  g.cells.assign(static_cast<size_t>(g.nx) * g.ny * g.nt, GridCell{});

  for (int y = 0; y < p.height; ++y) {
    const int iy = static_cast<int>(std::lround(y / s_spatial)) + 1;
    for (int x = 0; x < p.width; ++x) {
      const double v = p.at(x, y);
      const int ix = static_cast<int>(std::lround(x / s_spatial)) + 1;
      const int it = static_cast<int>(std::lround((v - g.range_origin) / s_range)) + 1;
      GridCell& c = g.cell(ix, iy, it);
      c.value_sum += v;
      c.weight_sum += 1.0;
    }
  }
  return g;
}

BilateralGrid grid_blur(const BilateralGrid& g, double sigma_cells) {
  if (!(sigma_cells > 0.0)) throw std::invalid_argument("grid_blur: sigma_cells must be > 0");
  const std::vector<double> kernel = gaussian_kernel_1d(sigma_cells);
  const int radius = (static_cast<int>(kernel.size()) - 1) / 2;

  BilateralGrid out = g;
  BilateralGrid tmp = g;

  // Axis passes: x, then y, then t, each with clamped indices.
  auto pass = [&](const BilateralGrid& src, BilateralGrid& dst, int axis) {
    const int extent[3] = {g.nx, g.ny, g.nt};
    for (int it = 0; it < g.nt; ++it) {
      for (int iy = 0; iy < g.ny; ++iy) {
        for (int ix = 0; ix < g.nx; ++ix) {
          double vs = 0.0, ws = 0.0;
          int idx[3] = {ix, iy, it};
          const int base = idx[axis];
          for (int k = -radius; k <= radius; ++k) {
            idx[axis] = clampi(base + k, 0, extent[axis] - 1);
            const GridCell& cell = src.cell(idx[0], idx[1], idx[2]);
            vs += kernel[k + radius] * cell.value_sum;
            ws += kernel[k + radius] * cell.weight_sum;
          }
          dst.cell(ix, iy, it) = {vs, ws};
        }
      }
    }
  };

  pass(g, out, 0);
  pass(out, tmp, 1);
  pass(tmp, out, 2);
  return out;
}

ImagePlane grid_slice(const BilateralGrid& g, const ImagePlane& p) {
  ImagePlane out = p;
  for (int y = 0; y < p.height; ++y) {
    const double gy = y / g.s_spatial + 1.0;
    for (int x = 0; x < p.width; ++x) {
      const double gx = x / g.s_spatial + 1.0;
      const double gt = (p.at(x, y) - g.range_origin) / g.s_range + 1.0;

      const int x0 = clampi(static_cast<int>(std::floor(gx)), 0, g.nx - 1);
      const int y0 = clampi(static_cast<int>(std::floor(gy)), 0, g.ny - 1);
      const int t0 = clampi(static_cast<int>(std::floor(gt)), 0, g.nt - 1);
      const int x1 = std::min(x0 + 1, g.nx - 1);
      const int y1 = std::min(y0 + 1, g.ny - 1);
      const int t1 = std::min(t0 + 1, g.nt - 1);
      const double fx = std::clamp(gx - x0, 0.0, 1.0);
      const double fy = std::clamp(gy - y0, 0.0, 1.0);
      const double ft = std::clamp(gt - t0, 0.0, 1.0);

      double value = 0.0, weight = 0.0;
      for (int dt = 0; dt <= 1; ++dt) {
        const double wt = dt ? ft : 1.0 - ft;
        if (wt == 0.0) continue;
        for (int dy = 0; dy <= 1; ++dy) {
          const double wy = dy ? fy : 1.0 - fy;
          if (wy == 0.0) continue;
          for (int dx = 0; dx <= 1; ++dx) {
            const double wx = dx ? fx : 1.0 - fx;
            if (wx == 0.0) continue;
            const GridCell& c = g.cell(dx ? x1 : x0, dy ? y1 : y0, dt ? t1 : t0);
            value += wt * wy * wx * c.value_sum;
            weight += wt * wy * wx * c.weight_sum;
          }
        }
      }
      out.at(x, y) = weight < 1e-12 ? p.at(x, y) : value / weight;
    }
  }
  return out;
}

ImagePlane bilateral_fast(const ImagePlane& p, const BilateralParams& params) {
  params.validate();
  // Pad by the direct window radius with edge replication so the grid sees
  // the same border mass the clamped direct window does; without this the
  // two paths disagree by up to ~sigma_r near corners.
  const int pad = static_cast<int>(std::ceil(3.0 * params.sigma_s));
  ImagePlane ext(p.width + 2 * pad, p.height + 2 * pad, 0.0, p.domain);
  for (int y = 0; y < ext.height; ++y)
    for (int x = 0; x < ext.width; ++x)
      ext.at(x, y) =
          p.at(clampi(x - pad, 0, p.width - 1), clampi(y - pad, 0, p.height - 1));

  const BilateralGrid g = grid_blur(grid_build(ext, params.sigma_s, params.sigma_r), 1.0);
  const ImagePlane sliced = grid_slice(g, ext);
  ImagePlane out = p;
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x) out.at(x, y) = sliced.at(x + pad, y + pad);
  return out;
}

}  // namespace lumenfix
