#pragma once

#include <vector>

#include "lumenfix/image.hpp"

namespace lumenfix {

/// Spatial and range Gaussian widths of the edge-preserving filter.
struct BilateralParams {
  double sigma_s = 4.0;  // pixels
  double sigma_r = 0.1;  // intensity units of the filtered plane

  void validate() const;
};

struct GridCell {
  double value_sum = 0.0;
  double weight_sum = 0.0;
};

/// Downsampled (x, y, intensity) lattice of (value_sum, weight_sum) pairs.
/// One boundary cell pads each side; the range axis is offset by
/// range_origin (the plane minimum) so log-domain planes index from zero.
struct BilateralGrid {
  int nx = 0, ny = 0, nt = 0;
  double s_spatial = 1.0;
  double s_range = 1.0;
  double range_origin = 0.0;
  std::vector<GridCell> cells;  // [t][y][x]

  GridCell& cell(int ix, int iy, int it) {
    return cells[(static_cast<size_t>(it) * ny + iy) * nx + ix];
  }
  const GridCell& cell(int ix, int iy, int it) const {
    return cells[(static_cast<size_t>(it) * ny + iy) * nx + ix];
  }
  double total_weight() const;
};

/// Windowed bilateral filter, window radius ceil(3 sigma_s), borders
/// clamped. This is the reference path the grid is checked against.
ImagePlane bilateral_direct(const ImagePlane& p, const BilateralParams& params);

/// Splats every pixel (x, y, v) as (v, 1) into the nearest grid cell.
/// Total weight equals the pixel count exactly.
BilateralGrid grid_build(const ImagePlane& p, double s_spatial, double s_range);

/// Separable 3-D Gaussian over the lattice (radius ceil(3 sigma_cells),
/// clamped borders), applied to value and weight fields alike.
BilateralGrid grid_blur(const BilateralGrid& g, double sigma_cells);

/// Homogeneous slice: trilinear interpolation of (value, weight) at each
/// pixel's continuous grid coordinate, then value / weight. Falls back to
/// the input pixel when the interpolated weight vanishes.
ImagePlane grid_slice(const BilateralGrid& g, const ImagePlane& p);

/// grid_build(sigma_s, sigma_r) -> grid_blur(1) -> grid_slice, computed
/// over an edge-replicated padding of the plane so border behavior matches
/// the clamped direct window.
ImagePlane bilateral_fast(const ImagePlane& p, const BilateralParams& params);

}  // namespace lumenfix
