#pragma once

#include "lumenfix/image.hpp"

namespace lumenfix {

struct MetricsReport {
  double entropy_bits = 0.0;
  double mean_value = 0.0;
  double avg_gradient = 0.0;
};

/// Shannon entropy in bits over a 256-bin histogram of the plane.
double entropy(const ImagePlane& p);

/// Arithmetic mean of the pixels.
double mean_value(const ImagePlane& p);

/// Mean of sqrt((dx^2 + dy^2) / 2) with forward differences over the
/// (W-1) x (H-1) interior. Requires width and height >= 2.
double avg_gradient(const ImagePlane& p);

MetricsReport compute_metrics(const ImagePlane& p);

/// Color images are measured on their luminance.
MetricsReport compute_metrics(const RgbImage& img);

}  // namespace lumenfix
