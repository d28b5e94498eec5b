#include "lumenfix/metrics.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace lumenfix {

double entropy(const ImagePlane& p) {
  if (p.size() == 0) return 0.0;
  std::array<size_t, 256> hist{};
  for (const double v : p.pixels) {
    const int bin = static_cast<int>(std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5));
    ++hist[static_cast<size_t>(bin)];
  }
  const double n = static_cast<double>(p.size());
  double h = 0.0;
  for (const size_t c : hist) {
    if (c == 0) continue;
    const double q = c / n;
    h -= q * std::log2(q);
  }
  return h;
}

double mean_value(const ImagePlane& p) { return plane_mean(p); }

double avg_gradient(const ImagePlane& p) {
  if (p.width < 2 || p.height < 2)
    throw std::invalid_argument("avg_gradient: image must be at least 2x2");
  double sum = 0.0;
  for (int y = 0; y + 1 < p.height; ++y) {
    for (int x = 0; x + 1 < p.width; ++x) {
      const double dx = p.at(x + 1, y) - p.at(x, y);
      const double dy = p.at(x, y + 1) - p.at(x, y);
      sum += std::sqrt(0.5 * (dx * dx + dy * dy));
    }
  }
  return sum / (static_cast<double>(p.width - 1) * (p.height - 1));
}

MetricsReport compute_metrics(const ImagePlane& p) {
  return {entropy(p), mean_value(p), avg_gradient(p)};
}

MetricsReport compute_metrics(const RgbImage& img) { return compute_metrics(luminance(img)); }

}  // namespace lumenfix
