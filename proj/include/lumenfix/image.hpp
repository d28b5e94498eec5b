#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace lumenfix {

/// Smallest representable nonzero 8-bit intensity. Log-domain planes are
/// floored at ln(kEpsFloor) so zero pixels never hit ln(0).
inline constexpr double kEpsFloor = 1.0 / 255.0;

enum class Domain { linear, log };

/// Single-channel 2-D field of real intensities, row-major (y * width + x).
/// Linear planes hold values in [0, 1]; log planes in [ln(kEpsFloor), 0].
struct ImagePlane {
  int width = 0;
  int height = 0;
  Domain domain = Domain::linear;
  std::vector<double> pixels;

  ImagePlane() = default;
  ImagePlane(int w, int h, double fill = 0.0, Domain d = Domain::linear)
      : width(w), height(h), domain(d), pixels(static_cast<size_t>(w) * h, fill) {}

  double& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
  size_t size() const { return pixels.size(); }
};

struct RgbImage {
  int width = 0;
  int height = 0;
  ImagePlane r, g, b;

  RgbImage() = default;
  RgbImage(int w, int h, double fill = 0.0)
      : width(w), height(h), r(w, h, fill), g(w, h, fill), b(w, h, fill) {}
};

/// Codec failure; the message carries the byte offset of the defect.
class CodecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using LoadedImage = std::variant<ImagePlane, RgbImage>;

/// Reads a binary PGM ("P5") or PPM ("P6") file with maxval 255. Bytes map
/// to [0, 1] as v / 255. Header comments are tolerated.
LoadedImage load_image(const std::string& path);

/// Writes a binary PGM (plane) or PPM (rgb). Values quantize to 8 bits by
/// round-half-up, so save followed by load is exact at 8-bit precision.
void save_image(const ImagePlane& p, const std::string& path);
void save_image(const RgbImage& img, const std::string& path);

uint8_t quantize8(double v);

/// 0.2989 r + 0.587 g + 0.114 b, coefficients kept as printed (sum 0.9999).
/// Pass normalized = true to divide by the coefficient sum.
ImagePlane luminance(const RgbImage& img, bool normalized = false);

/// ln(max(x, kEpsFloor)) per pixel; tags the plane as log domain.
ImagePlane to_log_domain(const ImagePlane& p);

/// clamp(exp(x), 0, 1) per pixel; tags the plane as linear domain.
ImagePlane from_log_domain(const ImagePlane& p);

/// Clamps the value distribution's tails: with N pixels sorted ascending,
/// every pixel is clamped into [sorted[ceil(low_frac*N)],
/// sorted[floor((1-high_frac)*N) - 1]]. Fractions live in [0, 0.5).
ImagePlane histogram_truncate(const ImagePlane& p, double low_frac, double high_frac);

/// Affine map sending (min, max) to (target_lo, target_hi). A constant
/// input maps every pixel to the target midpoint.
ImagePlane linear_stretch(const ImagePlane& p, double target_lo, double target_hi);

double plane_min(const ImagePlane& p);
double plane_max(const ImagePlane& p);
double plane_mean(const ImagePlane& p);

}  // namespace lumenfix
