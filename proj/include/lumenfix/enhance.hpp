#pragma once

#include <string>

#include "lumenfix/bilateral.hpp"
#include "lumenfix/image.hpp"

namespace lumenfix {

/// Tunables of the enhancement pipeline. The JSON form accepts exactly
/// these field names; unknown keys are rejected.
struct EnhanceConfig {
  double sigma_s = 12.0;      // bilateral spatial width, pixels
  double sigma_r = 0.4;       // bilateral range width, log-intensity units
  double gamma_d = 0.6;       // adaptive exponent control parameter
  double gamma_a = 0.4;       // adaptive exponent correction parameter
  double gamma_min = 0.2;
  double gamma_max = 1.0;
  double sigmoid_gain = 5.0;  // k of the logistic reflection boost
  double detail_gain = 1.5;
  double truncate_lo = 0.01;  // histogram tail fractions
  double truncate_hi = 0.01;

  void validate() const;
  static EnhanceConfig from_json_text(const std::string& text);
  static EnhanceConfig from_json_file(const std::string& path);
};

/// Log-luminance split into a smooth illumination field and the residual
/// reflection detail. illumination + reflection == log_luminance exactly.
struct Decomposition {
  ImagePlane log_luminance;  // log domain
  ImagePlane illumination;   // log domain
  ImagePlane reflection;     // log difference, unbounded sign
};

/// Bilateral filter (fast grid path or direct) over the log-luminance.
ImagePlane estimate_illumination(const ImagePlane& log_lum, const EnhanceConfig& cfg, bool fast);

Decomposition decompose(const RgbImage& img, const EnhanceConfig& cfg, bool fast);

/// Adaptive power-law exponent: clamp(gamma_d * (1 - mean) + gamma_a) with
/// the illumination mean normalized from [ln(kEpsFloor), 0] to [0, 1].
double gamma_exponent(const ImagePlane& illum, const EnhanceConfig& cfg);

/// Log-domain scalar multiply, i.e. the power law H^gamma in linear terms.
ImagePlane compress_illumination(const ImagePlane& illum, double gamma);

/// 2 / (1 + exp(-k z)) - 1: odd, bounded in (-1, 1), strictly increasing.
ImagePlane sigmoid_enhance(const ImagePlane& refl, double k);

/// Stretches the enhanced plane back onto the original reflection's value
/// range, then scales by detail_gain.
ImagePlane rescale_reflection(const ImagePlane& enhanced, const ImagePlane& original_refl,
                              double detail_gain);

/// clamp(exp(illum_c + refl_e), 0, 1): back to a linear luminance plane.
ImagePlane fuse(const ImagePlane& illum_c, const ImagePlane& refl_e);

/// Full chain: decompose, truncate, gamma-compress, sigmoid-boost, rescale,
/// fuse, then restore color by the luminance ratio per channel.
RgbImage enhance(const RgbImage& img, const EnhanceConfig& cfg, bool fast);

}  // namespace lumenfix
