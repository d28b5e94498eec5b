#include "lumenfix/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace lumenfix {

void EnhanceConfig::validate() const {
  if (!(sigma_s > 0.0) || !(sigma_r > 0.0))
    throw std::invalid_argument("EnhanceConfig: sigmas must be > 0");
  if (!(gamma_min > 0.0) || !(gamma_min <= gamma_max))
    throw std::invalid_argument("EnhanceConfig: need 0 < gamma_min <= gamma_max");
  if (!(sigmoid_gain > 0.0)) throw std::invalid_argument("EnhanceConfig: sigmoid_gain must be > 0");
  if (!(detail_gain > 0.0)) throw std::invalid_argument("EnhanceConfig: detail_gain must be > 0");
  if (truncate_lo < 0.0 || truncate_lo >= 0.5 || truncate_hi < 0.0 || truncate_hi >= 0.5)
    throw std::invalid_argument("EnhanceConfig: truncation fractions must lie in [0, 0.5)");
}

EnhanceConfig EnhanceConfig::from_json_text(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("enhance config: expected a JSON object");

  EnhanceConfig cfg;
  const std::set<std::string> known = {"sigma_s",      "sigma_r",     "gamma_d",    "gamma_a",
                                       "gamma_min",    "gamma_max",   "sigmoid_gain",
                                       "detail_gain",  "truncate_lo", "truncate_hi"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("enhance config: unknown key \"" + key + "\"");
    const double v = value.get<double>();
    if (key == "sigma_s") cfg.sigma_s = v;
    else if (key == "sigma_r") cfg.sigma_r = v;
    else if (key == "gamma_d") cfg.gamma_d = v;
    else if (key == "gamma_a") cfg.gamma_a = v;
    else if (key == "gamma_min") cfg.gamma_min = v;
    else if (key == "gamma_max") cfg.gamma_max = v;
    else if (key == "sigmoid_gain") cfg.sigmoid_gain = v;
    else if (key == "detail_gain") cfg.detail_gain = v;
    else if (key == "truncate_lo") cfg.truncate_lo = v;
    else if (key == "truncate_hi") cfg.truncate_hi = v;
  }
  cfg.validate();
  return cfg;
}

EnhanceConfig EnhanceConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("enhance config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

ImagePlane estimate_illumination(const ImagePlane& log_lum, const EnhanceConfig& cfg, bool fast) {
  if (log_lum.domain != Domain::log)
    throw std::invalid_argument("estimate_illumination: expected a log-domain plane");
  const BilateralParams params{cfg.sigma_s, cfg.sigma_r};
  return fast ? bilateral_fast(log_lum, params) : bilateral_direct(log_lum, params);
}

Decomposition decompose(const RgbImage& img, const EnhanceConfig& cfg, bool fast) {
  Decomposition d;
  d.log_luminance = to_log_domain(luminance(img));
  d.illumination = estimate_illumination(d.log_luminance, cfg, fast);
  d.reflection = d.log_luminance;
  for (size_t i = 0; i < d.reflection.size(); ++i)
    d.reflection.pixels[i] = d.log_luminance.pixels[i] - d.illumination.pixels[i];
  return d;
}

double gamma_exponent(const ImagePlane& illum, const EnhanceConfig& cfg) {
  const double log_floor = std::log(kEpsFloor);
  double mean = 0.0;
  for (const double v : illum.pixels) mean += (v - log_floor) / (-log_floor);
  mean /= static_cast<double>(illum.size());
  return std::clamp(cfg.gamma_d * (1.0 - mean) + cfg.gamma_a, cfg.gamma_min, cfg.gamma_max);
}

ImagePlane compress_illumination(const ImagePlane& illum, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("compress_illumination: gamma must be > 0");
  ImagePlane out = illum;
  for (double& v : out.pixels) v *= gamma;
  return out;
}

ImagePlane sigmoid_enhance(const ImagePlane& refl, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("sigmoid_enhance: gain must be > 0");
  ImagePlane out = refl;
  for (double& v : out.pixels) v = 2.0 / (1.0 + std::exp(-k * v)) - 1.0;
  return out;
}

ImagePlane rescale_reflection(const ImagePlane& enhanced, const ImagePlane& original_refl,
                              double detail_gain) {
  if (enhanced.width != original_refl.width || enhanced.height != original_refl.height)
    throw std::invalid_argument("rescale_reflection: dimension mismatch");
  const double lo = plane_min(original_refl);
  const double hi = plane_max(original_refl);

  ImagePlane out;
  if (lo == hi) {
    out = enhanced;
    for (double& v : out.pixels) v = lo;  // degenerate target range: its midpoint
  } else {
    out = linear_stretch(enhanced, lo, hi);
  }
  for (double& v : out.pixels) v *= detail_gain;
  return out;
}

ImagePlane fuse(const ImagePlane& illum_c, const ImagePlane& refl_e) {
  if (illum_c.width != refl_e.width || illum_c.height != refl_e.height)
    throw std::invalid_argument("fuse: dimension mismatch");
  ImagePlane out = illum_c;
  out.domain = Domain::linear;
  for (size_t i = 0; i < out.size(); ++i)
    out.pixels[i] = std::clamp(std::exp(illum_c.pixels[i] + refl_e.pixels[i]), 0.0, 1.0);
  return out;
}

RgbImage enhance(const RgbImage& img, const EnhanceConfig& cfg, bool fast) {
  cfg.validate();
  const ImagePlane lum = luminance(img);
  const Decomposition d = decompose(img, cfg, fast);

  const ImagePlane illum_t = histogram_truncate(d.illumination, cfg.truncate_lo, cfg.truncate_hi);
  const double gamma = gamma_exponent(illum_t, cfg);
  const ImagePlane illum_c = compress_illumination(illum_t, gamma);

  const ImagePlane refl_s = sigmoid_enhance(d.reflection, cfg.sigmoid_gain);
  const ImagePlane refl_e = rescale_reflection(refl_s, d.reflection, cfg.detail_gain);

  const ImagePlane new_lum = fuse(illum_c, refl_e);

  // Chromaticity-preserving restoration: scale channels by the luminance ratio.
  RgbImage out(img.width, img.height);
  for (size_t i = 0; i < lum.size(); ++i) {
    const double ratio = new_lum.pixels[i] / std::max(lum.pixels[i], kEpsFloor);
    out.r.pixels[i] = std::clamp(img.r.pixels[i] * ratio, 0.0, 1.0);
    out.g.pixels[i] = std::clamp(img.g.pixels[i] * ratio, 0.0, 1.0);
    out.b.pixels[i] = std::clamp(img.b.pixels[i] * ratio, 0.0, 1.0);
  }
  return out;
}

}  // namespace lumenfix
