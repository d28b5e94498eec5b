#include "lumenfix/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace lumenfix {

namespace {

struct ByteReader {
  const std::string& data;
  const std::string& path;
  size_t pos = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw CodecError(path + ": " + what + " at byte offset " + std::to_string(pos));
  }

  // Whitespace and '#' comments between header tokens.
  void skip_separators() {
    while (pos < data.size()) {
      const char c = data[pos];
      if (c == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
  }

  int read_int() {
    skip_separators();
    if (pos >= data.size() || !std::isdigit(static_cast<unsigned char>(data[pos])))
      fail("malformed header (expected integer)");
    long v = 0;
    while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) {
      v = v * 10 + (data[pos] - '0');
      if (v > 1 << 30) fail("header value out of range");
      ++pos;
    }
    return static_cast<int>(v);
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CodecError(path + ": cannot open file");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

}  // namespace

LoadedImage load_image(const std::string& path) {
  const std::string data = read_file(path);
  ByteReader rd{data, path};

  if (data.size() < 2 || data[0] != 'P' || (data[1] != '5' && data[1] != '6'))
    rd.fail("unsupported magic number (expected P5 or P6)");
  const bool color = data[1] == '6';
  rd.pos = 2;

  const int width = rd.read_int();
  const int height = rd.read_int();
  if (width <= 0 || height <= 0) rd.fail("non-positive dimensions");

  rd.skip_separators();
  const size_t maxval_pos = rd.pos;
  const int maxval = rd.read_int();
  if (maxval != 255) {
    rd.pos = maxval_pos;
    rd.fail("unsupported maxval " + std::to_string(maxval) + " (expected 255)");
  }
  if (rd.pos >= data.size()) rd.fail("truncated payload (missing raster)");
  ++rd.pos;  // exactly one whitespace byte after maxval

  const size_t n = static_cast<size_t>(width) * height;
  const size_t need = color ? 3 * n : n;
  if (data.size() - rd.pos < need)
    rd.fail("truncated payload (need " + std::to_string(need) + " bytes, have " +
            std::to_string(data.size() - rd.pos) + ")");

  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data() + rd.pos);
  if (!color) {
    ImagePlane p(width, height);
    for (size_t i = 0; i < n; ++i) p.pixels[i] = bytes[i] / 255.0;
    return p;
  }
  RgbImage img(width, height);
  for (size_t i = 0; i < n; ++i) {
    img.r.pixels[i] = bytes[3 * i + 0] / 255.0;
    img.g.pixels[i] = bytes[3 * i + 1] / 255.0;
    img.b.pixels[i] = bytes[3 * i + 2] / 255.0;
  }
  return img;
}

uint8_t quantize8(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return static_cast<uint8_t>(std::min(255.0, std::floor(v * 255.0 + 0.5)));
}

namespace {

void write_file(const std::string& path, const std::string& header,
                const std::vector<uint8_t>& raster) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CodecError(path + ": cannot open file for writing");
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(raster.data()),
            static_cast<std::streamsize>(raster.size()));
  if (!out) throw CodecError(path + ": write failed");
}

}  // namespace

void save_image(const ImagePlane& p, const std::string& path) {
  if (p.domain != Domain::linear)
    throw std::invalid_argument("save_image: plane must be linear domain");
  std::vector<uint8_t> raster(p.size());
  for (size_t i = 0; i < p.size(); ++i) raster[i] = quantize8(p.pixels[i]);
  write_file(path, "P5\n" + std::to_string(p.width) + " " + std::to_string(p.height) + "\n255\n",
             raster);
}

void save_image(const RgbImage& img, const std::string& path) {
  std::vector<uint8_t> raster(3 * img.r.size());
  for (size_t i = 0; i < img.r.size(); ++i) {
    raster[3 * i + 0] = quantize8(img.r.pixels[i]);
    raster[3 * i + 1] = quantize8(img.g.pixels[i]);
    raster[3 * i + 2] = quantize8(img.b.pixels[i]);
  }
  write_file(path,
             "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n",
             raster);
}

ImagePlane luminance(const RgbImage& img, bool normalized) {
  ImagePlane out(img.width, img.height);
  const double scale = normalized ? 1.0 / 0.9999 : 1.0;
  for (size_t i = 0; i < out.size(); ++i) {
    out.pixels[i] =
        scale * (0.2989 * img.r.pixels[i] + 0.587 * img.g.pixels[i] + 0.114 * img.b.pixels[i]);
  }
  return out;
}

ImagePlane to_log_domain(const ImagePlane& p) {
  ImagePlane out = p;
  out.domain = Domain::log;
  for (double& v : out.pixels) v = std::log(std::max(v, kEpsFloor));
  return out;
}

ImagePlane from_log_domain(const ImagePlane& p) {
  ImagePlane out = p;
  out.domain = Domain::linear;
  for (double& v : out.pixels) v = std::clamp(std::exp(v), 0.0, 1.0);
  return out;
}

ImagePlane histogram_truncate(const ImagePlane& p, double low_frac, double high_frac) {
  if (low_frac < 0.0 || low_frac >= 0.5 || high_frac < 0.0 || high_frac >= 0.5)
    throw std::invalid_argument("histogram_truncate: fractions must lie in [0, 0.5)");
  if (low_frac + high_frac >= 1.0)
    throw std::invalid_argument("histogram_truncate: fractions sum to >= 1");
  if (p.size() == 0) return p;

  std::vector<double> sorted(p.pixels);
  std::stable_sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  size_t lo_idx = static_cast<size_t>(std::ceil(low_frac * n));
  size_t hi_idx = static_cast<size_t>(std::floor((1.0 - high_frac) * n));
  hi_idx = hi_idx == 0 ? 0 : hi_idx - 1;  // last kept rank
  lo_idx = std::min(lo_idx, sorted.size() - 1);
  hi_idx = std::max(hi_idx, lo_idx);

  const double lo = sorted[lo_idx];
  const double hi = sorted[hi_idx];
  ImagePlane out = p;
  for (double& v : out.pixels) v = std::clamp(v, lo, hi);
  return out;
}

ImagePlane linear_stretch(const ImagePlane& p, double target_lo, double target_hi) {
  if (!(target_lo < target_hi))
    throw std::invalid_argument("linear_stretch: target_lo must be < target_hi");
  const double lo = plane_min(p);
  const double hi = plane_max(p);
  ImagePlane out = p;
  if (lo == hi) {
    const double mid = 0.5 * (target_lo + target_hi);
    for (double& v : out.pixels) v = mid;
    return out;
  }
  const double span = hi - lo;
  const double target_span = target_hi - target_lo;
  for (double& v : out.pixels) v = target_lo + (v - lo) / span * target_span;
  return out;
}

double plane_min(const ImagePlane& p) {
  return *std::min_element(p.pixels.begin(), p.pixels.end());
}

double plane_max(const ImagePlane& p) {
  return *std::max_element(p.pixels.begin(), p.pixels.end());
}

double plane_mean(const ImagePlane& p) {
  if (p.size() == 0) return 0.0;
  return std::accumulate(p.pixels.begin(), p.pixels.end(), 0.0) / static_cast<double>(p.size());
}

}  // namespace lumenfix
