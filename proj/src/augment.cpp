#include "dfta/augment.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace dfta::augment {

namespace {

const std::array<std::string, kOpCount> kNames = {
    "identity",   "auto_contrast", "equalize",   "rotate",      "solarize",
    "color",      "posterize",     "contrast",   "brightness",  "sharpness",
    "shear_x",    "shear_y",       "translate_x", "translate_y",
};

// ITU-R 601 luma, PIL's integer weighting
inline double luma(double r, double g, double b) {
  return (299.0 * r + 587.0 * g + 114.0 * b) / 1000.0;
}

double gray_of(const Image& img, int x, int y) {
  if (img.channels == 1) return img.at(x, y, 0);
  return luma(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
}

using Lut = std::array<std::uint8_t, 256>;

Image apply_per_channel_lut(const Image& img, const std::vector<Lut>& luts) {
  Image out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(x, y, c) = luts[static_cast<std::size_t>(c)][img.at(x, y, c)];
  return out;
}

std::array<int, 256> channel_histogram(const Image& img, int c) {
  std::array<int, 256> h{};
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) h[img.at(x, y, c)]++;
  return h;
}

Image op_auto_contrast(const Image& img) {
  std::vector<Lut> luts(static_cast<std::size_t>(img.channels));
  for (int c = 0; c < img.channels; ++c) {
    int lo = 255, hi = 0;
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        int v = img.at(x, y, c);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    Lut& lut = luts[static_cast<std::size_t>(c)];
    if (hi <= lo) {
      for (int i = 0; i < 256; ++i) lut[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
    } else {
      double scale = 255.0 / (hi - lo);
      for (int i = 0; i < 256; ++i)
        lut[static_cast<std::size_t>(i)] = clamp_u8((i - lo) * scale);
    }
  }
  return apply_per_channel_lut(img, luts);
}

// classic histogram equalization; a flat or single-level histogram maps to
// the identity, so constant images pass through unchanged
Image op_equalize(const Image& img) {
  std::vector<Lut> luts(static_cast<std::size_t>(img.channels));
  for (int c = 0; c < img.channels; ++c) {
    auto h = channel_histogram(img, c);
    Lut& lut = luts[static_cast<std::size_t>(c)];
    long total = 0;
    int last_nonzero = 0;
    for (int i = 0; i < 256; ++i)
      if (h[static_cast<std::size_t>(i)] > 0) {
        total += h[static_cast<std::size_t>(i)];
        last_nonzero = i;
      }
    long step = (total - h[static_cast<std::size_t>(last_nonzero)]) / 255;
    if (step <= 0) {
      for (int i = 0; i < 256; ++i) lut[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
    } else {
      long n = step / 2;
      for (int i = 0; i < 256; ++i) {
        long v = n / step;
        lut[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v > 255 ? 255 : v);
        n += h[static_cast<std::size_t>(i)];
      }
    }
  }
  return apply_per_channel_lut(img, luts);
}

Image op_solarize(const Image& img, double threshold) {
  Image out(img.width, img.height, img.channels);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    std::uint8_t p = img.pixels[i];
    out.pixels[i] = (p >= threshold) ? static_cast<std::uint8_t>(255 - p) : p;
  }
  return out;
}

Image op_posterize(const Image& img, int bits) {
  std::uint8_t mask = static_cast<std::uint8_t>(0xFF << (8 - bits));
  Image out(img.width, img.height, img.channels);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) out.pixels[i] = img.pixels[i] & mask;
  return out;
}

// blend: out = degenerate + factor * (original - degenerate)
Image blend(const Image& degenerate, const Image& original, double factor) {
  Image out(original.width, original.height, original.channels);
  for (std::size_t i = 0; i < original.pixels.size(); ++i) {
    double d = degenerate.pixels[i];
    out.pixels[i] = clamp_u8(d + factor * (original.pixels[i] - d));
  }
  return out;
}

Image op_color(const Image& img, double factor) {
  if (img.channels == 1) return img;  // saturation is undefined for grayscale
  Image gray(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      std::uint8_t g = clamp_u8(gray_of(img, x, y));
      for (int c = 0; c < 3; ++c) gray.at(x, y, c) = g;
    }
  return blend(gray, img, factor);
}

Image op_contrast(const Image& img, double factor) {
  double sum = 0.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) sum += gray_of(img, x, y);
  double mean = std::floor(sum / (static_cast<double>(img.width) * img.height) + 0.5);
  Image flat(img.width, img.height, img.channels);
  for (std::size_t i = 0; i < flat.pixels.size(); ++i) flat.pixels[i] = clamp_u8(mean);
  return blend(flat, img, factor);
}

Image op_brightness(const Image& img, double factor) {
  Image black(img.width, img.height, img.channels);
  return blend(black, img, factor);
}

// smooth kernel [[1,1,1],[1,5,1],[1,1,1]]/13 on the interior; the one-pixel
// border keeps its original values
Image op_sharpness(const Image& img, double factor) {
  Image smooth = img;
  for (int y = 1; y + 1 < img.height; ++y)
    for (int x = 1; x + 1 < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double acc = 5.0 * img.at(x, y, c);
        acc += img.at(x - 1, y - 1, c) + img.at(x, y - 1, c) + img.at(x + 1, y - 1, c);
        acc += img.at(x - 1, y, c) + img.at(x + 1, y, c);
        acc += img.at(x - 1, y + 1, c) + img.at(x, y + 1, c) + img.at(x + 1, y + 1, c);
        smooth.at(x, y, c) = clamp_u8(acc / 13.0);
      }
  return blend(smooth, img, factor);
}

// inverse-mapped resampling: the caller maps each output pixel to its source
// coordinates; bilinear with zero fill outside the frame
template <typename MapFn>
Image resample(const Image& img, MapFn&& src_of) {
  Image out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      auto [sx, sy] = src_of(static_cast<double>(x), static_cast<double>(y));
      double fx = std::floor(sx), fy = std::floor(sy);
      int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
      double wx = sx - fx, wy = sy - fy;
      for (int c = 0; c < img.channels; ++c) {
        auto tap = [&](int px, int py) -> double {
          if (px < 0 || px >= img.width || py < 0 || py >= img.height) return 0.0;
          return img.at(px, py, c);
        };
        double v = (1 - wx) * (1 - wy) * tap(x0, y0) + wx * (1 - wy) * tap(x0 + 1, y0) +
                   (1 - wx) * wy * tap(x0, y0 + 1) + wx * wy * tap(x0 + 1, y0 + 1);
        out.at(x, y, c) = clamp_u8(v);
      }
    }
  return out;
}

Image op_rotate(const Image& img, double degrees) {
  double rad = degrees * 3.14159265358979323846 / 180.0;
  double cs = std::cos(rad), sn = std::sin(rad);
  double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
  return resample(img, [&](double x, double y) {
    double dx = x - cx, dy = y - cy;
    return std::pair{cx + cs * dx + sn * dy, cy - sn * dx + cs * dy};
  });
}

Image op_shear_x(const Image& img, double s) {
  double cy = (img.height - 1) / 2.0;
  return resample(img, [&](double x, double y) { return std::pair{x + s * (y - cy), y}; });
}

Image op_shear_y(const Image& img, double s) {
  double cx = (img.width - 1) / 2.0;
  return resample(img, [&](double x, double y) { return std::pair{x, y + s * (x - cx)}; });
}

Image op_translate_x(const Image& img, double frac) {
  double dx = frac * img.width;
  return resample(img, [&](double x, double y) { return std::pair{x - dx, y}; });
}

Image op_translate_y(const Image& img, double frac) {
  double dy = frac * img.height;
  return resample(img, [&](double x, double y) { return std::pair{x, y - dy}; });
}

}  // namespace

const std::string& op_name(Op op) {
  int i = static_cast<int>(op);
  if (i < 0 || i >= kOpCount) throw std::invalid_argument("augment: bad op index");
  return kNames[static_cast<std::size_t>(i)];
}

Op op_from_name(const std::string& name) {
  for (int i = 0; i < kOpCount; ++i)
    if (kNames[static_cast<std::size_t>(i)] == name) return static_cast<Op>(i);
  throw std::invalid_argument("augment: unknown op name '" + name + "'");
}

MagnitudeRange magnitude_range(Op op) {
  switch (op) {
    case Op::identity:
    case Op::auto_contrast:
    case Op::equalize: return {0.0, 0.0};
    case Op::rotate: return {-30.0, 30.0};
    case Op::solarize: return {0.0, 256.0};
    case Op::posterize: return {1.0, 8.0};
    case Op::color:
    case Op::contrast:
    case Op::brightness:
    case Op::sharpness: return {0.1, 1.9};
    case Op::shear_x:
    case Op::shear_y:
    case Op::translate_x:
    case Op::translate_y: return {-0.3, 0.3};
  }
  throw std::invalid_argument("augment: bad op index");
}

Image apply(const AugmentationAction& action, const Image& img) {
  if (img.empty()) throw std::invalid_argument("augment: empty image");
  auto range = magnitude_range(action.op);
  if (action.magnitude < range.lo || action.magnitude > range.hi)
    throw std::invalid_argument("augment: magnitude " + std::to_string(action.magnitude) +
                                " out of range for " + op_name(action.op));
  switch (action.op) {
    case Op::identity: return img;
    case Op::auto_contrast: return op_auto_contrast(img);
    case Op::equalize: return op_equalize(img);
    case Op::rotate: return op_rotate(img, action.magnitude);
    case Op::solarize: return op_solarize(img, action.magnitude);
    case Op::color: return op_color(img, action.magnitude);
    case Op::posterize: return op_posterize(img, static_cast<int>(action.magnitude));
    case Op::contrast: return op_contrast(img, action.magnitude);
    case Op::brightness: return op_brightness(img, action.magnitude);
    case Op::sharpness: return op_sharpness(img, action.magnitude);
    case Op::shear_x: return op_shear_x(img, action.magnitude);
    case Op::shear_y: return op_shear_y(img, action.magnitude);
    case Op::translate_x: return op_translate_x(img, action.magnitude);
    case Op::translate_y: return op_translate_y(img, action.magnitude);
  }
  throw std::invalid_argument("augment: bad op index");
}

std::vector<AugmentationAction> default_bank(int size) {
  if (size < 1 || size > kOpCount)
    throw std::invalid_argument("augment: bank size must be in [1," + std::to_string(kOpCount) + "]");
  // one fixed magnitude per op: half of the maximum effect strength, leaning
  // on the enhancing side for the blend factors
  static const std::array<double, kOpCount> kDefaults = {
      0.0,    // identity
      0.0,    // auto_contrast
      0.0,    // equalize
      15.0,   // rotate (degrees)
      128.0,  // solarize threshold
      1.45,   // color factor
      4.0,    // posterize bits kept
      1.45,   // contrast factor
      1.45,   // brightness factor
      1.9,    // sharpness factor
      0.15,   // shear_x
      0.15,   // shear_y
      0.15,   // translate_x (fraction of width)
      0.15,   // translate_y (fraction of height)
  };
  std::vector<AugmentationAction> bank;
  bank.reserve(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i)
    bank.push_back({static_cast<Op>(i), kDefaults[static_cast<std::size_t>(i)]});
  return bank;
}

}  // namespace dfta::augment
