#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dfta {

// 8-bit pixel grid, row-major, interleaved channels (1 = gray, 3 = RGB).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c) {
    if (w <= 0 || h <= 0 || (c != 1 && c != 3))
      throw std::invalid_argument("image: bad dimensions " + std::to_string(w) + "x" +
                                  std::to_string(h) + "x" + std::to_string(c));
    pixels.assign(static_cast<std::size_t>(w) * h * c, 0);
  }

  bool empty() const { return pixels.empty(); }
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  std::uint8_t at(int x, int y, int c) const { return pixels[index(x, y, c)]; }
  std::uint8_t& at(int x, int y, int c) { return pixels[index(x, y, c)]; }

  bool operator==(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels && pixels == o.pixels;
  }
};

inline std::uint8_t clamp_u8(double v) {
  if (v <= 0.0) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(v + 0.5);
}

// PNG io (8-bit gray or RGB only)
Image read_png(const std::string& path);
void write_png(const Image& img, const std::string& path);

}  // namespace dfta
