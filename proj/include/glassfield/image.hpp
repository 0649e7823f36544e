#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gf {

// Interleaved float RGB, values nominally in [0,1] but unclamped until
// export.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // height*width*3

  Image() = default;
  Image(int w, int h) : width(w), height(h), data((size_t)w * h * 3, 0.f) {}

  float& at(int x, int y, int c) { return data[((size_t)y * width + x) * 3 + c]; }
  float at(int x, int y, int c) const {
    return data[((size_t)y * width + x) * 3 + c];
  }
  size_t pixel_count() const { return (size_t)width * height; }
};

inline double luma(double r, double g, double b) {
  return 0.2126 * r + 0.7152 * g + 0.0722 * b;
}

// 8-bit RGB PNG; values clamped to [0,1] and rounded on write.
Image read_png_rgb(const std::string& path);
void write_png_rgb(const std::string& path, const Image& img);

// 16-bit grayscale PNG, used for depth maps.
void write_png_gray16(const std::string& path, const std::vector<uint16_t>& pixels,
                      int width, int height);
std::vector<uint16_t> read_png_gray16(const std::string& path, int& width,
                                      int& height);

// Quantize to 8 bits per channel in place (round-trip through the PNG code
// values); used for metric evaluation.
Image quantize8(const Image& img);

// Side-by-side composition with a 1px white separator.
Image hconcat(const std::vector<Image>& images);

}  // namespace gf
