#pragma once

#include <vector>

#include "bird/tensor.hpp"

namespace bird {

// Planar image, pixels in [0,1], row-major [c][h][w].
struct Image {
  int channels = 1;
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int c, int h, int w, float fill = 0.0f)
      : channels(c), height(h), width(w),
        pixels(static_cast<size_t>(c) * h * w, fill) {}

  int64_t numel() const { return static_cast<int64_t>(pixels.size()); }
  float& at(int c, int y, int x) {
    return pixels[(static_cast<size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return pixels[(static_cast<size_t>(c) * height + y) * width + x];
  }

  Tensor to_tensor() const {
    return Tensor::from({channels, height, width}, pixels);
  }
  static Image from_tensor(const Tensor& t) {
    check(t.rank() == 3, "Image::from_tensor: want [C,H,W]");
    Image img;
    img.channels = t.dim(0);
    img.height = t.dim(1);
    img.width = t.dim(2);
    img.pixels = t.data;
    return img;
  }
};

inline void clamp01(Image& img) {
  for (float& p : img.pixels) p = p < 0.0f ? 0.0f : (p > 1.0f ? 1.0f : p);
}

}  // namespace bird
