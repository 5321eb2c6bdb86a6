#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "sparsevo/image.hpp"
#include "sparsevo/rng.hpp"

namespace testing {

inline sparsevo::ImageTensor random_image(sparsevo::Shape shape, sparsevo::SplitMix64& gen) {
  std::vector<float> data(shape.size());
  for (auto& v : data) v = static_cast<float>(gen.next() % 256) / 255.0f;
  return sparsevo::ImageTensor(shape, std::move(data));
}

/// Copy of `base` where each pixel (all channels) is re-drawn with probability `p`.
inline sparsevo::ImageTensor perturb_pixels(const sparsevo::ImageTensor& base, double p, sparsevo::SplitMix64& gen) {
  std::vector<float> data(base.data().begin(), base.data().end());
  const std::size_t pixels = base.pixels();
  for (std::size_t i = 0; i < pixels; ++i) {
    if (gen.next_unit() >= p) continue;
    for (std::size_t c = 0; c < base.channels(); ++c) {
      const float old = data[c * pixels + i];
      float v = static_cast<float>(gen.next() % 256) / 255.0f;
      if (v == old) v = old > 0.5f ? 0.0f : 1.0f;
      data[c * pixels + i] = v;
    }
  }
  return sparsevo::ImageTensor(base.shape(), std::move(data));
}

inline sparsevo::PixelMask random_mask(std::size_t w, std::size_t h, double p, sparsevo::SplitMix64& gen) {
  sparsevo::PixelMask m(w, h);
  for (std::size_t i = 0; i < m.size(); ++i) m.set(i, gen.next_unit() < p);
  return m;
}

inline sparsevo::Shape random_shape(sparsevo::SplitMix64& gen, std::size_t max_side = 12) {
  return {1 + gen.next() % 3, 1 + gen.next() % max_side, 1 + gen.next() % max_side};
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sparsevo_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
