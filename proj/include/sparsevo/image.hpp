#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sparsevo {

struct Shape {
  std::size_t channels = 0;
  std::size_t width = 0;
  std::size_t height = 0;

  std::size_t pixels() const { return width * height; }
  std::size_t size() const { return channels * width * height; }
  bool operator==(const Shape&) const = default;
};

/// C x W x H image with values in [0, 1], channel-major: the value of
/// channel c at pixel (n, m) lives at c * W * H + n + W * m.
class ImageTensor {
 public:
  ImageTensor() = default;
  /// Throws ContractError on a zero dimension, wrong length or a value outside [0, 1].
  ImageTensor(Shape shape, std::vector<float> data);
  /// Constant-valued image.
  static ImageTensor filled(Shape shape, float value);

  const Shape& shape() const { return shape_; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t width() const { return shape_.width; }
  std::size_t height() const { return shape_.height; }
  std::size_t pixels() const { return shape_.pixels(); }

  std::span<const float> data() const { return data_; }
  std::span<const float> channel(std::size_t c) const {
    return std::span<const float>(data_).subspan(c * pixels(), pixels());
  }
  float at(std::size_t c, std::size_t pixel) const { return data_[c * pixels() + pixel]; }
  void set(std::size_t c, std::size_t pixel, float value);

  bool operator==(const ImageTensor&) const = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

/// Binary vector over pixel sites; 1 = take the pixel from the starting image.
class PixelMask {
 public:
  PixelMask() = default;
  PixelMask(std::size_t width, std::size_t height, bool value = false);
  PixelMask(std::size_t width, std::vector<std::uint8_t> bits);

  std::size_t size() const { return bits_.size(); }
  std::size_t width() const { return width_; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool value) { bits_[i] = value ? 1 : 0; }
  std::span<const std::uint8_t> bits() const { return bits_; }
  std::size_t popcount() const;
  std::vector<std::size_t> ones() const;
  std::vector<std::size_t> zeros() const;

  bool operator==(const PixelMask&) const = default;

 private:
  std::size_t width_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct Label {
  int index = 0;
  auto operator<=>(const Label&) const = default;
};

/// Untargeted: any label other than the source. Targeted: exactly the target.
class AttackGoal {
 public:
  static AttackGoal untargeted(Label source);
  /// Throws ContractError when target == source.
  static AttackGoal targeted(Label source, Label target);

  bool is_targeted() const { return targeted_; }
  Label source() const { return source_; }
  Label target() const { return target_; }
  bool satisfied_by(Label predicted) const {
    return targeted_ ? predicted == target_ : predicted != source_;
  }

 private:
  AttackGoal(bool targeted, Label source, Label target)
      : targeted_(targeted), source_(source), target_(target) {}

  bool targeted_ = false;
  Label source_;
  Label target_;
};

/// 0-based flattening i = n + width * m.
std::size_t flatten_index(std::size_t n, std::size_t m, std::size_t width, std::size_t height);

struct PixelCoord {
  std::size_t n = 0;
  std::size_t m = 0;
  bool operator==(const PixelCoord&) const = default;
};
PixelCoord unflatten_index(std::size_t i, std::size_t width, std::size_t height);

/// Pixel i is taken from `start` when mask[i] = 1, otherwise from `source`.
ImageTensor compose(const ImageTensor& source, const ImageTensor& start, const PixelMask& mask);

/// Fraction of pixel sites where any channel differs.
double pixel_sparsity(const ImageTensor& a, const ImageTensor& b);
std::size_t differing_pixels(const ImageTensor& a, const ImageTensor& b);

double l2_distance(const ImageTensor& a, const ImageTensor& b);

/// Bit i = 1 iff the images disagree at pixel i on some channel.
PixelMask seed_vector(const ImageTensor& source, const ImageTensor& start);

/// Rounds to the nearest multiple of 1/255.
float quantize_u8(float v);

}  // namespace sparsevo
