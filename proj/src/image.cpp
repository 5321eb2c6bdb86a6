#include "sparsevo/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sparsevo/errors.hpp"
#include "sparsevo/kernels.hpp"

namespace sparsevo {

namespace {

void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* op) {
  if (a.shape() != b.shape()) throw ContractError(std::string(op) + ": image shapes differ");
}

void require_value(float v) {
  if (!(v >= 0.0f && v <= 1.0f)) throw ContractError("pixel value outside [0, 1]");
}

}  // namespace

ImageTensor::ImageTensor(Shape shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
  if (shape_.channels == 0 || shape_.width == 0 || shape_.height == 0) {
    throw ContractError("image dimensions must be positive");
  }
  if (data_.size() != shape_.size()) throw ContractError("image data length != C*W*H");
  for (float v : data_) require_value(v);
}

ImageTensor ImageTensor::filled(Shape shape, float value) {
  return ImageTensor(shape, std::vector<float>(shape.size(), value));
}

void ImageTensor::set(std::size_t c, std::size_t pixel, float value) {
  if (c >= channels() || pixel >= pixels()) throw ContractError("pixel index out of range");
  require_value(value);
  data_[c * pixels() + pixel] = value;
}

PixelMask::PixelMask(std::size_t width, std::size_t height, bool value)
    : width_(width), bits_(width * height, value ? 1 : 0) {}

PixelMask::PixelMask(std::size_t width, std::vector<std::uint8_t> bits)
    : width_(width), bits_(std::move(bits)) {
  if (width_ == 0 || bits_.size() % width_ != 0) throw ContractError("mask length not a multiple of width");
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t PixelMask::popcount() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<std::size_t> PixelMask::ones() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> PixelMask::zeros() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (!bits_[i]) out.push_back(i);
  }
  return out;
}

AttackGoal AttackGoal::untargeted(Label source) { return AttackGoal(false, source, source); }

AttackGoal AttackGoal::targeted(Label source, Label target) {
  if (source == target) throw ContractError("target label equals source label");
  return AttackGoal(true, source, target);
}

std::size_t flatten_index(std::size_t n, std::size_t m, std::size_t width, std::size_t height) {
  if (n >= width || m >= height) throw ContractError("pixel coordinate out of range");
  return n + width * m;
}

PixelCoord unflatten_index(std::size_t i, std::size_t width, std::size_t height) {
  if (width == 0 || i >= width * height) throw ContractError("mask index out of range");
  return {i % width, i / width};
}

ImageTensor compose(const ImageTensor& source, const ImageTensor& start, const PixelMask& mask) {
  require_same_shape(source, start, "compose");
  if (mask.size() != source.pixels() || mask.width() != source.width()) {
    throw ContractError("compose: mask does not match image");
  }
  std::vector<float> out(source.shape().size());
  kernels::omp::compose(source.data(), start.data(), mask.bits(), source.channels(), out);
  return ImageTensor(source.shape(), std::move(out));
}

std::size_t differing_pixels(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b, "pixel_sparsity");
  return kernels::omp::count_differing_pixels(a.data(), b.data(), a.channels());
}

double pixel_sparsity(const ImageTensor& a, const ImageTensor& b) {
  return static_cast<double>(differing_pixels(a, b)) / static_cast<double>(a.pixels());
}

double l2_distance(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b, "l2_distance");
  return std::sqrt(kernels::omp::squared_l2(a.data(), b.data()));
}

PixelMask seed_vector(const ImageTensor& source, const ImageTensor& start) {
  require_same_shape(source, start, "seed_vector");
  std::vector<std::uint8_t> bits(source.pixels());
  kernels::omp::differing_pixel_mask(source.data(), start.data(), source.channels(), bits);
  return PixelMask(source.width(), std::move(bits));
}

float quantize_u8(float v) {
  const float clamped = std::clamp(v, 0.0f, 1.0f);
  return std::round(clamped * 255.0f) / 255.0f;
}

}  // namespace sparsevo
