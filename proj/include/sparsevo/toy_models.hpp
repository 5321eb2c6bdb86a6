#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "sparsevo/image.hpp"
#include "sparsevo/oracle.hpp"

namespace sparsevo {

/// Immutable desk-scale classifier. Thread-safe; oracles share one instance.
class ToyModel {
 public:
  virtual ~ToyModel() = default;
  virtual Label classify(const ImageTensor& image) const = 0;
  virtual int num_classes() const = 0;
  virtual Shape input_shape() const = 0;
};

enum class ToyKind { linear, nearest_centroid, mlp2 };

/// Seeded model description. Parameters are drawn from SplitMix64(seed) as
/// uniform values in [-1, 1) (2u - 1), in the order documented per model.
struct ToyModelSpec {
  ToyKind kind = ToyKind::linear;
  std::uint64_t seed = 0;
  int num_classes = 10;
  Shape shape;
  /// Linear only: biases are (2u - 1) * bias_scale; 0 gives zero biases.
  double bias_scale = 0.0;
};

/// scores = W x + b, label = argmax with ties to the lowest class.
/// Seeded weights: row-major W (class k, element i) each (2u - 1) / sqrt(C*W*H),
/// then the K biases.
class LinearModel final : public ToyModel {
 public:
  LinearModel(Shape shape, std::vector<float> weights, std::vector<float> biases);
  static LinearModel from_spec(const ToyModelSpec& spec);

  Label classify(const ImageTensor& image) const override;
  int num_classes() const override { return static_cast<int>(biases_.size()); }
  Shape input_shape() const override { return shape_; }
  const std::vector<float>& weights() const { return weights_; }
  const std::vector<float>& biases() const { return biases_; }

 private:
  Shape shape_;
  std::vector<float> weights_;
  std::vector<float> biases_;
};

/// label = argmin_k ||x - centroid_k||, ties to the lowest index.
class NearestCentroidModel final : public ToyModel {
 public:
  /// Requires at least two centroids of equal shape.
  explicit NearestCentroidModel(std::vector<ImageTensor> centroids);

  Label classify(const ImageTensor& image) const override;
  int num_classes() const override { return static_cast<int>(centroids_.size()); }
  Shape input_shape() const override { return centroids_.front().shape(); }
  const std::vector<ImageTensor>& centroids() const { return centroids_; }

 private:
  std::vector<ImageTensor> centroids_;
};

/// Two-layer ReLU network with 32 hidden units. Seeded draw order: W1 (32 x D)
/// scaled by sqrt(3 / D), b1 (32) scaled by 0.1, W2 (K x 32) scaled by
/// sqrt(3 / 32), b2 (K) scaled by 0.1.
class Mlp2Model final : public ToyModel {
 public:
  static constexpr std::size_t kHidden = 32;
  static Mlp2Model from_spec(const ToyModelSpec& spec);

  Label classify(const ImageTensor& image) const override;
  int num_classes() const override { return static_cast<int>(b2_.size()); }
  Shape input_shape() const override { return shape_; }

 private:
  Mlp2Model() = default;
  Shape shape_;
  std::vector<float> w1_, b1_, w2_, b2_;
};

std::shared_ptr<const ToyModel> make_toy_model(const ToyModelSpec& spec);

/// DecisionOracle over a shared toy model.
class ToyOracle final : public DecisionOracle {
 public:
  explicit ToyOracle(std::shared_ptr<const ToyModel> model) : model_(std::move(model)) {}
  int num_classes() const override { return model_->num_classes(); }
  const ToyModel& model() const { return *model_; }

 protected:
  Label classify(const ImageTensor& image) override { return model_->classify(image); }

 private:
  std::shared_ptr<const ToyModel> model_;
};

// Centroid file: header "K C W H", then K images of C*W*H integers in [0, 255]
// laid out like the text image container.
NearestCentroidModel read_centroids(const std::filesystem::path& path);
void write_centroids(const std::filesystem::path& path, const NearestCentroidModel& model);

}  // namespace sparsevo
