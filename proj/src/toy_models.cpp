#include "sparsevo/toy_models.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "sparsevo/errors.hpp"
#include "sparsevo/kernels.hpp"
#include "sparsevo/rng.hpp"

namespace sparsevo {

namespace {

void require_shape(const Shape& expected, const ImageTensor& image) {
  if (image.shape() != expected) throw ContractError("toy model: input shape mismatch");
}

std::vector<float> draw(SplitMix64& gen, std::size_t n, double scale) {
  std::vector<float> out(n);
  for (auto& v : out) v = static_cast<float>((2.0 * gen.next_unit() - 1.0) * scale);
  return out;
}

Label argmax(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return Label{static_cast<int>(best)};
}

void require_spec(const ToyModelSpec& spec) {
  if (spec.num_classes < 2) throw ContractError("toy model needs at least two classes");
  if (spec.shape.size() == 0) throw ContractError("toy model needs a non-empty input shape");
}

}  // namespace

LinearModel::LinearModel(Shape shape, std::vector<float> weights, std::vector<float> biases)
    : shape_(shape), weights_(std::move(weights)), biases_(std::move(biases)) {
  if (biases_.size() < 2) throw ContractError("linear model needs at least two classes");
  if (weights_.size() != biases_.size() * shape_.size()) {
    throw ContractError("linear model: weight matrix size mismatch");
  }
}

LinearModel LinearModel::from_spec(const ToyModelSpec& spec) {
  require_spec(spec);
  SplitMix64 gen(spec.seed);
  const std::size_t dim = spec.shape.size();
  const std::size_t k = static_cast<std::size_t>(spec.num_classes);
  auto weights = draw(gen, k * dim, 1.0 / std::sqrt(static_cast<double>(dim)));
  auto biases = draw(gen, k, spec.bias_scale);
  return LinearModel(spec.shape, std::move(weights), std::move(biases));
}

Label LinearModel::classify(const ImageTensor& image) const {
  require_shape(shape_, image);
  std::vector<double> scores(biases_.size());
  kernels::omp::matvec(weights_, image.data(), scores);
  for (std::size_t k = 0; k < scores.size(); ++k) scores[k] += biases_[k];
  return argmax(scores);
}

NearestCentroidModel::NearestCentroidModel(std::vector<ImageTensor> centroids)
    : centroids_(std::move(centroids)) {
  if (centroids_.size() < 2) throw ContractError("nearest-centroid model needs at least two centroids");
  for (const auto& c : centroids_) {
    if (c.shape() != centroids_.front().shape()) throw ContractError("centroid shapes differ");
  }
}

Label NearestCentroidModel::classify(const ImageTensor& image) const {
  require_shape(input_shape(), image);
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centroids_.size(); ++k) {
    const double d = kernels::omp::squared_l2(image.data(), centroids_[k].data());
    if (d < best_dist) {
      best_dist = d;
      best = k;
    }
  }
  return Label{static_cast<int>(best)};
}

Mlp2Model Mlp2Model::from_spec(const ToyModelSpec& spec) {
  require_spec(spec);
  SplitMix64 gen(spec.seed);
  const std::size_t dim = spec.shape.size();
  const std::size_t k = static_cast<std::size_t>(spec.num_classes);
  Mlp2Model model;
  model.shape_ = spec.shape;
  model.w1_ = draw(gen, kHidden * dim, std::sqrt(3.0 / static_cast<double>(dim)));
  model.b1_ = draw(gen, kHidden, 0.1);
  model.w2_ = draw(gen, k * kHidden, std::sqrt(3.0 / static_cast<double>(kHidden)));
  model.b2_ = draw(gen, k, 0.1);
  return model;
}

Label Mlp2Model::classify(const ImageTensor& image) const {
  require_shape(shape_, image);
  std::vector<double> hidden(kHidden);
  kernels::omp::matvec(w1_, image.data(), hidden);
  std::vector<float> activation(kHidden);
  for (std::size_t h = 0; h < kHidden; ++h) {
    activation[h] = static_cast<float>(std::max(0.0, hidden[h] + b1_[h]));
  }
  std::vector<double> scores(b2_.size());
  kernels::ref::matvec(w2_, activation, scores);
  for (std::size_t c = 0; c < scores.size(); ++c) scores[c] += b2_[c];
  return argmax(scores);
}

std::shared_ptr<const ToyModel> make_toy_model(const ToyModelSpec& spec) {
  switch (spec.kind) {
    case ToyKind::linear:
      return std::make_shared<LinearModel>(LinearModel::from_spec(spec));
    case ToyKind::mlp2:
      return std::make_shared<Mlp2Model>(Mlp2Model::from_spec(spec));
    case ToyKind::nearest_centroid:
      break;
  }
  throw ContractError("nearest-centroid models are loaded from a centroid file, not seeded");
}

NearestCentroidModel read_centroids(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open centroid file " + path.string());
  std::size_t k = 0;
  Shape shape;
  if (!(in >> k >> shape.channels >> shape.width >> shape.height)) {
    throw ContractError("centroid file: malformed header");
  }
  std::vector<ImageTensor> centroids;
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<float> data(shape.size());
    for (auto& v : data) {
      long raw = 0;
      if (!(in >> raw) || raw < 0 || raw > 255) throw ContractError("centroid file: bad value");
      v = static_cast<float>(raw) / 255.0f;
    }
    centroids.emplace_back(shape, std::move(data));
  }
  return NearestCentroidModel(std::move(centroids));
}

void write_centroids(const std::filesystem::path& path, const NearestCentroidModel& model) {
  std::ofstream out(path);
  if (!out) throw ContractError("cannot write centroid file " + path.string());
  const Shape s = model.input_shape();
  out << model.num_classes() << ' ' << s.channels << ' ' << s.width << ' ' << s.height << '\n';
  for (const auto& c : model.centroids()) {
    for (std::size_t i = 0; i < c.data().size(); ++i) {
      out << std::lround(c.data()[i] * 255.0f) << ((i + 1) % s.width == 0 ? '\n' : ' ');
    }
  }
}

}  // namespace sparsevo
