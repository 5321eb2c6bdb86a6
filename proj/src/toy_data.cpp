#include "sparsevo/toy_data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "sparsevo/errors.hpp"
#include "sparsevo/image_io.hpp"
#include "sparsevo/rng.hpp"

namespace sparsevo::toy {

namespace {

float random_u8(SplitMix64& gen) { return static_cast<float>(gen.next() % 256) / 255.0f; }

}  // namespace

NearestCentroidModel make_centroid_family(const FamilyParams& params) {
  if (params.num_classes < 2) throw ContractError("toy family needs at least two classes");
  if (params.salient_pixels == 0 || params.salient_pixels > params.shape.pixels()) {
    throw ContractError("toy family: salient pixel count out of range");
  }
  SplitMix64 gen(params.seed);
  std::vector<float> base(params.shape.size());
  for (auto& v : base) v = random_u8(gen);

  const std::size_t pixels = params.shape.pixels();
  std::vector<ImageTensor> centroids;
  std::vector<std::size_t> pool(pixels);
  for (int k = 0; k < params.num_classes; ++k) {
    std::vector<float> data = base;
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t s = 0; s < params.salient_pixels; ++s) {
      const std::size_t j = s + gen.next() % (pixels - s);
      std::swap(pool[s], pool[j]);
      for (std::size_t c = 0; c < params.shape.channels; ++c) {
        const float sign = (gen.next() & 1) ? 1.0f : -1.0f;
        float& v = data[c * pixels + pool[s]];
        // Reflect at the boundary so every salient channel moves by the full amplitude.
        float moved = v + sign * params.amplitude;
        if (moved < 0.0f || moved > 1.0f) moved = v - sign * params.amplitude;
        v = quantize_u8(moved);
      }
    }
    centroids.emplace_back(params.shape, std::move(data));
  }
  return NearestCentroidModel(std::move(centroids));
}

ImageTensor sample_class_image(const NearestCentroidModel& model, Label label, std::uint64_t seed) {
  SplitMix64 gen(seed);
  const ImageTensor& centroid = model.centroids().at(static_cast<std::size_t>(label.index));
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<float> data(centroid.data().begin(), centroid.data().end());
    for (auto& v : data) {
      const int jitter = static_cast<int>(gen.next() % 5) - 2;
      v = quantize_u8(v + static_cast<float>(jitter) / 255.0f);
    }
    ImageTensor image(centroid.shape(), std::move(data));
    if (model.classify(image) == label) return image;
  }
  return centroid;
}

std::vector<harness::EvalPair> make_pairs(const NearestCentroidModel& model, std::size_t count, bool targeted,
                                          std::uint64_t seed) {
  SplitMix64 gen(seed);
  const auto k = static_cast<std::uint64_t>(model.num_classes());
  std::vector<harness::EvalPair> pairs;
  for (std::size_t i = 0; i < count; ++i) {
    harness::EvalPair pair;
    char id[32];
    std::snprintf(id, sizeof(id), "p%03zu", i);
    pair.id = id;
    pair.source_label = Label{static_cast<int>(gen.next() % k)};
    pair.source = sample_class_image(model, pair.source_label, gen.next());
    if (targeted) {
      const auto offset = 1 + gen.next() % (k - 1);
      const Label target{static_cast<int>((static_cast<std::uint64_t>(pair.source_label.index) + offset) % k)};
      pair.target_label = target;
      pair.start = sample_class_image(model, target, gen.next());
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

void write_dataset(const std::filesystem::path& dir, const NearestCentroidModel& model,
                   const std::vector<harness::EvalPair>& pairs) {
  std::filesystem::create_directories(dir / "images");
  write_centroids(dir / "centroids.txt", model);
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& pair : pairs) {
    nlohmann::ordered_json entry;
    entry["id"] = pair.id;
    const auto source_rel = std::filesystem::path("images") / (pair.id + "_source.img");
    io::write_image(dir / source_rel, pair.source);
    entry["source_path"] = source_rel.string();
    entry["source_label"] = pair.source_label.index;
    if (pair.targeted()) {
      const auto start_rel = std::filesystem::path("images") / (pair.id + "_start.img");
      io::write_image(dir / start_rel, *pair.start);
      entry["start_path"] = start_rel.string();
      entry["target_label"] = pair.target_label->index;
    }
    list.push_back(std::move(entry));
  }
  std::ofstream out(dir / "pairs.json");
  out << list.dump(2) << '\n';
}

}  // namespace sparsevo::toy
