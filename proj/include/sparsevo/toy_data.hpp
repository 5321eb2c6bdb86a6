#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sparsevo/harness.hpp"
#include "sparsevo/toy_models.hpp"

namespace sparsevo::toy {

/// Class centroids share a random base image and differ from it on
/// `salient_pixels` class-specific pixels by +-amplitude per channel.
struct FamilyParams {
  Shape shape{3, 32, 32};
  int num_classes = 10;
  std::size_t salient_pixels = 16;
  float amplitude = 0.3f;
  std::uint64_t seed = 0;
};

NearestCentroidModel make_centroid_family(const FamilyParams& params);

/// A quantized image near centroid `label` that the model assigns to `label`.
ImageTensor sample_class_image(const NearestCentroidModel& model, Label label, std::uint64_t seed);

/// `count` pairs with ids "p000", "p001", ...; targeted pairs carry a start
/// image of a random other class.
std::vector<harness::EvalPair> make_pairs(const NearestCentroidModel& model, std::size_t count, bool targeted,
                                          std::uint64_t seed);

/// Writes centroids.txt, images/<id>_{source,start}.img and pairs.json.
void write_dataset(const std::filesystem::path& dir, const NearestCentroidModel& model,
                   const std::vector<harness::EvalPair>& pairs);

}  // namespace sparsevo::toy
