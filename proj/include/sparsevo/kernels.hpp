#pragma once

// Data-parallel inner loops. Every kernel has an OpenMP version (namespace
// `omp`, used by the library) and a plain serial version (namespace `ref`)
// kept as the reference for tests and the benchmark.
//
// Reductions sum fixed-size chunks and fold the partials in chunk order, in
// both versions, so results are bit-identical across versions and thread counts.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sparsevo::kernels {

inline constexpr std::size_t kChunk = 4096;

namespace ref {

void compose(std::span<const float> source, std::span<const float> start,
             std::span<const std::uint8_t> mask, std::size_t channels, std::span<float> out);
double squared_l2(std::span<const float> a, std::span<const float> b);
std::size_t count_differing_pixels(std::span<const float> a, std::span<const float> b,
                                   std::size_t channels);
void differing_pixel_mask(std::span<const float> a, std::span<const float> b,
                          std::size_t channels, std::span<std::uint8_t> out);
/// out[k] = dot(weights[k * dim .. (k + 1) * dim), x).
void matvec(std::span<const float> weights, std::span<const float> x, std::span<double> out);

}  // namespace ref

namespace omp {

void compose(std::span<const float> source, std::span<const float> start,
             std::span<const std::uint8_t> mask, std::size_t channels, std::span<float> out);
double squared_l2(std::span<const float> a, std::span<const float> b);
std::size_t count_differing_pixels(std::span<const float> a, std::span<const float> b,
                                   std::size_t channels);
void differing_pixel_mask(std::span<const float> a, std::span<const float> b,
                          std::size_t channels, std::span<std::uint8_t> out);
void matvec(std::span<const float> weights, std::span<const float> x, std::span<double> out);

}  // namespace omp

}  // namespace sparsevo::kernels
