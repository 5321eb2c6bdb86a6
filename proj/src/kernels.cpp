#include "sparsevo/kernels.hpp"

#include <algorithm>

namespace sparsevo::kernels {

namespace {

std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

bool pixel_differs(std::span<const float> a, std::span<const float> b, std::size_t pixels,
                   std::size_t channels, std::size_t i) {
  for (std::size_t c = 0; c < channels; ++c) {
    if (a[c * pixels + i] != b[c * pixels + i]) return true;
  }
  return false;
}

}  // namespace

namespace ref {

void compose(std::span<const float> source, std::span<const float> start,
             std::span<const std::uint8_t> mask, std::size_t channels, std::span<float> out) {
  const std::size_t pixels = mask.size();
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < pixels; ++i) {
      const std::size_t k = c * pixels + i;
      out[k] = mask[i] ? start[k] : source[k];
    }
  }
}

double squared_l2(std::span<const float> a, std::span<const float> b) {
  // Same association as the parallel version: per-chunk sums, folded in order.
  double total = 0.0;
  for (std::size_t lo = 0; lo < a.size(); lo += kChunk) {
    double sum = 0.0;
    for (std::size_t i = lo; i < std::min(a.size(), lo + kChunk); ++i) {
      const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
      sum += d * d;
    }
    total += sum;
  }
  return total;
}

std::size_t count_differing_pixels(std::span<const float> a, std::span<const float> b,
                                   std::size_t channels) {
  const std::size_t pixels = a.size() / channels;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pixels; ++i) {
    if (pixel_differs(a, b, pixels, channels, i)) ++count;
  }
  return count;
}

void differing_pixel_mask(std::span<const float> a, std::span<const float> b,
                          std::size_t channels, std::span<std::uint8_t> out) {
  const std::size_t pixels = out.size();
  for (std::size_t i = 0; i < pixels; ++i) out[i] = pixel_differs(a, b, pixels, channels, i);
}

void matvec(std::span<const float> weights, std::span<const float> x, std::span<double> out) {
  const std::size_t dim = x.size();
  for (std::size_t k = 0; k < out.size(); ++k) {
    double total = 0.0;
    for (std::size_t lo = 0; lo < dim; lo += kChunk) {
      double sum = 0.0;
      for (std::size_t i = lo; i < std::min(dim, lo + kChunk); ++i) {
        sum += static_cast<double>(weights[k * dim + i]) * static_cast<double>(x[i]);
      }
      total += sum;
    }
    out[k] = total;
  }
}

}  // namespace ref

namespace omp {

void compose(std::span<const float> source, std::span<const float> start,
             std::span<const std::uint8_t> mask, std::size_t channels, std::span<float> out) {
  const std::ptrdiff_t pixels = static_cast<std::ptrdiff_t>(mask.size());
  const std::ptrdiff_t total = pixels * static_cast<std::ptrdiff_t>(channels);
#pragma omp parallel for schedule(static) if (total > static_cast<std::ptrdiff_t>(kChunk))
  for (std::ptrdiff_t k = 0; k < total; ++k) {
    out[k] = mask[k % pixels] ? start[k] : source[k];
  }
}

double squared_l2(std::span<const float> a, std::span<const float> b) {
  const std::size_t n = a.size();
  const std::ptrdiff_t chunks = static_cast<std::ptrdiff_t>(chunk_count(n));
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static) if (chunks > 1)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
    const std::size_t hi = std::min(n, lo + kChunk);
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
      sum += d * d;
    }
    partial[c] = sum;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

std::size_t count_differing_pixels(std::span<const float> a, std::span<const float> b,
                                   std::size_t channels) {
  const std::size_t pixels = a.size() / channels;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(pixels);
  std::size_t count = 0;
#pragma omp parallel for schedule(static) reduction(+ : count) if (n > static_cast<std::ptrdiff_t>(kChunk))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (pixel_differs(a, b, pixels, channels, static_cast<std::size_t>(i))) ++count;
  }
  return count;
}

void differing_pixel_mask(std::span<const float> a, std::span<const float> b,
                          std::size_t channels, std::span<std::uint8_t> out) {
  const std::size_t pixels = out.size();
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(pixels);
#pragma omp parallel for schedule(static) if (n > static_cast<std::ptrdiff_t>(kChunk))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = pixel_differs(a, b, pixels, channels, static_cast<std::size_t>(i));
  }
}

void matvec(std::span<const float> weights, std::span<const float> x, std::span<double> out) {
  const std::size_t dim = x.size();
  const std::size_t rows = out.size();
  const std::size_t chunks = chunk_count(dim);
  const std::ptrdiff_t cells = static_cast<std::ptrdiff_t>(rows * chunks);
  std::vector<double> partial(rows * chunks, 0.0);
#pragma omp parallel for schedule(static) if (cells > 4)
  for (std::ptrdiff_t cell = 0; cell < cells; ++cell) {
    const std::size_t k = static_cast<std::size_t>(cell) / chunks;
    const std::size_t lo = (static_cast<std::size_t>(cell) % chunks) * kChunk;
    const std::size_t hi = std::min(dim, lo + kChunk);
    const float* w = weights.data() + k * dim;
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      sum += static_cast<double>(w[i]) * static_cast<double>(x[i]);
    }
    partial[cell] = sum;
  }
  for (std::size_t k = 0; k < rows; ++k) {
    double sum = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) sum += partial[k * chunks + c];
    out[k] = sum;
  }
}

}  // namespace omp

}  // namespace sparsevo::kernels
