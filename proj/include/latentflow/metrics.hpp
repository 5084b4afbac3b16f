#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "latentflow/tensor.hpp"

namespace latentflow {

/// Unbiased (U-statistic) energy distance between the row samples of `a`
/// and `b`: 2 E|X-Y| - E|X-X'| - E|Y-Y'|. Needs at least two rows each.
double energy_distance(const Tensor2& a, const Tensor2& b);

/// Mean over random unit directions of the 1-D Wasserstein-1 distance
/// between the projected samples; both inputs need the same row count.
double sliced_wasserstein(const Tensor2& a, const Tensor2& b, std::size_t projections, std::uint64_t seed);

/// Pearson correlation; 0 when either input has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

/// Pearson r per column, averaged over columns.
double mean_column_correlation(const Tensor2& a, const Tensor2& b);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

double median(std::vector<double> values);

/// Frame-to-frame latent step norms of a sliding-window sequence, split
/// into steps that cross a window boundary and steps inside a window.
struct FrameDeltas {
  std::vector<double> boundary;
  std::vector<double> intra;

  FrameDeltas& operator+=(const FrameDeltas& other);
  /// mean(boundary) / median(intra)
  double ratio() const;
};

FrameDeltas frame_deltas(const Tensor2& latents, std::size_t window);

}  // namespace latentflow
