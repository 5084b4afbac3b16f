#include "latentflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "latentflow/error.hpp"
#include "latentflow/rng.hpp"

namespace latentflow {

namespace {

double row_distance(const Tensor2& a, std::size_t i, const Tensor2& b, std::size_t j) {
  double s = 0.0;
  const auto x = a.row(i);
  const auto y = b.row(j);
  for (std::size_t c = 0; c < x.size(); ++c) {
    const double d = x[c] - y[c];
    s += d * d;
  }
  return std::sqrt(s);
}

double mean_within(const Tensor2& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = i + 1; j < a.rows(); ++j) s += row_distance(a, i, a, j);
  }
  const double n = static_cast<double>(a.rows());
  return 2.0 * s / (n * (n - 1.0));
}

}  // namespace

double energy_distance(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.cols()) throw DimError("energy distance: " + a.shape_string() + " vs " + b.shape_string());
  if (a.rows() < 2 || b.rows() < 2) throw DataError("energy distance needs at least two samples per side");
  double cross = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) cross += row_distance(a, i, b, j);
  }
  cross /= static_cast<double>(a.rows()) * static_cast<double>(b.rows());
  return 2.0 * cross - mean_within(a) - mean_within(b);
}

double sliced_wasserstein(const Tensor2& a, const Tensor2& b, std::size_t projections, std::uint64_t seed) {
  if (a.cols() != b.cols()) throw DimError("sliced Wasserstein: " + a.shape_string() + " vs " + b.shape_string());
  if (a.rows() != b.rows() || a.rows() == 0) throw DataError("sliced Wasserstein needs equal non-empty samples");
  if (projections == 0) throw ConfigError("need at least one projection");
  Rng rng(seed, 0x5A1CE);
  std::vector<double> dir(a.cols());
  std::vector<double> pa(a.rows());
  std::vector<double> pb(b.rows());
  double total = 0.0;
  for (std::size_t p = 0; p < projections; ++p) {
    for (double& v : dir) v = rng.normal();
    const double n = norm2(dir);
    for (double& v : dir) v /= n;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      pa[i] = dot(a.row(i), dir);
      pb[i] = dot(b.row(i), dir);
    }
    std::ranges::sort(pa);
    std::ranges::sort(pb);
    double s = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) s += std::abs(pa[i] - pb[i]);
    total += s / static_cast<double>(pa.size());
  }
  return total / static_cast<double>(projections);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimError("pearson: lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  if (a.empty()) throw DataError("pearson of empty samples");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double mean_column_correlation(const Tensor2& a, const Tensor2& b) {
  if (!a.same_shape(b)) throw DimError("correlation: " + a.shape_string() + " vs " + b.shape_string());
  std::vector<double> x(a.rows()), y(a.rows());
  double total = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    for (std::size_t r = 0; r < a.rows(); ++r) {
      x[r] = a(r, c);
      y[r] = b(r, c);
    }
    total += pearson(x, y);
  }
  return total / static_cast<double>(a.cols());
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of empty sample");
  const std::size_t mid = values.size() / 2;
  std::ranges::nth_element(values, values.begin() + static_cast<std::ptrdiff_t>(mid));
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  return 0.5 * (upper + *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
}

FrameDeltas& FrameDeltas::operator+=(const FrameDeltas& other) {
  boundary.insert(boundary.end(), other.boundary.begin(), other.boundary.end());
  intra.insert(intra.end(), other.intra.begin(), other.intra.end());
  return *this;
}

double FrameDeltas::ratio() const {
  if (boundary.empty()) throw DataError("no window boundaries to measure");
  const double mean = std::accumulate(boundary.begin(), boundary.end(), 0.0) / static_cast<double>(boundary.size());
  return mean / median(intra);
}

FrameDeltas frame_deltas(const Tensor2& latents, std::size_t window) {
  if (window == 0) throw ConfigError("window must be positive");
  FrameDeltas out;
  for (std::size_t l = 1; l < latents.rows(); ++l) {
    double s = 0.0;
    for (std::size_t c = 0; c < latents.cols(); ++c) {
      const double d = latents(l, c) - latents(l - 1, c);
      s += d * d;
    }
    (l % window == 0 ? out.boundary : out.intra).push_back(std::sqrt(s));
  }
  return out;
}

}  // namespace latentflow
