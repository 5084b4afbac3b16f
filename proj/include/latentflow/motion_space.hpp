#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latentflow/tensor.hpp"

namespace latentflow {

class Rng;

/// d-dimensional motion latent, the part of a full latent that lives in the
/// span of the motion basis (plus whatever complement a sampler produced).
struct MotionLatent {
  std::vector<double> values;
};

/// Identity part of a full latent; orthogonal to every basis direction.
struct IdentityLatent {
  std::vector<double> values;
};

/// Intensities lambda_1..lambda_M over the basis directions.
struct CoefficientVector {
  std::vector<double> values;
};

/// M orthonormal directions in R^d stored as the rows of an M x d matrix.
/// Instances are immutable and can only be obtained through
/// `orthonormalize` or the checked loaders, so the orthonormality
/// invariant always holds.
class MotionBasis {
 public:
  static constexpr double kOrthonormalityTolerance = 1e-9;

  std::size_t dims() const { return vectors_.cols(); }
  std::size_t count() const { return vectors_.rows(); }
  const Tensor2& vectors() const { return vectors_; }
  std::span<const double> direction(std::size_t m) const { return vectors_.row(m); }

  /// max_ij |<v_i, v_j> - delta_ij|
  double orthonormality_error() const;

  std::vector<std::uint8_t> to_bytes() const;
  static MotionBasis from_bytes(std::vector<std::uint8_t> bytes);
  std::string to_json() const;
  static MotionBasis from_json(const std::string& text);

  friend bool operator==(const MotionBasis&, const MotionBasis&) = default;

 private:
  friend MotionBasis orthonormalize(const Tensor2& raw);
  static MotionBasis checked(Tensor2 rows);
  explicit MotionBasis(Tensor2 rows) : vectors_(std::move(rows)) {}

  Tensor2 vectors_;
};

/// Modified Gram-Schmidt with one re-orthogonalization pass. Throws
/// RankError naming the first row whose residual norm drops below 1e-12.
MotionBasis orthonormalize(const Tensor2& raw);

/// Orthonormal basis from a seeded standard-normal M x d matrix.
MotionBasis random_basis(std::size_t dims, std::size_t count, std::uint64_t seed);

MotionLatent compose(const CoefficientVector& lambda, const MotionBasis& basis);
CoefficientVector project(const MotionLatent& w, const MotionBasis& basis);

/// Shifts coefficient `direction` (1-based, lambda_1..lambda_M) by `delta`
/// and leaves every other coefficient and the complement untouched.
MotionLatent edit_lambda(const MotionLatent& w, const MotionBasis& basis, std::size_t direction,
                         double delta);

struct Decomposition {
  IdentityLatent identity;
  MotionLatent motion;
};

Decomposition decompose(std::span<const double> full, const MotionBasis& basis);

/// Random vector in the orthogonal complement of span(basis), Gaussian
/// before projection, so its norm is roughly sqrt(d - M).
IdentityLatent sample_complement(const MotionBasis& basis, Rng& rng);

/// Row-wise project/compose for latent sequences (frames x d <-> frames x M).
Tensor2 project_rows(const Tensor2& latents, const MotionBasis& basis);
Tensor2 compose_rows(const Tensor2& coefficients, const MotionBasis& basis);

}  // namespace latentflow
