#include "latentflow/motion_space.hpp"

#include <cmath>
#include <json.hpp>

#include "latentflow/binary_io.hpp"
#include "latentflow/error.hpp"
#include "latentflow/rng.hpp"

namespace latentflow {

namespace {

constexpr std::string_view kBasisMagic{"LFBASIS\0", 8};
constexpr std::uint32_t kBasisVersion = 1;
constexpr double kRankTolerance = 1e-12;

void subtract_projection(std::span<double> v, std::span<const double> unit) {
  const double c = dot(v, unit);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] -= c * unit[k];
}

void require_dims(std::size_t got, const MotionBasis& basis, const char* what) {
  if (got != basis.dims()) {
    throw DimError(std::string(what) + " has " + std::to_string(got) +
                   " entries, basis dimension is " + std::to_string(basis.dims()));
  }
}

}  // namespace

double MotionBasis::orthonormality_error() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < count(); ++i) {
    for (std::size_t j = 0; j < count(); ++j) {
      const double g = dot(direction(i), direction(j));
      worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

MotionBasis MotionBasis::checked(Tensor2 rows) {
  if (rows.rows() > rows.cols()) {
    throw DataError("basis has more directions (" + std::to_string(rows.rows()) +
                    ") than dimensions (" + std::to_string(rows.cols()) + ")");
  }
  MotionBasis basis(std::move(rows));
  if (basis.orthonormality_error() > kOrthonormalityTolerance) {
    throw DataError("stored basis is not orthonormal");
  }
  return basis;
}

MotionBasis orthonormalize(const Tensor2& raw) {
  if (raw.rows() > raw.cols()) {
    throw RankError("cannot fit " + std::to_string(raw.rows()) + " directions in dimension " +
                    std::to_string(raw.cols()));
  }
  Tensor2 q = raw;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    auto v = q.row(i);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < i; ++j) subtract_projection(v, q.row(j));
    }
    const double n = norm2(v);
    if (!(n >= kRankTolerance)) {
      throw RankError("row " + std::to_string(i) + " is linearly dependent on rows before it");
    }
    for (double& x : v) x /= n;
  }
  return MotionBasis(std::move(q));
}

MotionBasis random_basis(std::size_t dims, std::size_t count, std::uint64_t seed) {
  Rng rng(seed, 0xBA515);
  return orthonormalize(Tensor2::normal(count, dims, rng));
}

MotionLatent compose(const CoefficientVector& lambda, const MotionBasis& basis) {
  if (lambda.values.size() != basis.count()) {
    throw DimError("coefficient vector has " + std::to_string(lambda.values.size()) +
                   " entries, basis has " + std::to_string(basis.count()) + " directions");
  }
  MotionLatent w{std::vector<double>(basis.dims(), 0.0)};
  for (std::size_t m = 0; m < basis.count(); ++m) {
    const auto v = basis.direction(m);
    for (std::size_t k = 0; k < w.values.size(); ++k) w.values[k] += lambda.values[m] * v[k];
  }
  return w;
}

CoefficientVector project(const MotionLatent& w, const MotionBasis& basis) {
  require_dims(w.values.size(), basis, "motion latent");
  CoefficientVector lambda{std::vector<double>(basis.count())};
  for (std::size_t m = 0; m < basis.count(); ++m) {
    lambda.values[m] = dot(w.values, basis.direction(m));
  }
  return lambda;
}

MotionLatent edit_lambda(const MotionLatent& w, const MotionBasis& basis, std::size_t direction,
                         double delta) {
  require_dims(w.values.size(), basis, "motion latent");
  if (direction < 1 || direction > basis.count()) {
    throw IndexError("direction " + std::to_string(direction) + " outside 1.." +
                     std::to_string(basis.count()));
  }
  MotionLatent out = w;
  const auto v = basis.direction(direction - 1);
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += delta * v[k];
  return out;
}

Decomposition decompose(std::span<const double> full, const MotionBasis& basis) {
  require_dims(full.size(), basis, "latent");
  MotionLatent as_motion{std::vector<double>(full.begin(), full.end())};
  Decomposition out;
  out.motion = compose(project(as_motion, basis), basis);
  out.identity.values.resize(full.size());
  for (std::size_t k = 0; k < full.size(); ++k) {
    out.identity.values[k] = full[k] - out.motion.values[k];
  }
  return out;
}

IdentityLatent sample_complement(const MotionBasis& basis, Rng& rng) {
  IdentityLatent id{std::vector<double>(basis.dims())};
  for (double& x : id.values) x = rng.normal();
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t m = 0; m < basis.count(); ++m) subtract_projection(id.values, basis.direction(m));
  }
  return id;
}

Tensor2 project_rows(const Tensor2& latents, const MotionBasis& basis) {
  require_dims(latents.cols(), basis, "latent rows");
  Tensor2 out(latents.rows(), basis.count());
  for (std::size_t l = 0; l < latents.rows(); ++l) {
    for (std::size_t m = 0; m < basis.count(); ++m) out(l, m) = dot(latents.row(l), basis.direction(m));
  }
  return out;
}

Tensor2 compose_rows(const Tensor2& coefficients, const MotionBasis& basis) {
  if (coefficients.cols() != basis.count()) {
    throw DimError("coefficient rows have " + std::to_string(coefficients.cols()) +
                   " entries, basis has " + std::to_string(basis.count()));
  }
  return matmul(coefficients, basis.vectors());
}

std::vector<std::uint8_t> MotionBasis::to_bytes() const {
  BinaryWriter w(kBasisMagic);
  w.u32(kBasisVersion);
  w.u32(static_cast<std::uint32_t>(dims()));
  w.u32(static_cast<std::uint32_t>(count()));
  w.f64s(vectors_.values());
  return std::move(w).finish();
}

MotionBasis MotionBasis::from_bytes(std::vector<std::uint8_t> bytes) {
  BinaryReader r(std::move(bytes), kBasisMagic);
  const std::uint32_t version = r.u32();
  if (version != kBasisVersion) throw DataError("unsupported basis version " + std::to_string(version));
  const std::uint32_t d = r.u32();
  const std::uint32_t m = r.u32();
  Tensor2 rows(m, d, r.f64s(static_cast<std::size_t>(m) * d));
  if (!r.at_end()) throw DataError("trailing bytes after basis payload");
  return checked(std::move(rows));
}

std::string MotionBasis::to_json() const {
  nlohmann::json j;
  j["format"] = "latentflow.basis";
  j["version"] = kBasisVersion;
  j["dims"] = dims();
  j["count"] = count();
  auto& rows = j["vectors"] = nlohmann::json::array();
  for (std::size_t m = 0; m < count(); ++m) {
    rows.push_back(std::vector<double>(direction(m).begin(), direction(m).end()));
  }
  return j.dump(1);
}

MotionBasis MotionBasis::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("basis json: ") + e.what());
  }
  if (j.value("format", "") != "latentflow.basis") throw DataError("not a basis dump");
  const std::size_t d = j.at("dims").get<std::size_t>();
  const std::size_t m = j.at("count").get<std::size_t>();
  Tensor2 rows(m, d);
  const auto& vectors = j.at("vectors");
  if (vectors.size() != m) throw DataError("basis json row count mismatch");
  for (std::size_t i = 0; i < m; ++i) {
    const auto row = vectors[i].get<std::vector<double>>();
    if (row.size() != d) throw DataError("basis json row length mismatch");
    std::copy(row.begin(), row.end(), rows.row(i).begin());
  }
  return checked(std::move(rows));
}

}  // namespace latentflow
