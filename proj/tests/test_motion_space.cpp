#include <gtest/gtest.h>

#include <cmath>

#include "latentflow/error.hpp"
#include "latentflow/motion_space.hpp"
#include "latentflow/rng.hpp"

using namespace latentflow;

namespace {

double gram_error(const MotionBasis& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < b.count(); ++i) {
    for (std::size_t j = 0; j < b.count(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < b.dims(); ++k) s += b.vectors()(i, k) * b.vectors()(j, k);
      worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

std::vector<double> coeffs(const MotionLatent& w, const MotionBasis& b) { return project(w, b).values; }

}  // namespace

TEST(Orthonormalize, IdentityStaysIdentity) {
  const MotionBasis b = orthonormalize(Tensor2::identity(5));
  EXPECT_EQ(b.vectors(), Tensor2::identity(5));
}

TEST(Orthonormalize, TwoByTwoHandCase) {
  const MotionBasis b = orthonormalize(Tensor2(2, 2, {1, 0, 1, 1}));
  EXPECT_NEAR(b.vectors()(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(b.vectors()(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(b.vectors()(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(b.vectors()(1, 1), 1.0, 1e-15);
}

TEST(Orthonormalize, SeededGaussianGramMatrix) {
  Rng rng(3);
  const MotionBasis b = orthonormalize(Tensor2::normal(8, 16, rng));
  EXPECT_LE(gram_error(b), 1e-12);
  EXPECT_LE(b.orthonormality_error(), 1e-12);
}

TEST(Orthonormalize, SpanIsPreserved) {
  Rng rng(4);
  const Tensor2 raw = Tensor2::normal(3, 6, rng);
  const MotionBasis b = orthonormalize(raw);
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    const auto row = raw.row(r);
    const MotionLatent w{{row.begin(), row.end()}};
    const MotionLatent back = compose(project(w, b), b);
    for (std::size_t k = 0; k < w.values.size(); ++k) EXPECT_NEAR(back.values[k], w.values[k], 1e-12);
  }
}

TEST(Orthonormalize, RankDeficiencyNamesRow) {
  const Tensor2 raw(3, 4, {1, 2, 3, 4, 0, 1, 0, 0, 2, 4, 6, 8});
  try {
    orthonormalize(raw);
    FAIL() << "expected RankError";
  } catch (const RankError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
}


TEST(Orthonormalize, MoreRowsThanDimsIsRankError) {
  Rng rng(5);
  EXPECT_THROW(orthonormalize(Tensor2::normal(4, 3, rng)), RankError);
}

TEST(Compose, ZeroAndOneHot) {
  const MotionBasis b = random_basis(6, 3, 11);
  const MotionLatent zero = compose({{0, 0, 0}}, b);
  for (double v : zero.values) EXPECT_EQ(v, 0.0);
  const MotionLatent v1 = compose({{0, 1, 0}}, b);
  for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(v1.values[k], b.vectors()(1, k));
}

TEST(Compose, HandBuiltBasisAgainstDotOracle) {
  const double s = 1.0 / std::sqrt(2.0);
  const MotionBasis b = orthonormalize(Tensor2(2, 4, {s, s, 0, 0, 0, 0, s, -s}));
  const MotionLatent w = compose({{2, -3}}, b);
  const std::vector<double> expected = {2 * s, 2 * s, -3 * s, 3 * s};
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(w.values[k], expected[k], 1e-12);
}

TEST(Compose, LengthMismatch) {
  const MotionBasis b = random_basis(6, 3, 11);
  EXPECT_THROW(compose({{1, 2}}, b), DimError);
  EXPECT_THROW(project({{1, 2, 3}}, b), DimError);
}

TEST(Project, OneHotOnDirection) {
  const MotionBasis b = random_basis(16, 8, 2);
  const auto v = b.direction(5);
  const std::vector<double> lam = coeffs({{v.begin(), v.end()}}, b);
  for (std::size_t m = 0; m < 8; ++m) EXPECT_NEAR(lam[m], m == 5 ? 1.0 : 0.0, 1e-12);
}

TEST(Project, RoundTrip) {
  const MotionBasis b = random_basis(16, 8, 2);
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    CoefficientVector lam{std::vector<double>(8)};
    for (double& x : lam.values) x = 5.0 * rng.normal();
    const std::vector<double> back = coeffs(compose(lam, b), b);
    for (std::size_t m = 0; m < 8; ++m) EXPECT_NEAR(back[m], lam.values[m], 1e-9);
  }
}

TEST(Project, ComplementComponentIgnored) {
  const MotionBasis b = random_basis(16, 8, 2);
  Rng rng(10);
  const IdentityLatent id = sample_complement(b, rng);
  const MotionLatent w = compose({{1, 2, 3, 4, 5, 6, 7, 8}}, b);
  MotionLatent shifted = w;
  for (std::size_t k = 0; k < 16; ++k) shifted.values[k] += id.values[k];
  const auto a = coeffs(w, b);
  const auto c = coeffs(shifted, b);
  for (std::size_t m = 0; m < 8; ++m) EXPECT_NEAR(a[m], c[m], 1e-12);
}

TEST(EditLambda, ZeroDeltaIsIdentity) {
  const MotionBasis b = random_basis(16, 8, 2);
  Rng rng(12);
  MotionLatent w{std::vector<double>(16)};
  for (double& x : w.values) x = rng.normal();
  EXPECT_EQ(edit_lambda(w, b, 3, 0.0).values, w.values);
}

TEST(EditLambda, PlusTenMovesOnlyThatCoefficient) {
  const MotionBasis b = random_basis(16, 8, 2);
  Rng rng(13);
  MotionLatent w{std::vector<double>(16)};
  for (double& x : w.values) x = rng.normal();
  const auto before = coeffs(w, b);
  const MotionLatent edited = edit_lambda(w, b, 8, 10.0);
  const auto after = coeffs(edited, b);
  for (std::size_t m = 0; m < 8; ++m) EXPECT_NEAR(after[m] - before[m], m == 7 ? 10.0 : 0.0, 1e-9);
  const Decomposition d0 = decompose(w.values, b);
  const Decomposition d1 = decompose(edited.values, b);
  for (std::size_t k = 0; k < 16; ++k) EXPECT_NEAR(d0.identity.values[k], d1.identity.values[k], 1e-9);
}

TEST(EditLambda, EditsCommute) {
  const MotionBasis b = random_basis(16, 8, 2);
  MotionLatent w{std::vector<double>(16, 0.25)};
  const MotionLatent ab = edit_lambda(edit_lambda(w, b, 1, 2.5), b, 4, -1.5);
  const MotionLatent ba = edit_lambda(edit_lambda(w, b, 4, -1.5), b, 1, 2.5);
  for (std::size_t k = 0; k < 16; ++k) EXPECT_NEAR(ab.values[k], ba.values[k], 1e-9);
}

TEST(EditLambda, IndexOutOfRange) {
  const MotionBasis b = random_basis(16, 8, 2);
  MotionLatent w{std::vector<double>(16, 0.0)};
  EXPECT_THROW(edit_lambda(w, b, 0, 1.0), IndexError);
  EXPECT_THROW(edit_lambda(w, b, 9, 1.0), IndexError);
}

TEST(Decompose, SpanAndComplementCases) {
  const MotionBasis b = random_basis(16, 8, 2);
  const MotionLatent in_span = compose({{1, -1, 2, 0, 0, 3, 0, 1}}, b);
  const Decomposition d = decompose(in_span.values, b);
  for (double v : d.identity.values) EXPECT_NEAR(v, 0.0, 1e-12);
  Rng rng(14);
  const IdentityLatent id = sample_complement(b, rng);
  const Decomposition e = decompose(id.values, b);
  for (double v : e.motion.values) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Decompose, ReSumAndOrthogonality) {
  const MotionBasis b = random_basis(16, 8, 2);
  Rng rng(15);
  std::vector<double> full(16);
  for (double& x : full) x = rng.normal();
  const Decomposition d = decompose(full, b);
  double cross = 0.0;
  for (std::size_t k = 0; k < 16; ++k) {
    EXPECT_NEAR(d.identity.values[k] + d.motion.values[k], full[k], 1e-12);
    cross += d.identity.values[k] * d.motion.values[k];
  }
  EXPECT_LE(std::abs(cross), 1e-8);
  EXPECT_THROW(decompose(std::vector<double>(15), b), DimError);
}

TEST(SampleComplement, OrthogonalToEveryDirection) {
  const MotionBasis b = random_basis(16, 8, 21);
  Rng rng(22);
  for (int i = 0; i < 50; ++i) {
    const IdentityLatent id = sample_complement(b, rng);
    for (std::size_t m = 0; m < 8; ++m) EXPECT_LE(std::abs(dot(id.values, b.direction(m))), 1e-8);
  }
}

TEST(BasisSerialization, BinaryRoundTripIsBitExact) {
  const MotionBasis b = random_basis(16, 8, 2);
  const auto bytes = b.to_bytes();
  const MotionBasis back = MotionBasis::from_bytes(bytes);
  EXPECT_EQ(back, b);
  EXPECT_EQ(back.to_bytes(), bytes);
}

TEST(BasisSerialization, JsonRoundTripIsLossless) {
  const MotionBasis b = random_basis(16, 8, 2);
  EXPECT_EQ(MotionBasis::from_json(b.to_json()), b);
}

TEST(BasisSerialization, CorruptionIsDataError) {
  auto bytes = random_basis(16, 8, 2).to_bytes();
  bytes[40] ^= 0x1;
  EXPECT_THROW(MotionBasis::from_bytes(bytes), DataError);
  bytes = random_basis(16, 8, 2).to_bytes();
  bytes[0] = 'X';
  EXPECT_THROW(MotionBasis::from_bytes(bytes), DataError);
}

TEST(RowHelpers, ProjectComposeRows) {
  const MotionBasis b = random_basis(16, 8, 2);
  Rng rng(30);
  const Tensor2 lam = Tensor2::normal(10, 8, rng);
  EXPECT_LE(max_abs_diff(project_rows(compose_rows(lam, b), b), lam), 1e-9);
}
