#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace bmsdp;
using namespace bmsdp::testing;

namespace {

/// The constraint family at s: for block b, E_pp (one per p) and
/// (E_pq + E_qp) / sqrt(2) (p < q), each applied to s. The images are
/// orthonormal, so the tangent projection is U - sum <B s, U> B s.
std::vector<Matrix> constraint_images(const Matrix& y, Index d) {
  std::vector<Matrix> out;
  const Index m = y.rows() / d;
  for (Index b = 0; b < m; ++b)
    for (Index p = 0; p < d; ++p)
      for (Index q = p; q < d; ++q) {
        Matrix img = Matrix::Zero(y.rows(), y.cols());
        if (p == q) {
          img.row(b * d + p) = y.row(b * d + p);
        } else {
          img.row(b * d + p) = y.row(b * d + q) / std::sqrt(2.0);
          img.row(b * d + q) = y.row(b * d + p) / std::sqrt(2.0);
        }
        out.push_back(std::move(img));
      }
  return out;
}

Matrix constraint_projection(const Matrix& y, Index d, const Matrix& v) {
  Matrix out = v;
  for (const Matrix& img : constraint_images(y, d)) out -= frobenius_inner(img, v) * img;
  return out;
}

SymmetricMatrix block_matrix(Index m, Index d, std::uint64_t seed) {
  return SymmetricMatrix::from_dense(random_symmetric(m * d, seed)).with_block_dim(d);
}

}  // namespace

TEST(StiefelConfig, Invariants) {
  EXPECT_THROW(StiefelConfig(Matrix::Ones(4, 3), 2), std::invalid_argument);
  EXPECT_THROW(StiefelConfig(Matrix::Identity(3, 3), 2), std::invalid_argument);
  EXPECT_THROW(StiefelConfig(Matrix::Identity(2, 1), 2), std::invalid_argument);
  const StiefelConfig s = oc_random_config(5, 3, 4, 1ull);
  for (Index i = 0; i < 5; ++i)
    EXPECT_LE((s.block(i) * s.block(i).transpose() - Matrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(StiefelTangent, RejectsNonSkew) {
  const StiefelConfig s = oc_random_config(2, 2, 3, 1ull);
  EXPECT_THROW(StiefelTangent(s, s.rows()), std::invalid_argument);
}

TEST(OcProjectTangent, NormalSpaceAndIdempotence) {
  const StiefelConfig s = oc_random_config(3, 2, 4, 2ull);
  Rng rng(3);
  Matrix v(6, 4);
  for (Index i = 0; i < 3; ++i) {
    const Matrix g = gaussian_matrix(2, 2, rng);
    const Matrix sym = g + g.transpose();
    v.middleRows(i * 2, 2) = sym * s.block(i);
  }
  EXPECT_LE(oc_project_tangent(s, v).norm(), 1e-12);
  const StiefelTangent u = oc_random_tangent(s, 4ull);
  EXPECT_LE((oc_project_tangent(s, u.rows()).rows() - u.rows()).norm(), 1e-12);
}

TEST(OcProjectTangent, MatchesConstraintBasisOracles) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const StiefelConfig s = oc_random_config(3, 2, 4, seed);
    Rng rng(seed + 50);
    const Matrix v = gaussian_matrix(6, 4, rng);
    const Matrix got = oc_project_tangent(s, v).rows();
    EXPECT_LE((got - constraint_projection(s.rows(), 2, v)).norm(), 1e-12);
    const Matrix p = stiefel_constraint_projector(s.rows(), 2);
    EXPECT_LE((flatten(got) - p * flatten(v)).norm(), 1e-10);
  }
}

TEST(OcProjectTangent, IdempotentSelfAdjoint) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const StiefelConfig s = oc_random_config(4, 3, 5, seed);
    Rng rng(seed);
    const Matrix v = gaussian_matrix(12, 5, rng), w = gaussian_matrix(12, 5, rng);
    const Matrix pv = oc_project_tangent(s, v).rows();
    EXPECT_LE((oc_project_tangent(s, pv).rows() - pv).norm(), 1e-12);
    EXPECT_NEAR(frobenius_inner(pv, w), frobenius_inner(v, oc_project_tangent(s, w).rows()), 1e-12);
  }
  EXPECT_THROW(oc_project_tangent(oc_random_config(2, 2, 3, 1ull), Matrix::Zero(4, 2)),
               DimensionError);
}

TEST(OcRetract, Examples) {
  const StiefelConfig s = oc_random_config(4, 3, 5, 8ull);
  const StiefelTangent u = oc_random_tangent(s, 9ull);
  EXPECT_EQ(oc_retract(s, u, 0.0).rows(), s.rows());
  for (double t : {0.1, 1.0, 10.0}) {
    const StiefelConfig r = oc_retract(s, u, t);
    for (Index i = 0; i < 4; ++i)
      EXPECT_LE((r.block(i) * r.block(i).transpose() - Matrix::Identity(3, 3)).norm(), 1e-12);
  }
}

TEST(OcRetract, PolarFactorIsNearestFrame) {
  const StiefelConfig s = oc_random_config(1, 2, 4, 3ull);
  const StiefelTangent u = oc_random_tangent(s, 4ull);
  const Matrix target = s.rows() + 0.5 * u.rows();
  const Matrix r = oc_retract(s, u, 0.5).rows();
  // Among random orthonormal frames none is closer than the polar factor.
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Matrix q = oc_random_config(1, 2, 4, seed).rows();
    EXPECT_LE((r - target).norm(), (q - target).norm() + 1e-12);
  }
}

TEST(OcRetract, RankDeficientBlockThrows) {
  // For a true tangent (Y + tU)(Y + tU)^T = I + t^2 U U^T, so only an
  // unchecked direction can produce a singular block.
  Matrix y(2, 3);
  y << 1, 0, 0, 0, 1, 0;
  const StiefelConfig s(y, 2);
  Matrix w(2, 3);
  w << -1, 0, 0, 0, 0, 0;
  const StiefelTangent bad(s, w, StiefelTangent::Trusted{});
  EXPECT_THROW(oc_retract(s, bad, 1.0), std::domain_error);
  try {
    oc_retract(s, bad, 1.0);
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("retraction undefined"), std::string::npos);
  }
}

TEST(OcGradient, IdentityAndProjectedEuclidean) {
  const StiefelConfig s = oc_random_config(4, 3, 5, 1ull);
  EXPECT_LE(oc_gradient(SymmetricMatrix::identity(12).with_block_dim(3), s).norm(), 1e-13);
  const SymmetricMatrix a = block_matrix(4, 3, 2);
  const Matrix g = oc_gradient(a, s).rows();
  EXPECT_LE((g - oc_project_tangent(s, 2.0 * a.to_dense() * s.rows()).rows()).norm(), 1e-12);
  EXPECT_THROW(oc_gradient(SymmetricMatrix::identity(12), s), std::invalid_argument);
}

TEST(OcGradient, LambdaMatchesConstraintBasisOracle) {
  const StiefelConfig s = oc_random_config(3, 2, 4, 5ull);
  const SymmetricMatrix a = block_matrix(3, 2, 6);
  const Matrix m = a.to_dense() * s.rows() * s.rows().transpose();
  // lambda_B = Tr(B A s s^T) for each basis element; Lambda = sum lambda_B B.
  Matrix lam_full = Matrix::Zero(6, 6);
  for (Index b = 0; b < 3; ++b)
    for (Index p = 0; p < 2; ++p)
      for (Index q = p; q < 2; ++q) {
        Matrix bm = Matrix::Zero(6, 6);
        if (p == q) {
          bm(b * 2 + p, b * 2 + p) = 1;
        } else {
          bm(b * 2 + p, b * 2 + q) = bm(b * 2 + q, b * 2 + p) = 1 / std::sqrt(2.0);
        }
        lam_full += (bm * m).trace() * bm;
      }
  const OcHessianOperator h(a, s);
  for (Index b = 0; b < 3; ++b)
    EXPECT_LE((h.lambda().middleRows(b * 2, 2) - lam_full.block(b * 2, b * 2, 2, 2)).norm(), 1e-12);
  EXPECT_LE((oc_gradient(a, s).rows() - 2.0 * (a.to_dense() - lam_full) * s.rows()).norm(), 1e-11);
}

TEST(OcGradient, FiniteDifferenceAlongRetraction) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const StiefelConfig s = oc_random_config(4, 3, 5, seed);
    const SymmetricMatrix a = block_matrix(4, 3, seed + 10);
    const StiefelTangent u = oc_random_tangent(s, seed + 20);
    const double h = 1e-5 / std::sqrt(a.l1());
    const double fd = central_first([&](double t) { return oc_objective(a, retract_signed(s, u, t)); }, h);
    const double want = inner(oc_gradient(a, s), u);
    EXPECT_NEAR(fd, want, 1e-5 * std::max(1.0, std::abs(want)));
  }
}

TEST(OcHessian, QuadraticFormMatchesSecondDifference) {
  // The polar retraction is second order, so (f o R)''(0) = <u, Hess[u]>.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const StiefelConfig s = oc_random_config(4, 3, 5, seed);
    const SymmetricMatrix a = block_matrix(4, 3, seed + 30);
    const StiefelTangent u = oc_random_tangent(s, seed + 40);
    const OcHessianOperator h(a, s);
    const double fd = central_second([&](double t) { return oc_objective(a, retract_signed(s, u, t)); },
                                     1e-3 / std::sqrt(a.l1()));
    const double want = inner(u, h.apply(u));
    EXPECT_NEAR(fd, want, 1e-4 * std::max(1.0, std::abs(want)));
    EXPECT_NEAR(oc_rayleigh(a, s, u), want / inner(u, u), 1e-10);
  }
}

TEST(OcHessian, SelfAdjoint) {
  const StiefelConfig s = oc_random_config(3, 2, 4, 1ull);
  const SymmetricMatrix a = block_matrix(3, 2, 2);
  const OcHessianOperator h(a, s);
  const StiefelTangent u = oc_random_tangent(s, 3ull), v = oc_random_tangent(s, 4ull);
  EXPECT_NEAR(inner(v, h.apply(u)), inner(u, h.apply(v)), 1e-10);
}

TEST(DOneReduction, EveryKernelMatchesSphereBitForBit) {
  const SymmetricMatrix a = SymmetricMatrix::from_dense(random_symmetric(9, 7));
  const SphereConfig s = random_config(9, 3, 8ull);
  const StiefelConfig o = StiefelConfig::from_sphere(s);
  const TangentField u = random_tangent(s, 9ull);
  const StiefelTangent ou = StiefelTangent::from_sphere(u);
  Rng rng(10);
  const Matrix v = gaussian_matrix(9, 3, rng);

  EXPECT_EQ(oc_project_tangent(o, v).rows(), project_tangent(s, v).rows());
  EXPECT_EQ(oc_retract(o, ou, 0.3).rows(), retract(s, u, 0.3).rows());
  EXPECT_EQ(oc_objective(a, o), objective(a, s));
  EXPECT_EQ(oc_gradient(a, o).rows(), gradient(a, s).rows());
  EXPECT_EQ(oc_rayleigh(a, o, ou), rayleigh(HessianOperator(a, s), u));
  EXPECT_EQ(OcHessianOperator(a, o).apply(ou).rows(), HessianOperator(a, s).apply(u).rows());
  EXPECT_EQ(oc_random_config(9, 1, 3, 5ull).rows(), random_config(9, 3, 5ull).rows());
  EXPECT_EQ(oc_random_tangent(o, 6ull).rows(), random_tangent(s, 6ull).rows());
  // Polar factor of a 1 x k row is its normalization.
  Matrix row(1, 3);
  row << 3, 0, 4;
  EXPECT_LE((detail::polar_rows(row) - row / 5.0).norm(), 1e-15);
}

TEST(OcConfigFormat, RoundTrip) {
  const StiefelConfig s = oc_random_config(3, 2, 4, 1ull);
  std::stringstream ss;
  write_oc_config(ss, s);
  const StiefelConfig r = read_oc_config(ss);
  EXPECT_EQ(r.rows(), s.rows());
  EXPECT_EQ(r.d(), 2);
}
