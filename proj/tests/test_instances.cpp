#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace bmsdp;
using namespace bmsdp::testing;

namespace {

// Sample mean and variance of off-diagonal and diagonal entries.
struct Moments {
  double off_mean, off_var, diag_var;
};

Moments moments(const Matrix& w) {
  const Index n = w.rows();
  double s = 0, s2 = 0, d2 = 0;
  for (Index i = 0; i < n; ++i) {
    d2 += w(i, i) * w(i, i);
    for (Index j = i + 1; j < n; ++j) {
      s += w(i, j);
      s2 += w(i, j) * w(i, j);
    }
  }
  const double m = double(n) * (n - 1) / 2;
  return {s / m, s2 / m - (s / m) * (s / m), d2 / n};
}

}  // namespace

TEST(Goe, SingleEntryVariance) {
  double s2 = 0;
  for (std::uint64_t seed = 0; seed < 4000; ++seed) s2 += std::pow(goe(1, seed).entry(0, 0), 2);
  EXPECT_NEAR(s2 / 4000, 2.0, 0.15);
}

TEST(Goe, EntryMoments) {
  const Moments m = moments(goe(400, 3).to_dense());
  EXPECT_NEAR(m.off_var, 1.0 / 400, 0.1 / 400);
  EXPECT_NEAR(m.off_mean, 0.0, 5.0 / 400 / std::sqrt(400 * 399 / 2.0) * 20);
  EXPECT_NEAR(m.diag_var, 2.0 / 400, 0.3 * 2.0 / 400);
}

TEST(Goe, OperatorNormNearTwo) {
  const SymmetricMatrix w = goe(1000, 1);
  EXPECT_GE(w.l2(), 1.8);
  EXPECT_LE(w.l2(), 2.2);
}

TEST(Goe, DeterministicAndSymmetric) {
  EXPECT_EQ(goe(50, 7).to_dense(), goe(50, 7).to_dense());
  EXPECT_NE(goe(50, 7).to_dense(), goe(50, 8).to_dense());
  const Matrix w = goe(20, 1).to_dense();
  EXPECT_EQ(w, w.transpose());
  EXPECT_THROW(goe(0, 1ull), std::invalid_argument);
}

TEST(Spiked, LambdaZeroIsGoe) {
  const Instance inst = spiked(60, 0.0, 4);
  EXPECT_EQ(inst.a.to_dense(), goe(60, 4).to_dense());
  ASSERT_TRUE(inst.ground_truth);
  for (Index i = 0; i < 60; ++i) EXPECT_EQ(std::abs((*inst.ground_truth)(i)), 1.0);
  EXPECT_THROW(spiked(10, -1.0, 1), std::invalid_argument);
}

TEST(Spiked, QuadraticFormConcentrates) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Instance inst = spiked(1000, 4.0, seed);
    const Vector& u = *inst.ground_truth;
    const double q = u.dot(inst.a.multiply(u).col(0)) / 1000.0;
    EXPECT_GE(q, 3.0);
    EXPECT_LE(q, 5.0);
  }
}

TEST(Spiked, ResidualHasGoeMoments) {
  const Instance inst = spiked(400, 3.0, 9);
  const Vector& u = *inst.ground_truth;
  const Matrix w = inst.a.to_dense() - (3.0 / 400) * u * u.transpose();
  const Moments m = moments(w);
  EXPECT_NEAR(m.off_var, 1.0 / 400, 0.1 / 400);
  EXPECT_NEAR(m.diag_var, 2.0 / 400, 0.3 * 2.0 / 400);
}

TEST(Spiked, TopEigenvalueNearBbpPrediction) {
  const Instance inst = spiked(2000, 4.0, 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(inst.a.to_dense(), Eigen::EigenvaluesOnly);
  EXPECT_NEAR(eig.eigenvalues().maxCoeff(), 4.0 + 0.25, 0.2);
}

TEST(Sbm, SnrFormula) {
  EXPECT_EQ(sbm_snr(5.0, 5.0), 0.0);
  EXPECT_NEAR(sbm_snr(12.0, 4.0), std::sqrt(2.0), 1e-15);
}

TEST(Sbm, BalancedLabelsAndCenteredScaledForm) {
  const Instance inst = sbm(200, 12, 4, 3);
  ASSERT_TRUE(inst.ground_truth && inst.adjacency);
  EXPECT_EQ(inst.ground_truth->sum(), 0.0);
  const double d = 8.0;
  const Matrix want =
      (inst.adjacency->to_dense() - (d / 200) * Matrix::Ones(200, 200)) / std::sqrt(d);
  EXPECT_LE((inst.a.to_dense() - want).norm(), 1e-12);
  EXPECT_TRUE(inst.a.has_rank_one());
  EXPECT_EQ(inst.meta.model, "sbm");
}

TEST(Sbm, MeanDegreeAndGroupFrequencies) {
  const Index n = 2000;
  const Instance inst = sbm(n, 12, 4, 5);
  const Matrix g = inst.adjacency->to_dense();
  EXPECT_NEAR(g.sum() / n, 8.0, 0.4);
  const Vector& u = *inst.ground_truth;
  double in = 0, out = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) (u(i) == u(j) ? in : out) += g(i, j);
  const double pairs_in = 2.0 * (n / 2) * (n / 2 - 1) / 2, pairs_out = double(n / 2) * (n / 2);
  const double p_in = 12.0 / n, p_out = 4.0 / n;
  EXPECT_NEAR(in / pairs_in, p_in, 3 * std::sqrt(p_in * (1 - p_in) / pairs_in));
  EXPECT_NEAR(out / pairs_out, p_out, 3 * std::sqrt(p_out * (1 - p_out) / pairs_out));
}

TEST(Sbm, Errors) {
  EXPECT_THROW(sbm(11, 4, 2, 1), std::invalid_argument);
  EXPECT_THROW(sbm(10, 11, 2, 1), std::invalid_argument);
  EXPECT_THROW(sbm(10, 2, 4, 1), std::invalid_argument);
}

TEST(ErdosRenyi, EmptyAndMeanDegree) {
  EXPECT_EQ(erdos_renyi(30, 0.0, 1).stored_entries(), 0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SymmetricMatrix g = erdos_renyi(1000, 50.0, seed);
    EXPECT_NEAR(g.to_dense().sum() / 1000, 50.0, 2.5);
  }
  EXPECT_THROW(erdos_renyi(10, 10.0, 1), std::invalid_argument);
}

TEST(RandomRegular, RowSumsSimpleAndDeterministic) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix g = random_regular(100, 6, seed).to_dense();
    EXPECT_EQ(g.diagonal().sum(), 0.0);
    EXPECT_EQ(g.maxCoeff(), 1.0);
    for (Index i = 0; i < 100; ++i) EXPECT_EQ(g.row(i).sum(), 6.0);
    EXPECT_EQ(g, g.transpose());
  }
  EXPECT_EQ(random_regular(50, 4, 2).to_dense(), random_regular(50, 4, 2).to_dense());
  EXPECT_EQ(random_regular(10, 0, 1).stored_entries(), 0);
  EXPECT_THROW(random_regular(5, 3, 1), std::invalid_argument);
}

TEST(CenteredRegular, RowSumsAndNorms) {
  const SymmetricMatrix a = centered_regular(2000, 12, 1);
  const Vector rows = a.multiply(Matrix::Ones(2000, 1)).col(0);
  // d - n (d/n) vanishes up to rounding of d/n.
  EXPECT_LE(rows.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(a.l1(), 24.0);
  const double want = 2 * std::sqrt(11.0);
  EXPECT_NEAR(a.l2(), want, 0.1 * want);
}

TEST(OcGaussian, BlockView) {
  const SymmetricMatrix a = oc_gaussian(10, 3, 2);
  EXPECT_EQ(a.n(), 30);
  EXPECT_EQ(*a.block_dim(), 3);
  EXPECT_EQ(a.to_dense(), goe(30, 2).to_dense());
}
