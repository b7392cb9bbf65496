#include <gtest/gtest.h>

#include "msqgt/states.hpp"
#include "oracles.hpp"

using namespace msqgt;

TEST(Density, RejectsNonHermitian) {
  Mat m(2, 2);
  m << 0.5, 0.1, 0.2, 0.5;
  try {
    validate_density(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotHermitian);
  }
}

TEST(Density, RejectsTraceAndNegativity) {
  Mat m = Mat::Identity(2, 2) * 0.6;
  EXPECT_THROW(validate_density(m), Error);
  Mat n(2, 2);
  n << 1.2, 0, 0, -0.2;
  try {
    validate_density(n);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotPSD);
    EXPECT_NEAR(e.magnitude(), -0.2, 1e-15);
  }
  EXPECT_THROW(validate_density(Mat::Zero(2, 3)), Error);
}

TEST(Density, SpectrumDescendingAndRank) {
  Mat m(3, 3);
  m << 0.2, 0, 0, 0, 0.5, 0, 0, 0, 0.3;
  const DensityMatrix r = validate_density(m);
  EXPECT_NEAR(r.eigenvalues()(0), 0.5, 1e-15);
  EXPECT_NEAR(r.eigenvalues()(2), 0.2, 1e-15);
  EXPECT_TRUE(r.full_rank());
  EXPECT_NEAR(r.spectral_gap(), 0.1, 1e-15);
  Mat p = Mat::Zero(2, 2);
  p(0, 0) = 1.0;
  EXPECT_FALSE(validate_density(p).full_rank());
  EXPECT_TRUE(validate_density(Mat::Identity(2, 2) / 2.0).degenerate());
}

TEST(Bipartite, PartialTracesMatchBruteForce) {
  std::mt19937_64 rng(11);
  for (Eigen::Index n : {2, 3, 4}) {
    const Purification psi = Purification::normalized(oracle::random_vector(n * n, rng));
    EXPECT_LT(max_abs(partial_trace_env(psi).matrix() - oracle::trace_env(psi.amplitudes(), n)), 1e-14);
    EXPECT_LT(max_abs(partial_trace_sys(psi).matrix() - oracle::trace_sys(psi.amplitudes(), n)), 1e-14);
  }
}

TEST(Bipartite, EnvAndSysActionsMatchKronecker) {
  std::mt19937_64 rng(12);
  const Eigen::Index n = 3;
  const Vec v = oracle::random_vector(n * n, rng);
  const Mat a = oracle::ginibre(n, rng);
  EXPECT_LT((apply_env(a, v) - oracle::kron(Mat::Identity(n, n), a) * v).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((apply_sys(a, v) - oracle::kron(a, Mat::Identity(n, n)) * v).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Bipartite, TraceSysOuterMatchesBruteForce) {
  std::mt19937_64 rng(13);
  const Eigen::Index n = 3;
  const Vec a = oracle::random_vector(n * n, rng);
  const Vec b = oracle::random_vector(n * n, rng);
  Mat ref = Mat::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index l = 0; l < n; ++l)
      for (Eigen::Index i = 0; i < n; ++i) ref(j, l) += a(i * n + j) * std::conj(b(i * n + l));
  EXPECT_LT(max_abs(trace_sys_outer(a, b) - ref), 1e-14);
}

TEST(Purification, RejectsBadVectors) {
  Vec v = Vec::Zero(4);
  v(0) = 1.1;
  EXPECT_THROW(Purification::from_amplitudes(v), Error);
  EXPECT_THROW(Purification::normalized(Vec::Ones(5)), Error);
}

TEST(Purification, PurifyReproducesState) {
  std::mt19937_64 rng(14);
  for (Eigen::Index n : {2, 3, 4}) {
    const DensityMatrix r = validate_density(oracle::random_density(n, rng));
    EXPECT_LT(max_abs(partial_trace_env(purify(r)).matrix() - r.matrix()), 1e-14);
  }
}

TEST(Schmidt, MatchesSvdAndReassembles) {
  std::mt19937_64 rng(15);
  const Purification psi = Purification::normalized(oracle::random_vector(9, rng));
  const SchmidtDecomposition sd = schmidt(psi);
  EXPECT_LT((sd.reassemble() - psi.amplitudes()).cwiseAbs().maxCoeff(), 1e-14);
  // coefficients squared are the spectrum of the reduced state
  const DensityMatrix r = partial_trace_env(psi);
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_NEAR(sd.coefficients(k) * sd.coefficients(k), r.eigenvalues()(k), 1e-14);
  EXPECT_LT(max_abs(sd.env_basis.adjoint() * sd.env_basis - Mat::Identity(3, 3)), 1e-14);
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_NEAR(sd.sys_basis.col(k)(0).imag(), 0.0, 1e-15);
}

TEST(Fidelity, MatchesTextbookDefinition) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + trial % 3;
    const Mat a = oracle::random_density(n, rng), b = oracle::random_density(n, rng);
    EXPECT_NEAR(fidelity(validate_density(a), validate_density(b)), oracle::fidelity(a, b), 1e-12);
  }
}

TEST(Fidelity, TrivialValues) {
  std::mt19937_64 rng(17);
  const DensityMatrix a = validate_density(oracle::random_density(3, rng));
  EXPECT_NEAR(fidelity(a, a), 1.0, 1e-14);
  EXPECT_NEAR(bures_angle(a, a), 0.0, 2e-7);
  Mat p = Mat::Zero(2, 2), q = Mat::Zero(2, 2);
  p(0, 0) = 1.0;
  q(1, 1) = 1.0;
  EXPECT_NEAR(fidelity(validate_density(p), validate_density(q)), 0.0, 1e-15);
  EXPECT_NEAR(bures_distance(validate_density(p), validate_density(q)), std::sqrt(2.0), 1e-15);
}

TEST(Fidelity, PureStatesGiveOverlap) {
  std::mt19937_64 rng(18);
  const Vec a = oracle::random_vector(3, rng), b = oracle::random_vector(3, rng);
  const double f = fidelity(validate_density(a * a.adjoint()), validate_density(b * b.adjoint()));
  EXPECT_NEAR(f, std::abs(a.dot(b)), 1e-7);
}
