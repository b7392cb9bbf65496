#include <gtest/gtest.h>

#include "msqgt/geodesics.hpp"
#include "oracles.hpp"

using namespace msqgt;

namespace {

// Closed-form qubit lift cos t psi0 + sin t psi_q with psi0 = sqrt((1+r)/2)|00> + sqrt((1-r)/2)|11>.
Vec basis(int i, int j) {
  Vec v = Vec::Zero(4);
  v(2 * i + j) = 1.0;
  return v;
}
double cp(double r) { return std::sqrt((1.0 + r) / 2.0); }
double cm(double r) { return std::sqrt((1.0 - r) / 2.0); }

GeodesicSolution diameter_family(double r) {
  return GeodesicSolution::from_lift(Purification::normalized(cp(r) * basis(0, 0) + cm(r) * basis(1, 1)),
                                     Purification::normalized(-cm(r) * basis(0, 0) + cp(r) * basis(1, 1)), 1.0);
}

GeodesicSolution ellipse_family(double r) {
  return GeodesicSolution::from_lift(Purification::normalized(cp(r) * basis(0, 0) + cm(r) * basis(1, 1)),
                                     Purification::normalized(cm(r) * basis(0, 1) + cp(r) * basis(1, 0)), 1.0);
}

}  // namespace

TEST(Geodesic, ClosedFormFamiliesSatisfyConstraints) {
  for (double r : {0.3, 0.6, 1.0}) {
    for (const GeodesicSolution& s : {diameter_family(r), ellipse_family(r)}) {
      EXPECT_LT(s.residuals.orthogonality, 1e-15);
      EXPECT_LT(s.residuals.horizontality, 1e-15);
    }
  }
}

TEST(Geodesic, DiameterTraceFollowsZAxis) {
  const double r = 0.6, phi = std::acos(r);
  const GeodesicSolution s = diameter_family(r);
  for (double t : {0.0, 0.4, 1.1, 2.0}) {
    const Eigen::Vector3d b = bloch_vector(geodesic_lift(s, t).amplitude_matrix() * geodesic_lift(s, t).amplitude_matrix().adjoint());
    EXPECT_NEAR(b(0), 0.0, 1e-15);
    EXPECT_NEAR(b(1), 0.0, 1e-15);
    EXPECT_NEAR(b(2), std::cos(2.0 * t + phi), 1e-14);
  }
  const EllipseFit f = bloch_ellipse_check(s);
  EXPECT_TRUE(f.degenerate);
  EXPECT_NEAR(f.major_axis, 1.0, 1e-12);
}

TEST(Geodesic, EllipseFamilyTrace) {
  for (double r : {0.3, 0.6, 1.0}) {
    const GeodesicSolution s = ellipse_family(r);
    for (double t : {0.1, 0.7, 1.3, 2.9}) {
      const Mat w = geodesic_lift(s, t).amplitude_matrix();
      const Eigen::Vector3d b = bloch_vector(w * w.adjoint());
      EXPECT_NEAR(b(0), std::sin(2.0 * t), 1e-14);
      EXPECT_NEAR(b(2), r * std::cos(2.0 * t), 1e-14);
      EXPECT_NEAR(b(0) * b(0) + b(2) * b(2) / (r * r), 1.0, 1e-13);
    }
    const EllipseFit f = bloch_ellipse_check(s);
    EXPECT_NEAR(f.major_axis, 1.0, 1e-12);
    EXPECT_NEAR(f.minor_axis, r, 1e-12);
    EXPECT_LT(f.max_deviation, 1e-10);
  }
}

TEST(Geodesic, SolvedLiftReproducesEndpointsAndAngle) {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 2 + trial % 3;
    const DensityMatrix a = validate_density(oracle::random_density(n, rng));
    const DensityMatrix b = validate_density(oracle::random_density(n, rng));
    const GeodesicSolution s = solve_geodesic(a, b);
    EXPECT_NEAR(s.theta, std::acos(oracle::fidelity(a.matrix(), b.matrix())), 1e-9);
    EXPECT_LT(s.residuals.endpoint, 1e-12);
    EXPECT_LT(s.residuals.horizontality, 1e-12);
    EXPECT_LT(s.residuals.orthogonality, 1e-12);
    EXPECT_LT(max_abs(geodesic_point(s, 0.0).matrix() - a.matrix()), 1e-13);
    // Bures angle along the curve is linear in t
    const double t = 0.37 * s.theta;
    EXPECT_NEAR(bures_angle(a, geodesic_point(s, t)), t, 1e-7);
    EXPECT_NEAR(bures_angle(geodesic_point(s, t), b), s.theta - t, 1e-7);
  }
}

TEST(Geodesic, OdeAndLength) {
  std::mt19937_64 rng(52);
  const DensityMatrix a = validate_density(oracle::random_density(3, rng));
  const DensityMatrix b = validate_density(oracle::random_density(3, rng));
  const GeodesicSolution s = solve_geodesic(a, b);
  const OdeReport r = verify_geodesic_ode(s, linspace(0.0, s.theta, 20));
  EXPECT_LT(r.ode_residual, 1e-6);
  EXPECT_LT(r.norm_residual, 1e-12);
  EXPECT_LT(r.connection_max, 1e-12);
  const auto ts = linspace(0.0, s.theta, 401);
  EXPECT_NEAR(path_length(ts, sample_geodesic(s, ts)), s.theta, 1e-12);
}

TEST(Geodesic, AngleAndRankErrors) {
  const DensityMatrix a = validate_density(bloch_matrix(0, 0, 0.5));
  try {
    solve_geodesic(a, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AngleOutOfRange);
  }
  Mat p = Mat::Zero(2, 2);
  p(0, 0) = 1.0;
  try {
    solve_geodesic(a, validate_density(p));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RankDeficient);
  }
  EXPECT_THROW(solve_geodesic(a, validate_density(Mat::Identity(3, 3) / 3.0)), Error);
}

TEST(Geodesic, RandomQubitTracesAreUnitMajorEllipses) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 5; ++trial) {
    const GeodesicSolution s = solve_geodesic(validate_density(oracle::random_density(2, rng)), validate_density(oracle::random_density(2, rng)));
    const EllipseFit f = bloch_ellipse_check(s);
    EXPECT_NEAR(f.major_axis, 1.0, 1e-9);
    EXPECT_LT(f.max_deviation, 1e-9);
    EXPECT_LT(f.plane_residual, 1e-9);
    EXPECT_LT(f.center.norm(), 1e-9);
  }
}
