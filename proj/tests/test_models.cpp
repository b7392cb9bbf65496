#include <gtest/gtest.h>

#include "msqgt/models.hpp"
#include "oracles.hpp"

using namespace msqgt;

TEST(Bloch, StateAndSpectrum) {
  const ModelFamily m = bloch_qubit_model(0.9);
  const DensityMatrix r = m.evaluate({kPi / 3, 0.4});
  EXPECT_NEAR(r.eigenvalues()(0), 0.95, 1e-15);
  EXPECT_NEAR(r.eigenvalues()(1), 0.05, 1e-15);
  const Eigen::Vector3d b = bloch_vector(r.matrix());
  EXPECT_NEAR(b.norm(), 0.9, 1e-15);
  EXPECT_NEAR(b(2), 0.9 * 0.5, 1e-15);
}

TEST(Bloch, ThetaDerivativeAtEquator) {
  const ModelFamily m = bloch_qubit_model(0.9);
  const auto d = derivatives(m, {kPi / 2, 0.0});
  EXPECT_LT(max_abs(d.d[0] + 0.45 * pauli_z()), 1e-15);
}

TEST(Bloch, AnalyticMatchesCentral) {
  const ModelFamily m = bloch_qubit_model(0.7);
  for (double th : {0.3, 1.1, 2.5}) {
    const auto a = derivatives(m, {th, 1.3}, Scheme::analytic());
    const auto c = derivatives(m, {th, 1.3}, Scheme::central());
    for (int mu = 0; mu < 2; ++mu) EXPECT_LT(max_abs(a.d[mu] - c.d[mu]), 1e-9);
    EXPECT_LT(c.asymmetry, 1e-8);
  }
}

TEST(Bloch, RejectsRadiusAndDomain) {
  EXPECT_THROW(bloch_qubit_model(1.5), Error);
  EXPECT_THROW(bloch_qubit_model(0.0), Error);
  const ModelFamily m = bloch_qubit_model(0.9);
  try {
    derivatives(m, {0.0, 1.0}, Scheme::central());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutOfDomain);
  }
  // periodic coordinate has no domain limit
  EXPECT_NO_THROW(derivatives(m, {1.0, 7.0}, Scheme::central()));
}

TEST(Models, ConstantFamilyHasZeroDerivatives) {
  ModelFamily m;
  m.name = "const";
  m.dim = 2;
  m.params = {ParamSpec{"a", 0.0, 1.0}};
  m.evaluate = [](const Point&) { return validate_density(bloch_matrix(0.1, 0.2, 0.3)); };
  m = register_model(std::move(m));
  const auto d = derivatives(m, {0.5}, Scheme::central());
  EXPECT_LT(max_abs(d.d[0]), 1e-15);
  try {
    derivatives(m, {0.5}, Scheme::analytic());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoAnalyticDerivatives);
  }
}

TEST(Models, RegistrationCatchesWrongDerivatives) {
  ModelFamily m = bloch_qubit_model(0.9);
  m.analytic_derivatives = [](const Point&) { return std::vector<Mat>{pauli_x(), pauli_y()}; };
  EXPECT_THROW(register_model(m), Error);
}

TEST(Thermal, SpectrumIsBoltzmann) {
  const ThermalModel t = thermal_qubit_model(0.5, 5.0);
  const DensityMatrix r = t.family().evaluate({1.0, 0.3});
  EXPECT_NEAR(r.eigenvalues()(0), 1.0 / (1.0 + std::exp(-2.5)), 1e-14);
  EXPECT_NEAR(bloch_vector(r.matrix()).norm(), std::tanh(1.25), 1e-14);
}

TEST(Thermal, RejectsNonPositiveBeta) {
  EXPECT_THROW(thermal_qubit_model(0.5, 0.0), Error);
  EXPECT_THROW(thermal_qubit_model(0.5, 1.0).with_beta(-1.0), Error);
}

TEST(Thermal, RotatedHamiltonianAnalyticMatchesCentral) {
  const ModelFamily m = thermal_qubit_model(0.5, 5.0).family();
  const auto a = derivatives(m, {0.8, 2.0}, Scheme::analytic());
  const auto c = derivatives(m, {0.8, 2.0}, Scheme::central(1e-5));
  for (int mu = 0; mu < 2; ++mu) EXPECT_LT(max_abs(a.d[mu] - c.d[mu]), 1e-7);
}

TEST(Thermal, RandomQutritDerivatives) {
  std::mt19937_64 rng(31);
  const ModelFamily m = oracle::random_family(3, 2, rng).family();
  const auto a = derivatives(m, {0.1, -0.2}, Scheme::analytic());
  const auto c = derivatives(m, {0.1, -0.2}, Scheme::central(1e-5));
  for (int mu = 0; mu < 2; ++mu) EXPECT_LT(max_abs(a.d[mu] - c.d[mu]), 1e-7);
}

TEST(Thermal, ApproachesGroundProjector) {
  const double gap = 0.5;
  for (double beta : {10.0, 20.0, 40.0}) {
    const ThermalModel t = thermal_qubit_model(gap, beta);
    const Point x{0.9, 1.7};
    const Vec g = t.ground_state(x);
    const double dev = max_abs(t.thermal_matrix(x) - g * g.adjoint());
    EXPECT_LT(dev, std::exp(-beta * gap) * 2.0);
  }
}

TEST(Thermal, GroundStateDerivativeMatchesFiniteDifference) {
  const ThermalModel t = thermal_qubit_model(0.5, 1.0);
  const Point x{1.2, 0.4};
  const auto d = t.ground_state_derivatives(x);
  const double h = 1e-6;
  // compare the projector derivative, which is phase independent
  for (int mu = 0; mu < 2; ++mu) {
    Point xp = x, xm = x;
    xp[mu] += h;
    xm[mu] -= h;
    const Vec gp = t.ground_state(xp), gm = t.ground_state(xm), g = t.ground_state(x);
    const Mat fd = (gp * gp.adjoint() - gm * gm.adjoint()) / (2.0 * h);
    const Mat an = d[mu] * g.adjoint() + g * d[mu].adjoint();
    EXPECT_LT(max_abs(fd - an), 1e-8);
  }
}
