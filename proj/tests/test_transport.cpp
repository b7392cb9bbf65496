#include <gtest/gtest.h>

#include "msqgt/geodesics.hpp"
#include "msqgt/transport.hpp"
#include "oracles.hpp"

using namespace msqgt;

namespace {

BaseCurve latitude(double r, double theta) {
  const ModelFamily m = bloch_qubit_model(r);
  return BaseCurve{[m, theta](double t) { return m.evaluate({theta, t}); }, 2.0 * kPi};
}

// Thermal loop of a random qutrit Hamiltonian: H0 + cos t H1 + sin t H2.
BaseCurve random_loop(std::mt19937_64& rng, Eigen::Index n = 3) {
  const Mat h0 = oracle::random_hermitian(n, rng), h1 = oracle::random_hermitian(n, rng), h2 = oracle::random_hermitian(n, rng);
  return BaseCurve{[=](double t) {
                     const Mat h = h0 + std::cos(t) * h1 + std::sin(t) * h2;
                     const Mat e = spectral_apply(hermitian_eigen(h), [](double x) { return std::exp(-x); });
                     return validate_density(e / e.trace().real(), 1e-10);
                   },
                   2.0 * kPi};
}

double max_stepwise_violation(const HorizontalLift& l) {
  double v = 0.0;
  for (std::size_t k = 0; k + 1 < l.curve.points.size(); ++k) {
    const double ov = std::abs(l.curve.points[k].amplitudes().dot(l.curve.points[k + 1].amplitudes()));
    v = std::max(v, std::abs(ov - fidelity(l.curve.base_points[k], l.curve.base_points[k + 1])));
  }
  return v;
}

}  // namespace

TEST(Lift, ConstantCurveStaysAtStart) {
  std::mt19937_64 rng(61);
  const DensityMatrix r = validate_density(oracle::random_density(3, rng));
  const BaseCurve c{[r](double) { return r; }, 1.0};
  const Purification start = Purification::normalized(apply_env(oracle::random_unitary(3, rng), purify(r).amplitudes()));
  const HorizontalLift l = horizontal_lift(standard_reference(c), 1.0, 50, start);
  for (const auto& p : l.curve.points) EXPECT_LT((p.amplitudes() - start.amplitudes()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Lift, HorizontalReferenceGivesIdentityUnitaries) {
  // the geodesic lift cos t psi0 + sin t psi_q is horizontal
  std::mt19937_64 rng(62);
  const GeodesicSolution s = solve_geodesic(validate_density(oracle::random_density(2, rng)), validate_density(oracle::random_density(2, rng)));
  ReferenceLift ref{[=](double t) { return geodesic_lift(s, t); }, [=](double t) { return geodesic_tangent(s, t); }};
  const HorizontalLift l = horizontal_lift(ref, s.theta, 100, s.psi0);
  for (const auto& u : l.unitaries) EXPECT_LT(max_abs(u - Mat::Identity(2, 2)), 1e-12);
}

TEST(Lift, OutputIsHorizontalAndPurifiesBase) {
  std::mt19937_64 rng(63);
  const BaseCurve c = random_loop(rng);
  const HorizontalLift l = horizontal_lift(standard_reference(c), 1.0, 400, purify(c.rho(0.0)));
  for (std::size_t k = 0; k < l.curve.points.size(); ++k)
    EXPECT_LT(max_abs(partial_trace_env(l.curve.points[k]).matrix() - c.rho(l.curve.times[k]).matrix()), 1e-8);
  EXPECT_LT(l.max_discrete_connection, 1e-5);
  EXPECT_LT(max_stepwise_violation(l), 1e-8);
}

TEST(Lift, SampledReferenceMatchesContinuous) {
  std::mt19937_64 rng(64);
  const BaseCurve c = random_loop(rng, 2);
  const ReferenceLift ref = standard_reference(c);
  LiftedCurve sampled;
  for (int k = 0; k <= 400; ++k) {
    const double t = static_cast<double>(k) / 400.0;
    sampled.times.push_back(t);
    sampled.points.push_back(ref.point(t));
    sampled.base_points.push_back(c.rho(t));
  }
  const Purification start = purify(c.rho(0.0));
  const HorizontalLift a = horizontal_lift(ref, 1.0, 400, start);
  const HorizontalLift b = horizontal_lift(sampled, start);
  EXPECT_LT((a.curve.points.back().amplitudes() - b.curve.points.back().amplitudes()).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Lift, CoarseGridAndBadStart) {
  const BaseCurve c = latitude(0.9, kPi / 3);
  try {
    horizontal_lift(standard_reference(c), 2.0 * kPi, 2, purify(c.rho(0.0)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CoarseGrid);
  }
  const Purification wrong = purify(validate_density(bloch_matrix(0.1, 0.0, 0.0)));
  EXPECT_THROW(horizontal_lift(standard_reference(c), 1.0, 10, wrong), Error);
}

TEST(Holonomy, ConstantLoopIsIdentity) {
  const DensityMatrix r = validate_density(bloch_matrix(0.2, 0.1, 0.4));
  const HolonomyResult h = holonomy(BaseCurve{[r](double) { return r; }, 1.0});
  EXPECT_LT(max_abs(h.unitary - Mat::Identity(2, 2)), 1e-13);
  EXPECT_NEAR(std::abs(h.mean_holonomy - 1.0), 0.0, 1e-13);
}

TEST(Holonomy, StoredFieldsAreConsistent) {
  const HolonomyResult h = holonomy(latitude(0.9, kPi / 3));
  EXPECT_LT(unitarity_residual(h.unitary), 1e-8);
  EXPECT_LE(std::abs(h.mean_holonomy), 1.0 + 1e-10);
  const cplx oc = h.start.amplitudes().dot(apply_env(h.unitary, h.start.amplitudes()));
  EXPECT_LT(std::abs(oc - h.mean_holonomy), 1e-10);
  EXPECT_NEAR(h.uhlmann_phase, std::arg(h.mean_holonomy), 1e-15);
}

TEST(Holonomy, RefinesCoarseGrid) {
  HolonomyOptions o;
  o.steps = 4;
  const HolonomyResult h = holonomy(latitude(0.9, kPi / 3), std::nullopt, o);
  EXPECT_GT(h.steps, 4u);
  o.max_steps = 4;
  EXPECT_THROW(holonomy(latitude(0.9, kPi / 3), std::nullopt, o), Error);
}

TEST(Holonomy, OpenCurveIsRejected) {
  const ModelFamily m = bloch_qubit_model(0.9);
  try {
    holonomy(BaseCurve{[m](double t) { return m.evaluate({1.0, t}); }, 1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotClosed);
  }
}

TEST(Holonomy, RetracedLoopIsTrivial) {
  const ModelFamily m = bloch_qubit_model(0.9);
  const BaseCurve c{[m](double t) {
                      const double u = t < 1.0 ? t : 2.0 - t;
                      return m.evaluate({0.5 + 0.5 * u, 0.5 * u});
                    },
                    2.0};
  HolonomyOptions o;
  o.steps = 1000;
  const HolonomyResult h = holonomy(c, std::nullopt, o);
  EXPECT_LT(std::abs(h.mean_holonomy - 1.0), 1e-6);
  EXPECT_LT(max_abs(h.unitary - Mat::Identity(2, 2)), 1e-6);
}

TEST(Holonomy, IndependentOfReferenceLift) {
  std::mt19937_64 rng(65);
  const BaseCurve c = random_loop(rng);
  const Purification start = purify(c.rho(0.0));
  HolonomyOptions o;
  o.steps = 8192;
  const HolonomyResult a = holonomy(c, start, o);
  // periodic random gauge on the reference: V(t) = exp(-i sin(t) K) V0
  const Mat k = oracle::random_hermitian(3, rng);
  const Mat v0 = oracle::random_unitary(3, rng);
  o.reference = gauged_reference(
      standard_reference(c), [=](double t) { return Mat(expm_minus_i(k, std::sin(t)) * v0); },
      [=](double t) { return Mat(-kI * std::cos(t) * k * expm_minus_i(k, std::sin(t)) * v0); });
  const HolonomyResult b = holonomy(c, start, o);
  EXPECT_LT(max_abs(a.unitary - b.unitary), 1e-5);
}

TEST(Holonomy, GaugeConjugation) {
  std::mt19937_64 rng(66);
  const BaseCurve c = latitude(0.9, kPi / 3);
  const Purification start = purify(c.rho(0.0));
  const GaugeConjugationReport id = gauge_conjugation_check(c, start, Mat::Identity(2, 2));
  EXPECT_LT(id.conjugation_residual, 1e-13);
  const GaugeConjugationReport ph = gauge_conjugation_check(c, start, std::polar(1.0, 0.7) * Mat::Identity(2, 2));
  EXPECT_LT(max_abs(ph.transformed.unitary - ph.original.unitary), 1e-12);
  EXPECT_LT(ph.mean_holonomy_residual, 1e-12);
  const GaugeConjugationReport r = gauge_conjugation_check(c, start, oracle::random_unitary(2, rng));
  EXPECT_LT(r.conjugation_residual, 1e-7);
  EXPECT_LT(r.mean_holonomy_residual, 1e-8);
  try {
    gauge_conjugation_check(c, start, 1.1 * Mat::Identity(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotUnitary);
  }
}

TEST(Holonomy, LatitudeConvergence) {
  HolonomyOptions a, b;
  a.steps = 1000;
  b.steps = 4000;
  const BaseCurve c = latitude(0.9, kPi / 3);
  EXPECT_LT(std::abs(holonomy(c, std::nullopt, a).mean_holonomy - holonomy(c, std::nullopt, b).mean_holonomy), 1e-6);
}

TEST(Holonomy, SecondOrderInStepSize) {
  std::mt19937_64 rng(67);
  const BaseCurve c = random_loop(rng);
  auto oc = [&](std::size_t n) {
    HolonomyOptions o;
    o.steps = n;
    return holonomy(c, std::nullopt, o).mean_holonomy;
  };
  // the loop passes near a small eigenvalue, so stay past the pre-asymptotic range
  const cplx ref = oc(8192);
  const double e1 = std::abs(oc(256) - ref), e2 = std::abs(oc(512) - ref);
  EXPECT_GT(std::log2(e1 / e2), 1.9);
}
