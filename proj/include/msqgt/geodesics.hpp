// geodesics.hpp - Bures geodesics between full-rank states through their
// horizontal lift |psi(t)> = cos t |psi(0)> + sin t |psi(pi/2)>.
#pragma once

#include <cmath>
#include <vector>

#include "msqgt/bundle.hpp"
#include "msqgt/models.hpp"

namespace msqgt {

inline constexpr double kAngleMargin = 1e-6;

struct GeodesicResiduals {
  double orthogonality = 0.0;  // |<psi(0)|psi(pi/2)>|
  double horizontality = 0.0;  // max |Tr_S(|psi0><psiq| - |psiq><psi0|)|
  double endpoint = 0.0;       // max |Tr_E|psi(theta)><psi(theta)| - rho_B|, 0 when no target was given
};

struct GeodesicSolution {
  Purification psi0;
  Purification psi_quarter;
  double theta = 0.0;
  GeodesicResiduals residuals;

  /// Assemble a solution from explicit lift data (e.g. closed-form families),
  /// measuring the orthogonality and horizontality constraints.
  static GeodesicSolution from_lift(const Purification& psi0, const Purification& psi_quarter, double theta) {
    if (psi0.dim() != psi_quarter.dim()) throw Error(ErrorKind::DimensionMismatch, "lift endpoints have different dimensions");
    GeodesicSolution s{psi0, psi_quarter, theta, {}};
    const Vec& a = psi0.amplitudes();
    const Vec& b = psi_quarter.amplitudes();
    s.residuals.orthogonality = std::abs(a.dot(b));
    s.residuals.horizontality = max_abs(trace_sys_outer(a, b) - trace_sys_outer(b, a));
    return s;
  }
};

/// Point cos t psi0 + sin t psi_quarter of the horizontal lift.
inline Purification geodesic_lift(const GeodesicSolution& sol, double t) {
  return Purification::normalized(std::cos(t) * sol.psi0.amplitudes() + std::sin(t) * sol.psi_quarter.amplitudes());
}

inline Vec geodesic_tangent(const GeodesicSolution& sol, double t) {
  return -std::sin(t) * sol.psi0.amplitudes() + std::cos(t) * sol.psi_quarter.amplitudes();
}

inline DensityMatrix geodesic_point(const GeodesicSolution& sol, double t, double rank_tol = kDefaultRankTol) {
  return partial_trace_env(geodesic_lift(sol, t), rank_tol);
}

/// Geodesic from rho_a to rho_b. With W_A = sqrt(rho_a), the parallel
/// amplitude for rho_b is W_B = sqrt(rho_b) V, V the unitary polar factor of
/// sqrt(rho_b) sqrt(rho_a); then W_A^dagger W_B is PSD with trace F, theta =
/// arccos F and psi(pi/2) = (psi_B - cos(theta) psi_A) / sin(theta).
inline GeodesicSolution solve_geodesic(const DensityMatrix& rho_a, const DensityMatrix& rho_b) {
  if (rho_a.dim() != rho_b.dim()) throw Error(ErrorKind::DimensionMismatch, "geodesic endpoints have different dimensions");
  for (const DensityMatrix* r : {&rho_a, &rho_b})
    if (!r->full_rank())
      throw Error(ErrorKind::RankDeficient, detail::cat("geodesic endpoint min eigenvalue ", r->min_eigenvalue()), r->min_eigenvalue());
  auto sq = [](const DensityMatrix& r) { return spectral_apply(r.eigensystem(), [](double x) { return std::sqrt(std::max(x, 0.0)); }); };
  const Mat wa = sq(rho_a);
  const Mat sb = sq(rho_b);
  const Mat wb = sb * polar_unitary(sb * wa);
  const double c = std::clamp((wa.adjoint() * wb).trace().real(), -1.0, 1.0);
  const double theta = std::acos(c);
  if (theta <= kAngleMargin || theta >= kPi / 2 - kAngleMargin)
    throw Error(ErrorKind::AngleOutOfRange, detail::cat("Bures angle ", theta, " outside (", kAngleMargin, ", pi/2 - ", kAngleMargin, ")"), theta);
  const Vec psi_a = vectorize(wa);
  const Vec psi_b = vectorize(wb);
  const Purification p0 = Purification::normalized(psi_a);
  const Purification pq = Purification::normalized((psi_b - c * psi_a) / std::sin(theta));
  GeodesicSolution sol = GeodesicSolution::from_lift(p0, pq, theta);
  const Mat end = amplitude_matrix(geodesic_lift(sol, theta).amplitudes());
  sol.residuals.endpoint = max_abs(end * end.adjoint() - rho_b.matrix());
  return sol;
}

struct OdeReport {
  double ode_residual = 0.0;      // max |(psi(t+h) - 2 psi(t) + psi(t-h))/h^2 + psi(t)|
  double norm_residual = 0.0;     // max |<D_t psi|D_t psi> - 1|
  double connection_max = 0.0;    // max |A_t| along the lift
};

/// Check the closed form against |d_t d_t psi> = -|psi> by second differences
/// of the sampled lift, plus unit speed and horizontality at each grid time.
inline OdeReport verify_geodesic_ode(const GeodesicSolution& sol, const std::vector<double>& t_grid, double h = 1e-3) {
  OdeReport r;
  for (double t : t_grid) {
    const Vec pm = geodesic_lift(sol, t - h).amplitudes();
    const Purification p0 = geodesic_lift(sol, t);
    const Vec pp = geodesic_lift(sol, t + h).amplitudes();
    const Vec second = (pp - 2.0 * p0.amplitudes() + pm) / (h * h);
    r.ode_residual = std::max(r.ode_residual, (second + p0.amplitudes()).cwiseAbs().maxCoeff());
    const TangentVector tan = make_tangent(p0, geodesic_tangent(sol, t));
    const TangentVector dt = covariant_derivative(p0, tan);
    r.norm_residual = std::max(r.norm_residual, std::abs(dt.components.squaredNorm() - 1.0));
    r.connection_max = std::max(r.connection_max, max_abs(connection(p0, tan).entries));
  }
  return r;
}

/// Samples (psi(t_k), d_t psi(t_k)) of the geodesic lift.
inline std::vector<CurveSample> sample_geodesic(const GeodesicSolution& sol, const std::vector<double>& times) {
  std::vector<CurveSample> out;
  for (double t : times) {
    Purification p = geodesic_lift(sol, t);
    out.push_back(CurveSample{p, make_tangent(p, geodesic_tangent(sol, t))});
  }
  return out;
}

/// Composite-trapezoid length  sum over intervals of sqrt(<D_t psi|D_t psi>) dt.
inline double path_length(const std::vector<double>& times, const std::vector<CurveSample>& samples) {
  if (times.size() != samples.size()) throw Error(ErrorKind::DimensionMismatch, "times and samples differ in length");
  std::vector<double> speed;
  speed.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.dpsi.components.squaredNorm() == 0.0) {
      speed.push_back(0.0);
      continue;
    }
    speed.push_back(covariant_derivative(s.psi, s.dpsi).components.norm());
  }
  double l = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) l += 0.5 * (speed[k] + speed[k - 1]) * (times[k] - times[k - 1]);
  return l;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

struct EllipseFit {
  double major_axis = 0.0;        // fitted semi-axes
  double minor_axis = 0.0;
  double max_deviation = 0.0;     // max |x'^2 + z'^2 / minor^2 - 1| (major taken as 1); max |z'| when degenerate
  double fit_deviation = 0.0;     // same with the fitted major axis
  double plane_residual = 0.0;    // out-of-plane amplitude
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  bool degenerate = false;        // minor axis below 1e-8: a diameter segment
};

/// Sample the Bloch trajectory of a qubit geodesic over one full period
/// t in [0, pi), take its plane and principal axes from the sample covariance,
/// and measure how well x'^2/a^2 + z'^2/b^2 = 1 holds.
inline EllipseFit bloch_ellipse_check(const GeodesicSolution& sol, std::size_t samples = 720) {
  if (sol.psi0.dim() != 2) throw Error(ErrorKind::NotQubit, detail::cat("ellipse check needs a qubit, got N = ", sol.psi0.dim()));
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(samples), 3);
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = kPi * static_cast<double>(k) / static_cast<double>(samples);
    const Mat w = amplitude_matrix(geodesic_lift(sol, t).amplitudes());
    pts.row(static_cast<Eigen::Index>(k)) = bloch_vector(w * w.adjoint()).transpose();
  }
  EllipseFit fit;
  fit.center = pts.colwise().mean().transpose();
  const Eigen::MatrixXd c = pts.rowwise() - fit.center.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeThinV);
  const double scale = std::sqrt(2.0 / static_cast<double>(samples));
  const Eigen::Vector3d s = svd.singularValues();
  fit.major_axis = s(0) * scale;
  fit.minor_axis = s(1) * scale;
  fit.plane_residual = s(2) * scale;
  const Eigen::VectorXd xp = c * svd.matrixV().col(0);
  const Eigen::VectorXd zp = c * svd.matrixV().col(1);
  fit.degenerate = fit.minor_axis < 1e-8;
  for (Eigen::Index k = 0; k < xp.size(); ++k) {
    if (fit.degenerate) {
      fit.max_deviation = std::max(fit.max_deviation, std::abs(zp(k)));
      fit.fit_deviation = fit.max_deviation;
      continue;
    }
    const double zz = zp(k) * zp(k) / (fit.minor_axis * fit.minor_axis);
    fit.max_deviation = std::max(fit.max_deviation, std::abs(xp(k) * xp(k) + zz - 1.0));
    fit.fit_deviation = std::max(fit.fit_deviation, std::abs(xp(k) * xp(k) / (fit.major_axis * fit.major_axis) + zz - 1.0));
  }
  return fit;
}

}  // namespace msqgt
