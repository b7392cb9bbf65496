// bundle.hpp - connection on the purification bundle, vertical/horizontal
// splitting of tangent vectors, covariant derivative and gauge transformations.
#pragma once

#include <vector>

#include "msqgt/states.hpp"

namespace msqgt {

inline constexpr double kEnvHermitianTol = 1e-10;

/// Operator acting on the environment factor (connection values, vertical
/// generators). `asymmetry` records max|X - X^dagger| of the raw value when the
/// stored entries are its Hermitian part.
struct EnvOperator {
  Mat entries;
  double asymmetry = 0.0;

  std::size_t dim() const { return static_cast<std::size_t>(entries.rows()); }

  /// Throws NotHermitian if the input is farther than `tol` from Hermitian.
  static EnvOperator checked(Mat m, double tol = kEnvHermitianTol) {
    const double r = hermiticity_residual(m);
    if (r > tol) throw Error(ErrorKind::NotHermitian, detail::cat("environment operator residual ", r), r);
    return EnvOperator{std::move(m), r};
  }
};

/// Tangent vector |X> at a point of the bundle.
struct TangentVector {
  Purification base;
  Vec components;
};

inline TangentVector make_tangent(const Purification& base, Vec v) {
  if (v.size() != base.amplitudes().size())
    throw Error(ErrorKind::DimensionMismatch, detail::cat("tangent length ", v.size(), " at a point of length ", base.amplitudes().size()));
  return TangentVector{base, std::move(v)};
}

/// (X, Y) = Re <X|Y>
inline double real_inner(const TangentVector& x, const TangentVector& y) {
  if (x.components.size() != y.components.size())
    throw Error(ErrorKind::DimensionMismatch, detail::cat("tangent lengths ", x.components.size(), " and ", y.components.size()));
  return x.components.dot(y.components).real();
}

/// i H_E |psi>, the vertical vector generated by Hermitian H on the environment.
inline TangentVector vertical_vector(const Purification& psi, const Mat& h) {
  return make_tangent(psi, kI * apply_env(h, psi.amplitudes()));
}

/// The superoperator L_sigma(O) with <i|X|k> = <i|O|k> / (q_i + q_k) in the
/// eigenbasis of sigma, i.e. the solution of sigma X + X sigma = O.
inline Mat lyapunov_superop(const DensityMatrix& sigma, const Mat& o) {
  if (!sigma.full_rank())
    throw Error(ErrorKind::RankDeficient, detail::cat("min eigenvalue ", sigma.min_eigenvalue(), " <= rank_tol ", sigma.rank_tol()),
                sigma.min_eigenvalue());
  if (o.rows() != static_cast<Eigen::Index>(sigma.dim()) || o.cols() != o.rows())
    throw Error(ErrorKind::DimensionMismatch, "operator and state dimensions differ");
  const Mat& v = sigma.eigenvectors();
  const RVec& q = sigma.eigenvalues();
  Mat x = v.adjoint() * o * v;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index k = 0; k < x.cols(); ++k) x(i, k) /= (q(i) + q(k));
  return v * x * v.adjoint();
}

/// Schmidt-free connection A = -i L_{Tr_S|psi><psi|}(Tr_S(|dpsi><psi| - |psi><dpsi|)).
inline EnvOperator connection(const Purification& psi, const TangentVector& dpsi, double rank_tol = kDefaultRankTol) {
  if (dpsi.components.size() != psi.amplitudes().size())
    throw Error(ErrorKind::DimensionMismatch, "tangent and base point lengths differ");
  const DensityMatrix sigma = partial_trace_sys(psi, rank_tol);
  const Mat m = trace_sys_outer(dpsi.components, psi.amplitudes());
  return EnvOperator::checked(-kI * lyapunov_superop(sigma, m - m.adjoint()));
}

/// Derivative of a Schmidt decomposition along a curve: d sqrt(p_i), d|xi_i>, d|v_i>.
struct SchmidtDerivative {
  RVec d_coefficients;
  Mat d_sys;
  Mat d_env;
};

/// Central difference of two phase-fixed decompositions taken at t - h and t + h.
inline SchmidtDerivative schmidt_central_difference(const SchmidtDecomposition& minus, const SchmidtDecomposition& plus, double h) {
  return SchmidtDerivative{(plus.coefficients - minus.coefficients) / (2.0 * h), (plus.sys_basis - minus.sys_basis) / (2.0 * h),
                           (plus.env_basis - minus.env_basis) / (2.0 * h)};
}

/// Schmidt-basis form of the connection,
///   A = -i ( sum_i |dv_i><v_i| + sum_{ik} 2 sqrt(p_i p_k)/(p_i + p_k) <xi_k|dxi_i> |v_i><v_k| ).
/// Only meaningful when the basis derivatives follow the same phase convention
/// as the decomposition; rejects spectra with a gap below 1e-8.
inline EnvOperator connection_schmidt(const SchmidtDecomposition& sd, const SchmidtDerivative& dsd) {
  const auto n = sd.coefficients.size();
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double gap = sd.coefficients(i) * sd.coefficients(i) - sd.coefficients(i + 1) * sd.coefficients(i + 1);
    if (gap < kDegeneracyGap)
      throw Error(ErrorKind::DegenerateSpectrum, detail::cat("Schmidt spectrum gap ", gap, " below ", kDegeneracyGap), gap);
  }
  Mat a = dsd.d_env * sd.env_basis.adjoint();
  const Mat overlaps = sd.sys_basis.adjoint() * dsd.d_sys;  // (k, i) = <xi_k|dxi_i>
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double ci = sd.coefficients(i), ck = sd.coefficients(k);
      const double w = 2.0 * ci * ck / (ci * ci + ck * ck);
      a += w * overlaps(k, i) * sd.env_basis.col(i) * sd.env_basis.col(k).adjoint();
    }
  }
  a *= -kI;
  const double asym = hermiticity_residual(a);
  return EnvOperator{0.5 * (a + a.adjoint()), asym};
}

/// (|X>)_V = i A |psi> with A the connection evaluated on X.
inline TangentVector vertical_project(const Purification& psi, const TangentVector& x, double rank_tol = kDefaultRankTol) {
  const EnvOperator a = connection(psi, x, rank_tol);
  return make_tangent(psi, kI * apply_env(a.entries, psi.amplitudes()));
}

inline TangentVector horizontal_project(const Purification& psi, const TangentVector& x, double rank_tol = kDefaultRankTol) {
  const TangentVector v = vertical_project(psi, x, rank_tol);
  return make_tangent(psi, x.components - v.components);
}

/// |D psi> = |d psi> - i A |psi>
inline TangentVector covariant_derivative(const Purification& psi, const TangentVector& dpsi, double rank_tol = kDefaultRankTol) {
  return horizontal_project(psi, dpsi, rank_tol);
}

/// One sample of a lifted curve together with its tangent.
struct CurveSample {
  Purification psi;
  TangentVector dpsi;
};

/// psi' = (I (x) U) psi with tangent d psi' = (I (x) dU) psi + (I (x) U) d psi.
inline std::vector<CurveSample> gauge_transform_curve(const std::vector<CurveSample>& samples, const std::vector<Mat>& u,
                                                      const std::vector<Mat>& du, double unitary_tol = 1e-10) {
  if (u.size() != samples.size() || du.size() != samples.size())
    throw Error(ErrorKind::DimensionMismatch, "gauge and sample counts differ");
  std::vector<CurveSample> out;
  out.reserve(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double ur = unitarity_residual(u[k]);
    if (ur > unitary_tol) throw Error(ErrorKind::NotUnitary, detail::cat("gauge at sample ", k, " has residual ", ur), ur);
    const Vec& psi = samples[k].psi.amplitudes();
    Purification p = Purification::normalized(apply_env(u[k], psi));
    Vec dp = apply_env(du[k], psi) + apply_env(u[k], samples[k].dpsi.components);
    out.push_back(CurveSample{p, make_tangent(p, std::move(dp))});
  }
  return out;
}

}  // namespace msqgt
