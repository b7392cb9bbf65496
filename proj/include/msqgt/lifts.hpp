// lifts.hpp - lifts of base-manifold families into the purification bundle,
// with tangent vectors obtained from the family's density derivatives.
#pragma once

#include <functional>
#include <vector>

#include "msqgt/bundle.hpp"
#include "msqgt/models.hpp"

namespace msqgt {

struct LiftedPoint {
  Purification psi;
  std::vector<TangentVector> dpsi;  // one per chart parameter
};

/// Map from chart point to a lift and its parameter derivatives.
using LiftFn = std::function<LiftedPoint(const Point&)>;

/// Derivative of the standard purification W = Xi sqrt(P) under the
/// eigenvector phase convention of `hermitian_eigen`: first-order
/// perturbation theory for the off-diagonal part plus the phase rotation that
/// keeps each vector's leading component real.
inline LiftedPoint standard_lift(const DensityMatrix& rho, const std::vector<Mat>& drho) {
  if (rho.degenerate())
    throw Error(ErrorKind::DegenerateSpectrum, detail::cat("spectral gap ", rho.spectral_gap(), " below ", kDegeneracyGap), rho.spectral_gap());
  const Purification psi = purify(rho);
  const Mat& xi = rho.eigenvectors();
  const RVec& p = rho.eigenvalues();
  const auto n = p.size();
  std::vector<TangentVector> out;
  for (const Mat& d : drho) {
    const Mat dd = xi.adjoint() * d * xi;
    Mat dw(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      Vec dxi = Vec::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != k) dxi += xi.col(i) * (dd(i, k) / (p(k) - p(i)));
      Eigen::Index j0 = 0;
      while (j0 < n && std::abs(xi(j0, k)) <= kPhaseFixFloor) ++j0;
      const double a = -dxi(j0).imag() / xi(j0, k).real();
      dxi += kI * a * xi.col(k);
      const double sp = std::sqrt(std::max(p(k), 0.0));
      if (sp == 0.0) throw Error(ErrorKind::RankDeficient, "standard lift derivative needs positive eigenvalues", p(k));
      dw.col(k) = dxi * sp + xi.col(k) * (dd(k, k).real() / (2.0 * sp));
    }
    out.push_back(make_tangent(psi, vectorize(dw)));
  }
  return LiftedPoint{psi, std::move(out)};
}

/// Square-root lift W = sqrt(rho): globally smooth over full-rank families,
/// with dW solving sqrt(rho) dW + dW sqrt(rho) = d rho.
inline LiftedPoint sqrt_lift(const DensityMatrix& rho, const std::vector<Mat>& drho) {
  if (!rho.full_rank()) throw Error(ErrorKind::RankDeficient, "square-root lift needs a full-rank state", rho.min_eigenvalue());
  const Mat& xi = rho.eigenvectors();
  const RVec sp = rho.eigenvalues().cwiseSqrt();
  const Purification psi = Purification::normalized(vectorize(xi * sp.cast<cplx>().asDiagonal() * xi.adjoint()));
  std::vector<TangentVector> out;
  for (const Mat& d : drho) {
    Mat dd = xi.adjoint() * d * xi;
    for (Eigen::Index i = 0; i < dd.rows(); ++i)
      for (Eigen::Index k = 0; k < dd.cols(); ++k) dd(i, k) /= (sp(i) + sp(k));
    out.push_back(make_tangent(psi, vectorize(xi * dd * xi.adjoint())));
  }
  return LiftedPoint{psi, std::move(out)};
}

enum class LiftKind { Standard, Sqrt };

/// Lift of a model family, with tangents from the given derivative scheme.
inline LiftFn model_lift(const ModelFamily& m, Scheme scheme = Scheme::analytic(), LiftKind kind = LiftKind::Standard) {
  return [m, scheme, kind](const Point& x) {
    const DensityMatrix rho = m.evaluate(x);
    const DerivativeSet ds = derivatives(m, x, scheme);
    return kind == LiftKind::Standard ? standard_lift(rho, ds.d) : sqrt_lift(rho, ds.d);
  };
}

/// Environment gauge field applied on top of a lift: psi'(x) = (I (x) U(x)) psi(x).
/// `u` returns U(x) and `du` its parameter derivatives.
inline LiftFn gauge_transformed_lift(LiftFn base, std::function<Mat(const Point&)> u, std::function<std::vector<Mat>(const Point&)> du) {
  return [base = std::move(base), u = std::move(u), du = std::move(du)](const Point& x) {
    const LiftedPoint lp = base(x);
    const Mat ux = u(x);
    const std::vector<Mat> dux = du(x);
    const Vec& psi = lp.psi.amplitudes();
    const Purification p = Purification::normalized(apply_env(ux, psi));
    std::vector<TangentVector> d;
    for (std::size_t mu = 0; mu < lp.dpsi.size(); ++mu)
      d.push_back(make_tangent(p, apply_env(dux[mu], psi) + apply_env(ux, lp.dpsi[mu].components)));
    return LiftedPoint{p, std::move(d)};
  };
}

}  // namespace msqgt
