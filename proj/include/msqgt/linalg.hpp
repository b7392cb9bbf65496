// linalg.hpp - Hermitian spectral helpers with the toolkit's ordering and
// phase conventions, and a few matrix functions built on them.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "msqgt/types.hpp"

namespace msqgt {

/// Phase-fixing threshold: the first component with modulus above this is
/// rotated onto the positive real axis.
inline constexpr double kPhaseFixFloor = 1e-12;

/// Rotate `v` so its first component of modulus > 1e-12 is real positive.
/// Returns the applied phase factor (unit modulus).
inline cplx fix_phase(Eigen::Ref<Vec> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double m = std::abs(v(i));
    if (m > kPhaseFixFloor) {
      const cplx ph = std::conj(v(i)) / m;
      v *= ph;
      v(i) = cplx(v(i).real(), 0.0);
      return ph;
    }
  }
  return {1.0, 0.0};
}

struct EigenSystem {
  RVec values;   // descending
  Mat vectors;   // columns, phase-fixed
};

namespace detail {
inline bool lex_less(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i).real() != b(i).real()) return a(i).real() < b(i).real();
    if (a(i).imag() != b(i).imag()) return a(i).imag() < b(i).imag();
  }
  return false;
}
}  // namespace detail

/// Spectral decomposition of a Hermitian matrix. Eigenvalues descending; ties
/// (within 1e-12) broken by lexicographic order of the phase-fixed vectors.
inline EigenSystem hermitian_eigen(const Mat& h) {
  const Mat herm = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(herm);
  const auto n = herm.rows();
  Mat vecs = es.eigenvectors();
  for (Eigen::Index k = 0; k < n; ++k) fix_phase(vecs.col(k));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const RVec& vals = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (std::abs(vals(a) - vals(b)) > 1e-12) return vals(a) > vals(b);
    return detail::lex_less(vecs.col(a), vecs.col(b));
  });

  EigenSystem out{RVec(n), Mat(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = vals(order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = vecs.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

/// f(H) = V f(Λ) V† for a real function of the spectrum.
template <typename F>
Mat spectral_apply(const EigenSystem& es, F&& f) {
  RVec fv(es.values.size());
  for (Eigen::Index i = 0; i < fv.size(); ++i) fv(i) = f(es.values(i));
  return es.vectors * fv.cast<cplx>().asDiagonal() * es.vectors.adjoint();
}

/// Square root of a PSD matrix; negative eigenvalues (numerical drift) clamp to 0.
inline Mat sqrtm_psd(const Mat& a) {
  return spectral_apply(hermitian_eigen(a), [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
}

/// exp(-i t H) for Hermitian H.
inline Mat expm_minus_i(const Mat& h, double t) {
  const EigenSystem es = hermitian_eigen(h);
  Vec ph(es.values.size());
  for (Eigen::Index i = 0; i < ph.size(); ++i) ph(i) = std::exp(-kI * (t * es.values(i)));
  return es.vectors * ph.asDiagonal() * es.vectors.adjoint();
}

/// Unitary factor U of the polar decomposition M = U P (P PSD).
inline Mat polar_unitary(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

/// Sum of singular values.
inline double nuclear_norm(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues().sum();
}

inline double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double hermiticity_residual(const Mat& m) { return max_abs(m - m.adjoint()); }

inline double unitarity_residual(const Mat& u) {
  return max_abs(u.adjoint() * u - Mat::Identity(u.rows(), u.cols()));
}

}  // namespace msqgt
