// states.hpp - density matrices, purifications, partial traces, Schmidt
// decomposition and fidelity-based distances.
//
// Bipartite convention: a purification of an N-level system lives in the
// N*N dimensional space S (x) E, with the coefficient of |i>_S |j>_E stored at
// index i*N + j. Reshaped row-major this is the amplitude matrix W with
// rho = Tr_E |psi><psi| = W W^dagger and Tr_S |psi><psi| = (W^dagger W)^T.
// An operator O on E acts as W -> W O^T.
#pragma once

#include <cmath>

#include "msqgt/linalg.hpp"
#include "msqgt/types.hpp"

namespace msqgt {

inline constexpr double kConstructionTol = 1e-12;
inline constexpr double kDefaultRankTol = 1e-10;
inline constexpr double kDegeneracyGap = 1e-8;

class DensityMatrix {
 public:
  std::size_t dim() const { return static_cast<std::size_t>(entries_.rows()); }
  const Mat& matrix() const { return entries_; }
  const RVec& eigenvalues() const { return eig_.values; }
  const Mat& eigenvectors() const { return eig_.vectors; }
  const EigenSystem& eigensystem() const { return eig_; }
  double min_eigenvalue() const { return eig_.values(eig_.values.size() - 1); }
  double rank_tol() const { return rank_tol_; }
  bool full_rank() const { return min_eigenvalue() > rank_tol_; }

  /// Smallest distance between adjacent eigenvalues (infinity for N = 1).
  double spectral_gap() const {
    double g = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i + 1 < eig_.values.size(); ++i) g = std::min(g, eig_.values(i) - eig_.values(i + 1));
    return g;
  }
  /// Eigenbasis (and hence Schmidt-form outputs) is convention dependent.
  bool degenerate() const { return spectral_gap() < kDegeneracyGap; }

 private:
  friend DensityMatrix validate_density(const Mat&, double, double);
  DensityMatrix(Mat m, EigenSystem e, double rank_tol) : entries_(std::move(m)), eig_(std::move(e)), rank_tol_(rank_tol) {}

  Mat entries_;
  EigenSystem eig_;
  double rank_tol_;
};

/// Certify Hermiticity, unit trace and positivity. The stored matrix is the
/// Hermitian part of the input.
inline DensityMatrix validate_density(const Mat& m, double tol = kConstructionTol, double rank_tol = kDefaultRankTol) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw Error(ErrorKind::NotSquare, detail::cat("matrix is ", m.rows(), "x", m.cols()));
  const double herm = hermiticity_residual(m);
  if (herm > tol) throw Error(ErrorKind::NotHermitian, detail::cat("max|rho - rho^dagger| = ", herm), herm);
  const double tr_dev = std::abs(m.trace() - cplx(1.0, 0.0));
  if (tr_dev > tol) throw Error(ErrorKind::TraceNotOne, detail::cat("|Tr rho - 1| = ", tr_dev), tr_dev);
  Mat h = 0.5 * (m + m.adjoint());
  EigenSystem es = hermitian_eigen(h);
  const double lmin = es.values(es.values.size() - 1);
  if (lmin < -tol) throw Error(ErrorKind::NotPSD, detail::cat("min eigenvalue = ", lmin), lmin);
  return DensityMatrix(std::move(h), std::move(es), rank_tol);
}

// ---------------------------------------------------------------------------
// Bipartite vector helpers
// ---------------------------------------------------------------------------

inline Eigen::Index bipartite_dim(Eigen::Index size) {
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(size))));
  if (n * n != size || n == 0) throw Error(ErrorKind::DimensionMismatch, detail::cat("length ", size, " is not N*N"));
  return n;
}

/// Row-major reshape of a length-N^2 vector into the N x N amplitude matrix.
inline Mat amplitude_matrix(const Vec& v) {
  const auto n = bipartite_dim(v.size());
  Mat w(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) w(i, j) = v(i * n + j);
  return w;
}

inline Vec vectorize(const Mat& w) {
  const auto n = w.rows();
  Vec v(n * w.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) v(i * w.cols() + j) = w(i, j);
  return v;
}

/// (I_S (x) op) |v>
inline Vec apply_env(const Mat& op, const Vec& v) { return vectorize(amplitude_matrix(v) * op.transpose()); }

/// (op (x) I_E) |v>
inline Vec apply_sys(const Mat& op, const Vec& v) { return vectorize(op * amplitude_matrix(v)); }

/// Tr_S |phi><psi|, an operator on E.
inline Mat trace_sys_outer(const Vec& phi, const Vec& psi) {
  return (amplitude_matrix(psi).adjoint() * amplitude_matrix(phi)).transpose();
}

/// Tr_E |phi><psi|, an operator on S.
inline Mat trace_env_outer(const Vec& phi, const Vec& psi) {
  return amplitude_matrix(phi) * amplitude_matrix(psi).adjoint();
}

// ---------------------------------------------------------------------------
// Purification
// ---------------------------------------------------------------------------

class Purification {
 public:
  /// Wrap a unit vector; throws NotNormalized when |‖v‖² - 1| > tol.
  static Purification from_amplitudes(Vec v, double tol = kConstructionTol) {
    bipartite_dim(v.size());
    const double dev = std::abs(v.squaredNorm() - 1.0);
    if (dev > tol) throw Error(ErrorKind::NotNormalized, detail::cat("|‖psi‖² - 1| = ", dev), dev);
    return Purification(std::move(v));
  }
  static Purification normalized(Vec v) {
    bipartite_dim(v.size());
    const double n = v.norm();
    if (n == 0.0) throw Error(ErrorKind::NotNormalized, "zero vector");
    return Purification(v / n);
  }
  static Purification from_amplitude_matrix(const Mat& w, double tol = kConstructionTol) {
    return from_amplitudes(vectorize(w), tol);
  }

  std::size_t dim() const { return static_cast<std::size_t>(bipartite_dim(amps_.size())); }
  const Vec& amplitudes() const { return amps_; }
  Mat amplitude_matrix() const { return msqgt::amplitude_matrix(amps_); }

 private:
  explicit Purification(Vec v) : amps_(std::move(v)) {}
  Vec amps_;
};

struct SchmidtDecomposition {
  RVec coefficients;  // sqrt(p_i), descending
  Mat sys_basis;      // columns |xi_i>, phase-fixed
  Mat env_basis;      // columns |v_i>

  Vec reassemble() const {
    const auto n = sys_basis.rows();
    Mat w = Mat::Zero(n, n);
    for (Eigen::Index k = 0; k < coefficients.size(); ++k)
      w += coefficients(k) * sys_basis.col(k) * env_basis.col(k).transpose();
    return vectorize(w);
  }
};

/// Tr_E |psi><psi|
inline DensityMatrix partial_trace_env(const Purification& psi, double rank_tol = kDefaultRankTol) {
  const Mat w = psi.amplitude_matrix();
  return validate_density(w * w.adjoint(), kConstructionTol, rank_tol);
}

/// Tr_S |psi><psi|
inline DensityMatrix partial_trace_sys(const Purification& psi, double rank_tol = kDefaultRankTol) {
  const Mat w = psi.amplitude_matrix();
  return validate_density((w.adjoint() * w).transpose(), kConstructionTol, rank_tol);
}

/// Standard purification sum_i sqrt(p_i) |xi_i>|i>, i.e. W = Xi sqrt(P), with
/// the eigenvector ordering and phases of `rho`'s spectral decomposition.
inline Purification purify(const DensityMatrix& rho) {
  const RVec& p = rho.eigenvalues();
  RVec sp(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) sp(i) = p(i) > 0.0 ? std::sqrt(p(i)) : 0.0;
  const Mat w = rho.eigenvectors() * sp.cast<cplx>().asDiagonal();
  return Purification::normalized(vectorize(w));
}

/// Schmidt decomposition via SVD of the amplitude matrix. Each system vector
/// is phase-fixed and its partner environment vector carries the conjugate
/// phase, so the reassembled state is unchanged. Degenerate coefficients leave
/// the basis choice to the SVD.
inline SchmidtDecomposition schmidt(const Purification& psi) {
  const Mat w = psi.amplitude_matrix();
  Eigen::JacobiSVD<Mat> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SchmidtDecomposition sd{svd.singularValues(), svd.matrixU(), svd.matrixV().conjugate()};
  for (Eigen::Index k = 0; k < sd.sys_basis.cols(); ++k) {
    const cplx ph = fix_phase(sd.sys_basis.col(k));
    sd.env_basis.col(k) *= std::conj(ph);
  }
  return sd;
}

// ---------------------------------------------------------------------------
// Fidelity and Bures distances
// ---------------------------------------------------------------------------

/// F(a, b) = Tr sqrt(sqrt(a) b sqrt(a)), evaluated as the nuclear norm of
/// sqrt(a) sqrt(b). Clamped to [0, 1].
inline double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim())
    throw Error(ErrorKind::DimensionMismatch, detail::cat("fidelity of ", a.dim(), "- and ", b.dim(), "-level states"));
  auto sq = [](const DensityMatrix& r) {
    return spectral_apply(r.eigensystem(), [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
  };
  const double f = nuclear_norm(sq(a) * sq(b));
  return std::clamp(f, 0.0, 1.0);
}

inline double bures_angle(const DensityMatrix& a, const DensityMatrix& b) { return std::acos(fidelity(a, b)); }

inline double bures_distance(const DensityMatrix& a, const DensityMatrix& b) {
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * fidelity(a, b)));
}

}  // namespace msqgt
