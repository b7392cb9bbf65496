// qgt.hpp - mixed-state quantum geometric tensor.
//
// Q_{nu mu} = <D_nu psi | D_mu psi> is assembled by two independent routes:
// the Schmidt-free eigenbasis formula on rho and its derivatives, and the Gram
// matrix of covariant derivatives of a lift. Re Q is the Bures metric g and
// Im Q_{nu mu} = sigma_{mu nu}, where sigma_{nu mu} = (1/2)<psi|T_{nu mu}|psi>
// is the mean gauge curvature.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "msqgt/bundle.hpp"
#include "msqgt/lifts.hpp"
#include "msqgt/models.hpp"

namespace msqgt {

inline constexpr double kTensorSymTol = 1e-9;

struct QGTensor {
  Mat entries;  // d x d, (nu, mu)
  std::vector<std::string> chart;

  std::size_t n_params() const { return static_cast<std::size_t>(entries.rows()); }

  /// max |Re Q - Re Q^T|
  double symmetry_residual() const {
    const RMat re = entries.real();
    return re.size() ? (re - re.transpose()).cwiseAbs().maxCoeff() : 0.0;
  }
  /// max |Im Q + Im Q^T| (covers the diagonal as 2|Im Q_mumu|)
  double antisymmetry_residual() const {
    const RMat im = entries.imag();
    return im.size() ? (im + im.transpose()).cwiseAbs().maxCoeff() : 0.0;
  }
  double max_diagonal_imag() const {
    double m = 0.0;
    for (Eigen::Index i = 0; i < entries.rows(); ++i) m = std::max(m, std::abs(entries(i, i).imag()));
    return m;
  }
  /// Smallest eigenvalue of the symmetric part of Re Q.
  double metric_min_eigenvalue() const {
    if (entries.size() == 0) return 0.0;
    const RMat re = entries.real();
    Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (re + re.transpose()));
    return es.eigenvalues().minCoeff();
  }
};

struct QgtOptions {
  /// Compute all d x d entries independently instead of d(d+1)/2 mirrored
  /// ones, so the symmetry laws are observed rather than imposed.
  bool full = false;
  double rank_tol = kDefaultRankTol;
};

namespace detail {
inline std::vector<std::string> default_chart(std::size_t d) {
  std::vector<std::string> c;
  for (std::size_t i = 0; i < d; ++i) c.push_back("x" + std::to_string(i));
  return c;
}

template <typename Entry>
Mat assemble(std::size_t d, bool full, Entry&& entry) {
  const auto n = static_cast<Eigen::Index>(d);
  Mat q(n, n);
  for (Eigen::Index nu = 0; nu < n; ++nu) {
    for (Eigen::Index mu = full ? 0 : nu; mu < n; ++mu) {
      q(nu, mu) = entry(nu, mu);
      if (!full && mu != nu) q(mu, nu) = std::conj(q(nu, mu));
    }
  }
  return q;
}
}  // namespace detail

/// Q_{nu mu} = sum_{ik} p_i / (p_i + p_k)^2 <xi_i|d_nu rho|xi_k><xi_k|d_mu rho|xi_i>
inline QGTensor msqgt_eigenroute(const DensityMatrix& rho, const std::vector<Mat>& drho, std::vector<std::string> chart = {},
                                 QgtOptions opts = {}) {
  if (rho.min_eigenvalue() <= opts.rank_tol)
    throw Error(ErrorKind::RankDeficient, detail::cat("min eigenvalue ", rho.min_eigenvalue(), " <= rank_tol ", opts.rank_tol),
                rho.min_eigenvalue());
  std::vector<Mat> dd;
  for (std::size_t mu = 0; mu < drho.size(); ++mu) {
    const double r = hermiticity_residual(drho[mu]);
    if (r > 1e-9) throw Error(ErrorKind::NonHermitianDerivative, detail::cat("derivative ", mu, " has Hermiticity residual ", r), r);
    dd.push_back(rho.eigenvectors().adjoint() * drho[mu] * rho.eigenvectors());
  }
  const RVec& p = rho.eigenvalues();
  const auto n = p.size();
  auto entry = [&](Eigen::Index nu, Eigen::Index mu) {
    cplx s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < n; ++k) {
        const double den = p(i) + p(k);
        s += p(i) / (den * den) * dd[static_cast<std::size_t>(nu)](i, k) * dd[static_cast<std::size_t>(mu)](k, i);
      }
    return s;
  };
  if (chart.empty()) chart = detail::default_chart(drho.size());
  return QGTensor{detail::assemble(drho.size(), opts.full, entry), std::move(chart)};
}

/// Q_{nu mu} = <D_nu psi|D_mu psi> from a lift and its tangents.
inline QGTensor msqgt_covariant_route(const Purification& psi, const std::vector<TangentVector>& dpsi, std::vector<std::string> chart = {},
                                      QgtOptions opts = {}) {
  std::vector<Vec> cov;
  for (const auto& t : dpsi) cov.push_back(covariant_derivative(psi, t, opts.rank_tol).components);
  auto entry = [&](Eigen::Index nu, Eigen::Index mu) {
    return cov[static_cast<std::size_t>(nu)].dot(cov[static_cast<std::size_t>(mu)]);
  };
  if (chart.empty()) chart = detail::default_chart(dpsi.size());
  return QGTensor{detail::assemble(dpsi.size(), opts.full, entry), std::move(chart)};
}

/// Re Q: the Bures metric.
inline RMat bures_metric(const QGTensor& q) { return q.entries.real(); }

/// Im Q. Note the index order: (Im Q)_{nu mu} is the mean curvature sigma_{mu nu}.
inline RMat mean_curvature_part(const QGTensor& q) { return q.entries.imag(); }

/// Traditional pure-state tensor <d_nu xi|d_mu xi> - <d_nu xi|xi><xi|d_mu xi>.
inline QGTensor pure_qgt(const Vec& xi, const std::vector<Vec>& dxi, std::vector<std::string> chart = {}, bool full = false) {
  const double nrm = std::abs(xi.squaredNorm() - 1.0);
  if (nrm > 1e-10) throw Error(ErrorKind::NotNormalized, detail::cat("|‖xi‖² - 1| = ", nrm), nrm);
  auto entry = [&](Eigen::Index nu, Eigen::Index mu) {
    const Vec& a = dxi[static_cast<std::size_t>(nu)];
    const Vec& b = dxi[static_cast<std::size_t>(mu)];
    return a.dot(b) - a.dot(xi) * xi.dot(b);
  };
  if (chart.empty()) chart = detail::default_chart(dxi.size());
  return QGTensor{detail::assemble(dxi.size(), full, entry), std::move(chart)};
}

// ---------------------------------------------------------------------------
// Gauge curvature
// ---------------------------------------------------------------------------

/// Connection components A_mu at a chart point, all in one smooth gauge.
using ConnectionField = std::function<std::vector<EnvOperator>(const Point&)>;

inline ConnectionField connection_field(LiftFn lift, double rank_tol = kDefaultRankTol) {
  return [lift = std::move(lift), rank_tol](const Point& x) {
    const LiftedPoint lp = lift(x);
    std::vector<EnvOperator> a;
    for (const auto& t : lp.dpsi) a.push_back(connection(lp.psi, t, rank_tol));
    return a;
  };
}

struct CurvatureTensor {
  std::size_t n_params = 0;
  std::vector<Mat> blocks;  // row-major d x d of T_{nu mu}

  const Mat& block(std::size_t nu, std::size_t mu) const { return blocks[nu * n_params + mu]; }

  double antisymmetry_residual() const {
    double r = 0.0;
    for (std::size_t a = 0; a < n_params; ++a)
      for (std::size_t b = 0; b < n_params; ++b) r = std::max(r, max_abs(block(a, b) + block(b, a)));
    return r;
  }
  double hermiticity_residual() const {
    double r = 0.0;
    for (const auto& m : blocks) r = std::max(r, msqgt::hermiticity_residual(m));
    return r;
  }
};

inline constexpr double kCurvatureStep = 1e-4;
inline constexpr double kStencilJumpTol = 0.1;

/// T_{nu mu} = d_mu A_nu - d_nu A_mu - i [A_mu, A_nu], derivatives by central
/// differences with step h in each parameter.
inline CurvatureTensor gauge_curvature(const ConnectionField& field, const Point& x, double h = kCurvatureStep) {
  const std::vector<EnvOperator> a0 = field(x);
  const std::size_t d = a0.size();
  std::vector<std::vector<Mat>> da(d);  // da[mu][nu] = d_mu A_nu
  for (std::size_t mu = 0; mu < d; ++mu) {
    Point xp = x, xm = x;
    xp[mu] += h;
    xm[mu] -= h;
    const auto ap = field(xp);
    const auto am = field(xm);
    for (std::size_t nu = 0; nu < d; ++nu) {
      const double jump = std::max(max_abs(ap[nu].entries - a0[nu].entries), max_abs(am[nu].entries - a0[nu].entries));
      if (jump > kStencilJumpTol)
        throw Error(ErrorKind::InconsistentStencil, detail::cat("connection component ", nu, " jumps by ", jump, " along parameter ", mu), jump);
      da[mu].push_back((ap[nu].entries - am[nu].entries) / (2.0 * h));
    }
  }
  CurvatureTensor t{d, std::vector<Mat>(d * d)};
  for (std::size_t nu = 0; nu < d; ++nu)
    for (std::size_t mu = 0; mu < d; ++mu) {
      const Mat& amu = a0[mu].entries;
      const Mat& anu = a0[nu].entries;
      t.blocks[nu * d + mu] = da[mu][nu] - da[nu][mu] - kI * (amu * anu - anu * amu);
    }
  return t;
}

/// sigma_{nu mu} = (1/2) <psi| I (x) T_{nu mu} |psi>
inline RMat mean_curvature(const CurvatureTensor& t, const Purification& psi) {
  const auto d = static_cast<Eigen::Index>(t.n_params);
  RMat s(d, d);
  const Vec& v = psi.amplitudes();
  for (Eigen::Index nu = 0; nu < d; ++nu)
    for (Eigen::Index mu = 0; mu < d; ++mu)
      s(nu, mu) = 0.5 * v.dot(apply_env(t.block(static_cast<std::size_t>(nu), static_cast<std::size_t>(mu)), v)).real();
  return s;
}

// ---------------------------------------------------------------------------
// Pure-state limit of thermal families
// ---------------------------------------------------------------------------

struct LimitRow {
  double beta;
  QGTensor q;
  double deviation;  // max |Q(beta) - Q_pure|
};

struct LimitSweep {
  QGTensor pure;
  std::vector<LimitRow> rows;
  std::optional<double> truncated_at;  // first beta that could not be evaluated
  std::string truncation_reason;
  bool monotone_tail = false;          // deviations strictly decreasing over rows[tail_start..]
};

/// Evaluate Q(beta) on the thermal family at `x` for each beta and compare
/// against the pure-state tensor of the ground state. Stops at the first beta
/// whose spectrum falls below the rank floor.
inline LimitSweep thermal_limit_sweep(const ThermalModel& model, const Point& x, const std::vector<double>& betas, std::size_t tail_start = 0,
                                      QgtOptions opts = {}) {
  std::vector<std::string> chart;
  for (const auto& p : model.params()) chart.push_back(p.name);
  LimitSweep out{pure_qgt(model.ground_state(x), model.ground_state_derivatives(x), chart, opts.full), {}, std::nullopt, {}, false};
  for (double beta : betas) {
    const ThermalModel mb = model.with_beta(beta);
    try {
      const DensityMatrix rho = validate_density(mb.thermal_matrix(x), kConstructionTol, opts.rank_tol);
      QGTensor q = msqgt_eigenroute(rho, mb.thermal_derivatives(x), chart, opts);
      const double dev = max_abs(q.entries - out.pure.entries);
      out.rows.push_back(LimitRow{beta, std::move(q), dev});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RankDeficient) throw;
      out.truncated_at = beta;
      out.truncation_reason = e.what();
      break;
    }
  }
  bool mono = out.rows.size() > tail_start;
  for (std::size_t i = tail_start + 1; i < out.rows.size(); ++i) mono = mono && out.rows[i].deviation < out.rows[i - 1].deviation;
  out.monotone_tail = mono;
  return out;
}

}  // namespace msqgt
