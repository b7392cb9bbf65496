// transport.hpp - horizontal lifts, holonomy of closed curves, mean holonomy.
//
// A horizontal lift is written psi~(t) = (I (x) U(t)) psi_c(t) over a
// reference lift psi_c with connection A^c; horizontality is i dU/dt = U A^c,
// integrated by the left-ordered midpoint product
//   U_{k+1} = U_k exp(-i A^c(t_{k+1/2}) dt).
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/LU>

#include "msqgt/bundle.hpp"
#include "msqgt/models.hpp"

namespace msqgt {

inline constexpr double kMinAdjacentOverlap = 0.9;

struct LiftedCurve {
  std::vector<double> times;
  std::vector<Purification> points;
  std::vector<DensityMatrix> base_points;
};

/// A continuous lift of a base curve: t -> psi_c(t) and its tangent.
struct ReferenceLift {
  std::function<Purification(double)> point;
  std::function<Vec(double)> tangent;
};

/// A base curve t in [0, t_end] -> rho(t).
struct BaseCurve {
  std::function<DensityMatrix(double)> rho;
  double t_end = 1.0;
};

/// Standard purification of each base point, tangent by central differences.
inline ReferenceLift standard_reference(const BaseCurve& curve, double h = kDefaultFdStep) {
  auto point = [rho = curve.rho](double t) { return purify(rho(t)); };
  auto tangent = [point, h](double t) { return Vec((point(t + h).amplitudes() - point(t - h).amplitudes()) / (2.0 * h)); };
  return ReferenceLift{point, tangent};
}

/// Reference lift multiplied by an environment gauge: (I (x) V(t)) psi_c(t).
inline ReferenceLift gauged_reference(ReferenceLift ref, std::function<Mat(double)> v, std::function<Mat(double)> dv) {
  auto point = [ref, v](double t) { return Purification::normalized(apply_env(v(t), ref.point(t).amplitudes())); };
  auto tangent = [ref, v, dv](double t) {
    const Vec p = ref.point(t).amplitudes();
    return Vec(apply_env(dv(t), p) + apply_env(v(t), ref.tangent(t)));
  };
  return ReferenceLift{point, tangent};
}

struct HorizontalLift {
  LiftedCurve curve;
  std::vector<Mat> unitaries;        // U_k with points[k] = (I (x) U_k) reference(t_k)
  double max_discrete_connection = 0.0;  // max |A| estimated from consecutive output points
};

namespace detail {
/// Environment unitary U with psi_target = (I (x) U) psi_ref, both purifying the same state.
inline Mat relating_unitary(const Purification& ref, const Purification& target) {
  const Mat wr = ref.amplitude_matrix();
  const Mat wt = target.amplitude_matrix();
  return polar_unitary(wr.adjoint() * wt).transpose();
}

inline void check_overlap(const Purification& a, const Purification& b, std::size_t k) {
  const double ov = std::abs(a.amplitudes().dot(b.amplitudes()));
  if (ov < kMinAdjacentOverlap)
    throw Error(ErrorKind::CoarseGrid, detail::cat("reference overlap ", ov, " between samples ", k, " and ", k + 1), ov);
}

inline double discrete_connection(const Purification& a, const Purification& b, double dt) {
  const Purification mid = Purification::normalized(0.5 * (a.amplitudes() + b.amplitudes()));
  const Vec d = (b.amplitudes() - a.amplitudes()) / dt;
  return max_abs(connection(mid, make_tangent(mid, d)).entries);
}

inline HorizontalLift assemble_lift(const std::vector<double>& times, const std::vector<Purification>& ref_points,
                                    const std::vector<Mat>& slice_connections, const Purification& psi_start) {
  const auto n = times.size();
  HorizontalLift out;
  Mat u = relating_unitary(ref_points[0], psi_start);
  const double start_dev = max_abs(trace_env_outer(ref_points[0].amplitudes(), ref_points[0].amplitudes()) -
                                   trace_env_outer(psi_start.amplitudes(), psi_start.amplitudes()));
  if (start_dev > 1e-8)
    throw Error(ErrorKind::InvalidArgument, detail::cat("start point does not purify the first base point (deviation ", start_dev, ")"), start_dev);
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) u = u * expm_minus_i(slice_connections[k - 1], times[k] - times[k - 1]);
    out.unitaries.push_back(u);
    Purification p = Purification::normalized(apply_env(u, ref_points[k].amplitudes()));
    out.curve.base_points.push_back(partial_trace_env(p));
    out.curve.points.push_back(std::move(p));
  }
  out.curve.times = times;
  for (std::size_t k = 0; k + 1 < n; ++k)
    out.max_discrete_connection =
        std::max(out.max_discrete_connection, discrete_connection(out.curve.points[k], out.curve.points[k + 1], times[k + 1] - times[k]));
  return out;
}
}  // namespace detail

/// Horizontal lift through psi_start of the curve carried by a continuous
/// reference lift, on a uniform grid of `steps` intervals over [0, t_end].
/// The reference connection is evaluated exactly at each slice midpoint.
inline HorizontalLift horizontal_lift(const ReferenceLift& ref, double t_end, std::size_t steps, const Purification& psi_start) {
  if (steps == 0) throw Error(ErrorKind::InvalidArgument, "horizontal lift needs at least one step");
  const std::vector<double> times = [&] {
    std::vector<double> t(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) t[k] = t_end * static_cast<double>(k) / static_cast<double>(steps);
    return t;
  }();
  std::vector<Purification> pts;
  pts.reserve(steps + 1);
  for (double t : times) pts.push_back(ref.point(t));
  std::vector<Mat> conn;
  conn.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    detail::check_overlap(pts[k], pts[k + 1], k);
    const double tm = 0.5 * (times[k] + times[k + 1]);
    const Purification pm = ref.point(tm);
    conn.push_back(connection(pm, make_tangent(pm, ref.tangent(tm))).entries);
  }
  return detail::assemble_lift(times, pts, conn, psi_start);
}

/// Horizontal lift over a sampled reference. Slice midpoints and tangents come
/// from cubic interpolation through the four surrounding samples (two-point
/// rule at the ends), which assumes a uniform grid.
inline HorizontalLift horizontal_lift(const LiftedCurve& reference, const Purification& psi_start) {
  const auto& t = reference.times;
  const auto& p = reference.points;
  const auto n = p.size();
  if (n < 2 || t.size() != n) throw Error(ErrorKind::InvalidArgument, "sampled reference needs at least two consistent samples");
  for (std::size_t k = 0; k + 1 < n; ++k)
    if (!(t[k + 1] > t[k])) throw Error(ErrorKind::InvalidArgument, "reference times must be strictly increasing");
  std::vector<Mat> conn;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    detail::check_overlap(p[k], p[k + 1], k);
    const double dt = t[k + 1] - t[k];
    Vec mid, d;
    if (k >= 1 && k + 2 < n) {
      mid = (-p[k - 1].amplitudes() + 9.0 * p[k].amplitudes() + 9.0 * p[k + 1].amplitudes() - p[k + 2].amplitudes()) / 16.0;
      d = (p[k - 1].amplitudes() - 27.0 * p[k].amplitudes() + 27.0 * p[k + 1].amplitudes() - p[k + 2].amplitudes()) / (24.0 * dt);
    } else {
      mid = 0.5 * (p[k].amplitudes() + p[k + 1].amplitudes());
      d = (p[k + 1].amplitudes() - p[k].amplitudes()) / dt;
    }
    const Purification pm = Purification::normalized(mid);
    conn.push_back(connection(pm, make_tangent(pm, d)).entries);
  }
  return detail::assemble_lift(t, p, conn, psi_start);
}

struct HolonomyResult {
  Mat unitary;         // psi~(T) = (I (x) U) psi~(0)
  cplx mean_holonomy;  // <psi~(0)| I (x) U |psi~(0)>
  double uhlmann_phase = 0.0;
  std::size_t steps = 0;
  double convergence_estimate = std::numeric_limits<double>::quiet_NaN();  // |O_C(2 steps) - O_C(steps)|
  Purification start;
};

struct HolonomyOptions {
  std::size_t steps = 1024;
  std::size_t max_steps = std::size_t{1} << 15;
  double fd_step = kDefaultFdStep;
  bool estimate_convergence = false;
  std::optional<ReferenceLift> reference;  // default: standard purification of the base curve
};

inline constexpr double kClosureTol = 1e-10;

namespace detail {
inline HolonomyResult holonomy_once(const ReferenceLift& ref, double t_end, std::size_t steps, const Purification& start) {
  const HorizontalLift lift = horizontal_lift(ref, t_end, steps, start);
  const Purification& first = lift.curve.points.front();
  const Purification& last = lift.curve.points.back();
  // W_T = W_0 U^T for the environment action W -> W U^T
  const Mat w0 = first.amplitude_matrix();
  const Mat wt = last.amplitude_matrix();
  const Mat u = w0.fullPivLu().solve(wt).transpose();
  const cplx oc = first.amplitudes().dot(apply_env(u, first.amplitudes()));
  return HolonomyResult{u, oc, std::arg(oc), steps, std::numeric_limits<double>::quiet_NaN(), first};
}
}  // namespace detail

/// Holonomy of a closed base curve for the horizontal lift through `psi_start`
/// (default: the reference lift's starting point). The grid doubles on
/// CoarseGrid up to `max_steps`.
inline HolonomyResult holonomy(const BaseCurve& curve, const std::optional<Purification>& psi_start = std::nullopt, HolonomyOptions opts = {}) {
  const double closure = max_abs(curve.rho(curve.t_end).matrix() - curve.rho(0.0).matrix());
  if (closure > kClosureTol) throw Error(ErrorKind::NotClosed, detail::cat("base curve endpoints differ by ", closure), closure);
  const ReferenceLift ref = opts.reference ? *opts.reference : standard_reference(curve, opts.fd_step);
  const Purification start = psi_start ? *psi_start : ref.point(0.0);
  std::size_t steps = opts.steps;
  for (;;) {
    try {
      HolonomyResult r = detail::holonomy_once(ref, curve.t_end, steps, start);
      if (opts.estimate_convergence) {
        const HolonomyResult fine = detail::holonomy_once(ref, curve.t_end, 2 * steps, start);
        r.convergence_estimate = std::abs(fine.mean_holonomy - r.mean_holonomy);
      }
      return r;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::CoarseGrid || 2 * steps > opts.max_steps) throw;
      steps *= 2;
    }
  }
}

struct GaugeConjugationReport {
  HolonomyResult original;
  HolonomyResult transformed;
  double conjugation_residual = 0.0;   // max |U' - U0 U U0^dagger|
  double mean_holonomy_residual = 0.0; // |O'_C - O_C|
};

/// Recompute the holonomy over the reference (I (x) U0) psi_c starting at
/// (I (x) U0) psi_start, and compare with U0 U U0^dagger and O_C.
inline GaugeConjugationReport gauge_conjugation_check(const BaseCurve& curve, const Purification& psi_start, const Mat& u0,
                                                      HolonomyOptions opts = {}) {
  const double ur = unitarity_residual(u0);
  if (ur > 1e-10) throw Error(ErrorKind::NotUnitary, detail::cat("constant gauge has unitarity residual ", ur), ur);
  const ReferenceLift ref = opts.reference ? *opts.reference : standard_reference(curve, opts.fd_step);
  HolonomyOptions o = opts;
  o.reference = ref;
  HolonomyResult original = holonomy(curve, psi_start, o);
  o.reference = gauged_reference(ref, [u0](double) { return u0; }, [n = u0.rows()](double) { return Mat(Mat::Zero(n, n)); });
  HolonomyResult transformed = holonomy(curve, Purification::normalized(apply_env(u0, psi_start.amplitudes())), o);
  GaugeConjugationReport rep{std::move(original), std::move(transformed)};
  rep.conjugation_residual = max_abs(rep.transformed.unitary - u0 * rep.original.unitary * u0.adjoint());
  rep.mean_holonomy_residual = std::abs(rep.transformed.mean_holonomy - rep.original.mean_holonomy);
  return rep;
}

}  // namespace msqgt
