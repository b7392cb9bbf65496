// models.hpp - parameterized density-matrix families and their derivatives.
#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "msqgt/states.hpp"

namespace msqgt {

struct ParamSpec {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  bool periodic = false;  // no domain restriction; lo/hi give one period
  bool polar = false;     // chart degenerates at lo and hi (sin theta factors)
};

using DensityFn = std::function<DensityMatrix(const Point&)>;
using DerivativeFn = std::function<std::vector<Mat>(const Point&)>;

struct ModelFamily {
  std::string name;
  std::size_t dim = 0;
  std::vector<ParamSpec> params;
  DensityFn evaluate;
  DerivativeFn analytic_derivatives;   // empty when unavailable
  std::vector<double> lattice_spacing;  // set for lattice-defined families: forces central differences at this spacing

  std::size_t n_params() const { return params.size(); }
  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back(p.name);
    return out;
  }
  bool has_analytic() const { return static_cast<bool>(analytic_derivatives); }
};

inline constexpr double kDefaultFdStep = 1e-5;

struct Scheme {
  enum class Kind { Analytic, Central };
  Kind kind = Kind::Analytic;
  double h = kDefaultFdStep;

  static Scheme analytic() { return {Kind::Analytic, kDefaultFdStep}; }
  static Scheme central(double h = kDefaultFdStep) { return {Kind::Central, h}; }
};

struct DerivativeSet {
  std::vector<Mat> d;       // Hermitian parts, one per parameter
  double asymmetry = 0.0;   // max |D - D^dagger| before symmetrization
};

namespace detail {
inline void check_in_domain(const ModelFamily& m, const Point& x, const std::vector<double>& margin) {
  if (x.size() != m.n_params())
    throw Error(ErrorKind::DimensionMismatch, detail::cat("point has ", x.size(), " coordinates, model '", m.name, "' has ", m.n_params()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& p = m.params[i];
    if (p.periodic) continue;
    const double mg = margin.empty() ? 0.0 : margin[i];
    // the relative slack absorbs grid points that land one ulp outside
    const double slack = 1e-12 * std::max(1.0, std::abs(p.hi - p.lo));
    if (x[i] < p.lo + mg - slack || x[i] > p.hi - mg + slack)
      throw Error(ErrorKind::OutOfDomain, detail::cat(p.name, " = ", x[i], " outside [", p.lo + mg, ", ", p.hi - mg, "]"), x[i]);
  }
}
}  // namespace detail

/// Per-parameter derivatives of rho at `x`. Lattice families always use
/// central differences at their lattice spacing.
inline DerivativeSet derivatives(const ModelFamily& m, const Point& x, Scheme scheme = Scheme::analytic()) {
  std::vector<Mat> raw;
  const bool lattice = !m.lattice_spacing.empty();
  if (scheme.kind == Scheme::Kind::Analytic && !lattice) {
    if (!m.has_analytic()) throw Error(ErrorKind::NoAnalyticDerivatives, detail::cat("model '", m.name, "' has no analytic derivatives"));
    detail::check_in_domain(m, x, {});
    raw = m.analytic_derivatives(x);
  } else {
    std::vector<double> steps = lattice ? m.lattice_spacing : std::vector<double>(m.n_params(), scheme.h);
    detail::check_in_domain(m, x, steps);
    for (std::size_t mu = 0; mu < m.n_params(); ++mu) {
      Point xp = x, xm = x;
      xp[mu] += steps[mu];
      xm[mu] -= steps[mu];
      raw.push_back((m.evaluate(xp).matrix() - m.evaluate(xm).matrix()) / (2.0 * steps[mu]));
    }
  }
  DerivativeSet out;
  for (auto& d : raw) {
    out.asymmetry = std::max(out.asymmetry, hermiticity_residual(d));
    out.d.push_back(0.5 * (d + d.adjoint()));
  }
  return out;
}

/// Spot-check a family: valid densities on a 5^d lattice over its domain and,
/// when analytic derivatives exist, agreement with central differences
/// (h = 1e-5) within 1e-7 at a few random interior points. Returns the family.
inline ModelFamily register_model(ModelFamily m, std::uint64_t seed = 20240601) {
  const std::size_t d = m.n_params();
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= 5;
  for (std::size_t idx = 0; idx < total; ++idx) {
    Point x(d);
    std::size_t rem = idx;
    for (std::size_t i = 0; i < d; ++i) {
      const auto& p = m.params[i];
      x[i] = p.lo + (p.hi - p.lo) * static_cast<double>(rem % 5) / 4.0;
      rem /= 5;
    }
    m.evaluate(x);  // throws on an invalid density
  }
  if (m.has_analytic() && m.lattice_spacing.empty()) {
    std::mt19937_64 rng(seed);
    for (int trial = 0; trial < 3; ++trial) {
      Point x(d);
      for (std::size_t i = 0; i < d; ++i) {
        const auto& p = m.params[i];
        std::uniform_real_distribution<double> u(p.lo + 0.05 * (p.hi - p.lo), p.hi - 0.05 * (p.hi - p.lo));
        x[i] = u(rng);
      }
      const auto a = derivatives(m, x, Scheme::analytic());
      const auto c = derivatives(m, x, Scheme::central());
      for (std::size_t mu = 0; mu < d; ++mu) {
        const double dev = max_abs(a.d[mu] - c.d[mu]);
        if (dev > 1e-7)
          throw Error(ErrorKind::InvalidArgument,
                      detail::cat("model '", m.name, "': analytic and central derivatives differ by ", dev, " in ", m.params[mu].name), dev);
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Pauli matrices and the fixed-radius Bloch qubit
// ---------------------------------------------------------------------------

inline Mat pauli_x() { Mat m(2, 2); m << 0, 1, 1, 0; return m; }
inline Mat pauli_y() { Mat m(2, 2); m << 0, -kI, kI, 0; return m; }
inline Mat pauli_z() { Mat m(2, 2); m << 1, 0, 0, -1; return m; }

/// (I + b.sigma) / 2 as a raw matrix.
inline Mat bloch_matrix(double bx, double by, double bz) {
  return 0.5 * (Mat::Identity(2, 2) + bx * pauli_x() + by * pauli_y() + bz * pauli_z());
}

/// Bloch vector Tr(rho sigma) of a qubit matrix.
inline Eigen::Vector3d bloch_vector(const Mat& rho) {
  return {(rho * pauli_x()).trace().real(), (rho * pauli_y()).trace().real(), (rho * pauli_z()).trace().real()};
}

/// rho(theta, phi) = (I + r n(theta, phi).sigma) / 2 with fixed radius r in (0, 1].
inline ModelFamily bloch_qubit_model(double r) {
  if (!(r > 0.0 && r <= 1.0)) throw Error(ErrorKind::InvalidArgument, detail::cat("Bloch radius r = ", r, " outside (0, 1]"), r);
  ModelFamily m;
  m.name = "bloch";
  m.dim = 2;
  m.params = {ParamSpec{"theta", 0.0, kPi, false, true}, ParamSpec{"phi", 0.0, 2.0 * kPi, true, false}};
  m.evaluate = [r](const Point& x) {
    const double th = x[0], ph = x[1];
    return validate_density(bloch_matrix(r * std::sin(th) * std::cos(ph), r * std::sin(th) * std::sin(ph), r * std::cos(th)));
  };
  m.analytic_derivatives = [r](const Point& x) {
    const double th = x[0], ph = x[1];
    const Mat dth = 0.5 * r * (std::cos(th) * std::cos(ph) * pauli_x() + std::cos(th) * std::sin(ph) * pauli_y() - std::sin(th) * pauli_z());
    const Mat dph = 0.5 * r * (-std::sin(th) * std::sin(ph) * pauli_x() + std::sin(th) * std::cos(ph) * pauli_y());
    return std::vector<Mat>{dth, dph};
  };
  return register_model(std::move(m));
}

// ---------------------------------------------------------------------------
// Thermal families rho = exp(-beta H) / Z
// ---------------------------------------------------------------------------

using HamiltonianFn = std::function<Mat(const Point&)>;
using HamiltonianDerivativeFn = std::function<std::vector<Mat>(const Point&)>;

/// Thermal state of a parameterized Hamiltonian. Energies are shifted so the
/// ground level sits at 0 before exponentiation.
class ThermalModel {
 public:
  ThermalModel(std::string name, std::size_t dim, std::vector<ParamSpec> params, HamiltonianFn h, HamiltonianDerivativeFn dh, double beta)
      : name_(std::move(name)), dim_(dim), params_(std::move(params)), h_(std::move(h)), dh_(std::move(dh)), beta_(beta) {
    if (!(beta > 0.0)) throw Error(ErrorKind::InvalidArgument, detail::cat("thermal model requires beta > 0, got ", beta), beta);
  }

  double beta() const { return beta_; }
  const std::vector<ParamSpec>& params() const { return params_; }
  ThermalModel with_beta(double beta) const { return ThermalModel(name_, dim_, params_, h_, dh_, beta); }

  Mat hamiltonian(const Point& x) const { return h_(x); }

  /// Raw thermal matrix; no validation (the caller decides the rank policy).
  Mat thermal_matrix(const Point& x) const {
    const EigenSystem es = hermitian_eigen(h_(x));
    const double e0 = es.values(es.values.size() - 1);
    return spectral_apply(es, [&](double e) { return std::exp(-beta_ * (e - e0)); }) / partition(es, e0);
  }

  /// Lowest-energy eigenvector (phase-fixed).
  Vec ground_state(const Point& x) const {
    const EigenSystem es = hermitian_eigen(h_(x));
    return es.vectors.col(es.vectors.cols() - 1);
  }

  /// d|xi_0> from first-order perturbation theory, with no component along
  /// |xi_0> (any such component is a phase and drops out of gauge-invariant use).
  std::vector<Vec> ground_state_derivatives(const Point& x) const {
    const EigenSystem es = hermitian_eigen(h_(x));
    const auto n = es.values.size();
    const auto g = n - 1;
    std::vector<Vec> out;
    for (const Mat& dh : dh_(x)) {
      const Mat dd = es.vectors.adjoint() * dh * es.vectors;
      Vec v = Vec::Zero(n);
      for (Eigen::Index i = 0; i < g; ++i) v += es.vectors.col(i) * (dd(i, g) / (es.values(g) - es.values(i)));
      out.push_back(v);
    }
    return out;
  }

  ModelFamily family() const {
    ModelFamily m;
    m.name = name_;
    m.dim = dim_;
    m.params = params_;
    ThermalModel self = *this;
    m.evaluate = [self](const Point& x) { return validate_density(self.thermal_matrix(x)); };
    if (dh_) m.analytic_derivatives = [self](const Point& x) { return self.thermal_derivatives(x); };
    return m;
  }

  /// Daleckii-Krein derivative of exp(-beta (H - E0)) / Z.
  std::vector<Mat> thermal_derivatives(const Point& x) const {
    const EigenSystem es = hermitian_eigen(h_(x));
    const auto n = es.values.size();
    const double e0 = es.values(n - 1);
    RVec e = es.values.array() - e0;
    const double z = partition(es, e0);
    const Mat rho = thermal_matrix(x);
    std::vector<Mat> out;
    for (const Mat& dh : dh_(x)) {
      Mat dx = es.vectors.adjoint() * dh * es.vectors;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
          const double delta = e(i) - e(k);
          const double fk = std::exp(-beta_ * e(k));
          const double dd = std::abs(delta) < 1e-12 ? -beta_ * fk : fk * std::expm1(-beta_ * delta) / delta;
          dx(i, k) *= dd;
        }
      }
      dx = es.vectors * dx * es.vectors.adjoint();
      out.push_back((dx - rho * dx.trace()) / z);
    }
    return out;
  }

 private:
  double partition(const EigenSystem& es, double e0) const {
    double z = 0.0;
    for (Eigen::Index i = 0; i < es.values.size(); ++i) z += std::exp(-beta_ * (es.values(i) - e0));
    return z;
  }

  std::string name_;
  std::size_t dim_;
  std::vector<ParamSpec> params_;
  HamiltonianFn h_;
  HamiltonianDerivativeFn dh_;
  double beta_;
};

/// H(theta, phi) = -(gap/2) n(theta, phi).sigma: a two-level Hamiltonian whose
/// quantization axis is rotated over the sphere. Ground state
/// (cos(theta/2), e^{i phi} sin(theta/2)); thermal Bloch radius tanh(beta gap / 2).
inline ThermalModel thermal_qubit_model(double gap, double beta) {
  if (!(gap > 0.0)) throw Error(ErrorKind::InvalidArgument, detail::cat("gap must be positive, got ", gap), gap);
  auto h = [gap](const Point& x) {
    const double th = x[0], ph = x[1];
    return Mat(-0.5 * gap * (std::sin(th) * std::cos(ph) * pauli_x() + std::sin(th) * std::sin(ph) * pauli_y() + std::cos(th) * pauli_z()));
  };
  auto dh = [gap](const Point& x) {
    const double th = x[0], ph = x[1];
    const Mat dth = -0.5 * gap * (std::cos(th) * std::cos(ph) * pauli_x() + std::cos(th) * std::sin(ph) * pauli_y() - std::sin(th) * pauli_z());
    const Mat dph = -0.5 * gap * (-std::sin(th) * std::sin(ph) * pauli_x() + std::sin(th) * std::cos(ph) * pauli_y());
    return std::vector<Mat>{dth, dph};
  };
  return ThermalModel("thermal", 2, {ParamSpec{"theta", 0.0, kPi, false, true}, ParamSpec{"phi", 0.0, 2.0 * kPi, true, false}}, h, dh,
                      beta);
}

}  // namespace msqgt
