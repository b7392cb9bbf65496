// cli.hpp - the msqgt command-line front end: grid sweeps of the tensor,
// geodesic traces, holonomy loops, pure-limit sweeps and file validation.
//
// Exit codes: 0 ok, 1 validation violations, 2 config error, 3 model error,
// 4 numerical failure.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "msqgt/geodesics.hpp"
#include "msqgt/io.hpp"
#include "msqgt/lifts.hpp"
#include "msqgt/qgt.hpp"
#include "msqgt/transport.hpp"

namespace msqgt::cli {

enum ExitCode : int { kOk = 0, kViolations = 1, kConfigError = 2, kModelError = 3, kNumericalError = 4 };

struct Failure {
  int code;
  std::string message;
};

[[noreturn]] inline void fail(int code, std::string msg) { throw Failure{code, std::move(msg)}; }

struct GridSpec {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  long count = 0;
};

struct RunConfig {
  std::string command;
  std::string model = "bloch";
  std::map<std::string, std::string> model_args;
  std::vector<GridSpec> grid;
  std::string scheme = "analytic";
  std::string output;
  std::string format = "csv";
  long steps = 1024;
  std::uint64_t seed = 20240601;
  double pole_margin = 0.05;
  std::string route = "eigen";
  unsigned threads = 0;
  // command-specific
  std::string from, to, summary;
  long samples = 101;
  std::string loop;
  std::string betas = "1,5,10,20,40";
  std::string point;
  std::string path;  // validate target
};

// ---------------------------------------------------------------------------
// Parsing helpers
// ---------------------------------------------------------------------------

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

class ScalarParser {
 public:
  explicit ScalarParser(const std::string& s) : s_(s) {}

  double parse() {
    const double v = expr();
    skip();
    if (pos_ != s_.size()) bad();
    return v;
  }

 private:
  [[noreturn]] void bad() const { fail(kConfigError, "cannot parse number '" + s_ + "'"); }
  void skip() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  double expr() {
    double v = term();
    for (;;) {
      if (eat('+')) v += term();
      else if (eat('-')) v -= term();
      else return v;
    }
  }
  double term() {
    double v = factor();
    for (;;) {
      if (eat('*')) v *= factor();
      else if (eat('/')) v /= factor();
      else return v;
    }
  }
  double factor() {
    if (eat('-')) return -factor();
    if (eat('+')) return factor();
    if (eat('(')) {
      const double v = expr();
      if (!eat(')')) bad();
      return v;
    }
    skip();
    if (s_.compare(pos_, 2, "pi") == 0) {
      pos_ += 2;
      return kPi;
    }
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) bad();
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

  std::string s_;
  std::size_t pos_ = 0;
};

/// Arithmetic over numbers and "pi": "pi-0.1", "2*pi/3", "-(pi/2)".
inline double parse_scalar(const std::string& text) { return ScalarParser(text).parse(); }

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  for (const auto& t : split(s, ',')) v.push_back(parse_scalar(t));
  return v;
}

inline GridSpec parse_grid_spec(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts.size() != 4) fail(kConfigError, "grid spec '" + s + "' is not name:min:max:count");
  GridSpec g{trim(parts[0]), parse_scalar(parts[1]), parse_scalar(parts[2]), 0};
  try {
    std::size_t used = 0;
    g.count = std::stol(parts[3], &used);
    if (used != trim(parts[3]).size()) throw std::invalid_argument("count");
  } catch (const std::exception&) {
    fail(kConfigError, "grid count in '" + s + "' is not an integer");
  }
  return g;
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "analytic") return Scheme::analytic();
  if (s == "central") return Scheme::central();
  if (s.rfind("central:", 0) == 0) {
    const double h = parse_scalar(s.substr(8));
    if (!(h > 0.0)) fail(kConfigError, "central step must be positive");
    return Scheme::central(h);
  }
  fail(kConfigError, "scheme must be analytic or central:h, got '" + s + "'");
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

struct ModelHandle {
  ModelFamily family;
  std::optional<ThermalModel> thermal;
};

inline ModelHandle make_model(const RunConfig& c) {
  auto arg = [&](const std::string& key, double def) {
    auto it = c.model_args.find(key);
    return it == c.model_args.end() ? def : parse_scalar(it->second);
  };
  auto accept = [&](std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : c.model_args)
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
        fail(kConfigError, "model '" + c.model + "' does not accept argument '" + k + "'");
  };
  try {
    if (c.model == "bloch") {
      accept({"r"});
      return {bloch_qubit_model(arg("r", 0.9)), std::nullopt};
    }
    if (c.model == "thermal") {
      accept({"gap", "beta"});
      ThermalModel t = thermal_qubit_model(arg("gap", 0.5), arg("beta", 1.0));
      return {register_model(t.family()), t};
    }
    accept({});
    return {load_grid_model(c.model), std::nullopt};
  } catch (const Error& e) {
    fail(kModelError, std::string("model error: ") + e.what());
  }
}

inline std::string point_text(const ModelFamily& m, const Point& x) {
  std::string s;
  for (std::size_t i = 0; i < x.size(); ++i) s += (i ? ", " : "") + m.params[i].name + "=" + format_double(x[i]);
  return s;
}

// ---------------------------------------------------------------------------
// Grids and the worker pool
// ---------------------------------------------------------------------------

/// Axis samples. A periodic axis spanning exactly one period is half-open.
inline std::vector<double> axis_values(const ParamSpec& p, const GridSpec& g) {
  std::vector<double> v;
  const double span = g.max - g.min;
  const bool half_open = p.periodic && std::abs(span - (p.hi - p.lo)) < 1e-12 * std::max(1.0, std::abs(span));
  for (long k = 0; k < g.count; ++k) {
    const double t = half_open ? static_cast<double>(k) / static_cast<double>(g.count)
                               : static_cast<double>(k) / static_cast<double>(g.count - 1);
    v.push_back(g.min + span * t);
  }
  return v;
}

inline std::vector<std::vector<double>> build_axes(const ModelFamily& m, const RunConfig& c, long default_count = 31) {
  std::vector<std::vector<double>> axes;
  for (const auto& g : c.grid)
    if (std::none_of(m.params.begin(), m.params.end(), [&](const ParamSpec& p) { return p.name == g.name; }))
      fail(kConfigError, "model '" + m.name + "' has no parameter '" + g.name + "'");
  for (std::size_t i = 0; i < m.n_params(); ++i) {
    const ParamSpec& p = m.params[i];
    GridSpec g{p.name, p.lo, p.hi, default_count};
    const double inset = m.lattice_spacing.empty() ? (p.polar ? c.pole_margin : 0.0) : m.lattice_spacing[i];
    g.min += inset;
    if (!p.periodic) g.max -= inset;
    bool given = false;
    for (const auto& s : c.grid)
      if (s.name == p.name) {
        g = s;
        given = true;
      }
    if (g.count < 2) fail(kConfigError, detail::cat("grid '", p.name, "' needs count >= 2, got ", g.count));
    if (!(g.min < g.max)) fail(kConfigError, detail::cat("grid '", p.name, "' needs min < max"));
    if (given && p.polar && (g.min < p.lo + c.pole_margin - 1e-12 || g.max > p.hi - c.pole_margin + 1e-12))
      fail(kConfigError, detail::cat("grid '", p.name, "' comes within ", c.pole_margin, " of a pole; pass --pole-margin to override"));
    axes.push_back(axis_values(p, g));
  }
  return axes;
}

inline std::vector<Point> grid_points(const std::vector<std::vector<double>>& axes) {
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.size();
  std::vector<Point> pts;
  pts.reserve(total);
  for (std::size_t f = 0; f < total; ++f) {
    Point x(axes.size());
    std::size_t rem = f;
    for (std::size_t a = axes.size(); a-- > 0;) {
      x[a] = axes[a][rem % axes[a].size()];
      rem /= axes[a].size();
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

/// Evaluate fn(i) for i < n on a pool of workers; results keep index order.
/// The first failure by index is rethrown.
template <class R, class Fn>
std::vector<R> parallel_map(std::size_t n, unsigned threads, Fn fn) {
  std::vector<std::optional<R>> out(n);
  std::vector<std::optional<Failure>> errs(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (const Failure& f) {
        errs[i] = f;
      }
    }
  };
  unsigned t = threads ? threads : std::max(1U, std::thread::hardware_concurrency());
  t = static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(n, 1)));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < t; ++k) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  std::vector<R> res;
  res.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (errs[i]) throw *errs[i];
    res.push_back(std::move(*out[i]));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) fail(kConfigError, "cannot write " + path);
    }
    os_ = path.empty() ? &fallback : &file_;
  }
  std::ostream& stream() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

inline void write_csv_row(std::ostream& os, const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << format_double(v[i]);
  os << "\n";
}

inline void write_csv_header(std::ostream& os, const std::vector<std::string>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << "\n";
}

inline std::vector<std::string> tensor_columns(const std::vector<std::string>& chart) {
  std::vector<std::string> cols;
  for (std::size_t a = 0; a < chart.size(); ++a)
    for (std::size_t b = a; b < chart.size(); ++b) {
      cols.push_back("re_Q_" + chart[a] + "_" + chart[b]);
      cols.push_back("im_Q_" + chart[a] + "_" + chart[b]);
    }
  return cols;
}

inline void append_tensor(std::vector<double>& row, const QGTensor& q) {
  const auto d = q.entries.rows();
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = a; b < d; ++b) {
      row.push_back(q.entries(a, b).real());
      row.push_back(q.entries(a, b).imag());
    }
}

[[noreturn]] inline void numerical(const std::string& where, const Error& e) {
  fail(kNumericalError, where + ": " + e.what());
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline QGTensor tensor_at(const ModelFamily& m, const Point& x, const Scheme& scheme, const std::string& route) {
  if (route == "covariant") {
    const LiftedPoint lp = model_lift(m, scheme)(x);
    return msqgt_covariant_route(lp.psi, lp.dpsi, m.labels());
  }
  return msqgt_eigenroute(m.evaluate(x), derivatives(m, x, scheme).d, m.labels());
}

inline int cmd_field(const RunConfig& c, std::ostream& out) {
  const Scheme scheme = parse_scheme(c.scheme);
  if (c.route != "eigen" && c.route != "covariant") fail(kConfigError, "route must be eigen or covariant");
  const ModelHandle mh = make_model(c);
  const ModelFamily& m = mh.family;
  if (scheme.kind == Scheme::Kind::Analytic && !m.has_analytic() && m.lattice_spacing.empty())
    fail(kConfigError, "model '" + m.name + "' has no analytic derivatives; use --scheme central:h");
  const auto pts = grid_points(build_axes(m, c));
  auto rows = parallel_map<QGTensor>(pts.size(), c.threads, [&](std::size_t i) {
    try {
      return tensor_at(m, pts[i], scheme, c.route);
    } catch (const Error& e) {
      numerical(detail::cat("grid point ", i, " (", point_text(m, pts[i]), ")"), e);
    }
  });
  Output o(c.output, out);
  std::ostream& os = o.stream();
  if (c.format == "json") {
    json j{{"model", m.name}, {"chart", m.labels()}, {"points", json::array()}};
    for (std::size_t i = 0; i < pts.size(); ++i) {
      json p = qgt_to_json(rows[i]);
      p["x"] = pts[i];
      p["symmetry_residual"] = rows[i].symmetry_residual();
      p["antisymmetry_residual"] = rows[i].antisymmetry_residual();
      j["points"].push_back(std::move(p));
    }
    os << j.dump(1) << "\n";
    return kOk;
  }
  std::vector<std::string> header = m.labels();
  for (auto& s : tensor_columns(m.labels())) header.push_back(s);
  header.push_back("symmetry_residual");
  header.push_back("antisymmetry_residual");
  write_csv_header(os, header);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<double> row = pts[i];
    append_tensor(row, rows[i]);
    row.push_back(rows[i].symmetry_residual());
    row.push_back(rows[i].antisymmetry_residual());
    write_csv_row(os, row);
  }
  return kOk;
}

inline Mat random_state(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Mat g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index k = 0; k < g.cols(); ++k) g(i, k) = cplx(nd(rng), nd(rng));
  const Mat w = g * g.adjoint();
  return 0.8 * w / w.trace().real() + 0.2 * Mat::Identity(g.rows(), g.cols()) / static_cast<double>(n);
}

/// Endpoint spec: "bloch:x,y,z", "point:a,b,..." (model chart), "random", or a matrix JSON file.
inline DensityMatrix parse_endpoint(const std::string& spec, const RunConfig& c, std::mt19937_64& rng) {
  try {
    if (spec.rfind("bloch:", 0) == 0) {
      const auto v = parse_list(spec.substr(6));
      if (v.size() != 3) fail(kConfigError, "bloch endpoint needs three components");
      return validate_density(bloch_matrix(v[0], v[1], v[2]));
    }
    if (spec.rfind("point:", 0) == 0) return make_model(c).family.evaluate(parse_list(spec.substr(6)));
    if (spec == "random") {
      const bool has_model = c.model_args.size() || c.model != "bloch";
      return validate_density(random_state(has_model ? make_model(c).family.dim : 2, rng));
    }
    return validate_density(matrix_from_json(read_json_file(spec)));
  } catch (const Error& e) {
    fail(kModelError, "endpoint '" + spec + "': " + e.what());
  }
}

inline int cmd_geodesic(const RunConfig& c, std::ostream& out) {
  if (c.from.empty() || c.to.empty()) fail(kConfigError, "geodesic needs --from and --to");
  if (c.samples < 2) fail(kConfigError, "--samples must be at least 2");
  std::mt19937_64 rng(c.seed);
  const DensityMatrix a = parse_endpoint(c.from, c, rng);
  const DensityMatrix b = parse_endpoint(c.to, c, rng);
  if (a.dim() != b.dim()) fail(kConfigError, "endpoints have different dimensions");
  GeodesicSolution sol = [&] {
    try {
      return solve_geodesic(a, b);
    } catch (const Error& e) {
      numerical("geodesic", e);
    }
  }();
  const auto n = static_cast<Eigen::Index>(a.dim());
  const auto times = linspace(0.0, sol.theta, static_cast<std::size_t>(c.samples));
  Output o(c.output, out);
  std::ostream& os = o.stream();
  std::vector<std::string> header{"t"};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) {
      header.push_back(detail::cat("re_rho_", i, "_", k));
      header.push_back(detail::cat("im_rho_", i, "_", k));
    }
  if (n == 2) header.insert(header.end(), {"bloch_x", "bloch_y", "bloch_z"});
  header.insert(header.end(), {"fidelity_from", "fidelity_to", "ode_residual"});
  write_csv_header(os, header);
  double ode_max = 0.0;
  try {
    for (double t : times) {
      const DensityMatrix r = geodesic_point(sol, t);
      std::vector<double> row{t};
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < n; ++k) {
          row.push_back(r.matrix()(i, k).real());
          row.push_back(r.matrix()(i, k).imag());
        }
      if (n == 2) {
        const Eigen::Vector3d bv = bloch_vector(r.matrix());
        row.insert(row.end(), {bv(0), bv(1), bv(2)});
      }
      const OdeReport ode = verify_geodesic_ode(sol, {t});
      ode_max = std::max(ode_max, ode.ode_residual);
      row.insert(row.end(), {fidelity(a, r), fidelity(r, b), ode.ode_residual});
      write_csv_row(os, row);
    }
  } catch (const Error& e) {
    numerical("geodesic trace", e);
  }
  const auto fine = linspace(0.0, sol.theta, 2001);
  json s{{"theta", sol.theta},
         {"bures_angle", bures_angle(a, b)},
         {"path_length", path_length(fine, sample_geodesic(sol, fine))},
         {"residuals", {{"orthogonality", sol.residuals.orthogonality}, {"horizontality", sol.residuals.horizontality}, {"endpoint", sol.residuals.endpoint}}},
         {"ode_residual", ode_max},
         {"psi0", matrix_to_json(amplitude_matrix(sol.psi0.amplitudes()))},
         {"psi_quarter", matrix_to_json(amplitude_matrix(sol.psi_quarter.amplitudes()))}};
  if (n == 2) {
    const EllipseFit f = bloch_ellipse_check(sol);
    s["ellipse"] = {{"major_axis", f.major_axis}, {"minor_axis", f.minor_axis}, {"deviation", f.max_deviation},
                    {"fit_deviation", f.fit_deviation}, {"plane_residual", f.plane_residual}, {"degenerate", f.degenerate},
                    {"center", {f.center(0), f.center(1), f.center(2)}}};
  }
  const std::string summary = !c.summary.empty() ? c.summary : (c.output.empty() ? "" : c.output + ".summary.json");
  if (!summary.empty()) {
    std::ofstream f(summary, std::ios::binary);
    if (!f) fail(kConfigError, "cannot write " + summary);
    f << s.dump(1) << "\n";
  }
  return kOk;
}

/// Closed base curve from a loop spec: "latitude:theta" (a full circle in the
/// second chart coordinate) or waypoints "a,b;c,d;...;a,b" joined linearly,
/// one unit of curve time per segment.
inline std::pair<BaseCurve, std::size_t> parse_loop(const std::string& spec, const ModelFamily& m) {
  if (spec.rfind("latitude:", 0) == 0) {
    if (m.n_params() != 2) fail(kConfigError, "latitude loops need a two-parameter chart");
    const double th = parse_scalar(spec.substr(9));
    const ParamSpec p = m.params[1];
    return {BaseCurve{[m, th, p](double t) { return m.evaluate({th, p.lo + t}); }, p.hi - p.lo}, 1};
  }
  std::vector<Point> way;
  for (const auto& w : split(spec, ';')) {
    way.push_back(parse_list(w));
    if (way.back().size() != m.n_params()) fail(kConfigError, detail::cat("waypoint '", w, "' needs ", m.n_params(), " coordinates"));
  }
  if (way.size() < 2) fail(kConfigError, "a loop needs at least two waypoints");
  const std::size_t segs = way.size() - 1;
  auto rho = [m, way, segs](double t) {
    const double tc = std::clamp(t, 0.0, static_cast<double>(segs));
    const std::size_t k = std::min(static_cast<std::size_t>(tc), segs - 1);
    const double u = tc - static_cast<double>(k);
    Point x(way[k].size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (1.0 - u) * way[k][i] + u * way[k + 1][i];
    return m.evaluate(x);
  };
  return {BaseCurve{rho, static_cast<double>(segs)}, segs};
}

inline int cmd_holonomy(const RunConfig& c, std::ostream& out) {
  if (c.loop.empty()) fail(kConfigError, "holonomy needs --loop");
  if (c.steps < 1) fail(kConfigError, "--steps must be positive");
  const ModelHandle mh = make_model(c);
  auto [curve, segs] = parse_loop(c.loop, mh.family);
  HolonomyOptions opts;
  // a step count divisible by the segment count keeps slice midpoints off the corners
  opts.steps = (static_cast<std::size_t>(c.steps) + segs - 1) / segs * segs;
  opts.estimate_convergence = true;
  HolonomyResult r = [&] {
    try {
      return holonomy(curve, std::nullopt, opts);
    } catch (const Error& e) {
      numerical("holonomy", e);
    }
  }();
  Output o(c.output, out);
  std::ostream& os = o.stream();
  if (c.format == "csv") {
    write_csv_header(os, {"steps", "mean_holonomy_re", "mean_holonomy_im", "uhlmann_phase", "convergence_estimate", "unitarity_residual"});
    write_csv_row(os, {static_cast<double>(r.steps), r.mean_holonomy.real(), r.mean_holonomy.imag(), r.uhlmann_phase, r.convergence_estimate,
                       unitarity_residual(r.unitary)});
    return kOk;
  }
  json j = holonomy_to_json(r);
  j["loop"] = c.loop;
  j["unitarity_residual"] = unitarity_residual(r.unitary);
  os << j.dump(1) << "\n";
  return kOk;
}

inline int cmd_limit_sweep(const RunConfig& c, std::ostream& out) {
  if (c.model != "thermal") fail(kConfigError, "limit-sweep needs --model thermal");
  const ModelHandle mh = make_model(c);
  const std::vector<double> betas = parse_list(c.betas);
  if (betas.empty()) fail(kConfigError, "--betas is empty");
  for (double b : betas)
    if (!(b > 0.0)) fail(kModelError, detail::cat("model error: InvalidArgument: thermal model requires beta > 0, got ", b));
  const Point x = c.point.empty() ? Point{kPi / 3, 0.4} : parse_list(c.point);
  if (x.size() != mh.family.n_params()) fail(kConfigError, "--point has the wrong number of coordinates");
  LimitSweep s = [&] {
    try {
      return thermal_limit_sweep(*mh.thermal, x, betas);
    } catch (const Error& e) {
      numerical("limit sweep", e);
    }
  }();
  if (s.truncated_at)
    fail(kNumericalError, detail::cat("limit sweep: RankDeficient at beta = ", *s.truncated_at, ": ", s.truncation_reason));
  Output o(c.output, out);
  std::ostream& os = o.stream();
  if (c.format == "json") {
    json j{{"point", x}, {"pure", qgt_to_json(s.pure)}, {"monotone_tail", s.monotone_tail}, {"rows", json::array()}};
    for (const auto& r : s.rows) j["rows"].push_back({{"beta", r.beta}, {"tensor", qgt_to_json(r.q)}, {"deviation", r.deviation}});
    os << j.dump(1) << "\n";
    return kOk;
  }
  std::vector<std::string> header{"beta"};
  for (auto& col : tensor_columns(mh.family.labels())) header.push_back(col);
  header.insert(header.end(), {"deviation", "monotone_tail"});
  write_csv_header(os, header);
  for (const auto& r : s.rows) {
    std::vector<double> row{r.beta};
    append_tensor(row, r.q);
    row.push_back(r.deviation);
    row.push_back(s.monotone_tail ? 1.0 : 0.0);
    write_csv_row(os, row);
  }
  return kOk;
}

inline int cmd_validate(const RunConfig& c, std::ostream& out) {
  const std::string path = !c.path.empty() ? c.path : c.model;
  if (path.empty() || path == "bloch" || path == "thermal") fail(kConfigError, "validate needs a file path");
  std::vector<std::string> v;
  try {
    v = validate_document(read_json_file(path));
  } catch (const Error& e) {
    v.push_back(e.what());
  }
  Output o(c.output, out);
  for (const auto& line : v) o.stream() << path << ": " << line << "\n";
  if (v.empty()) o.stream() << path << ": ok\n";
  return v.empty() ? kOk : kViolations;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Fill unset fields from a JSON config mirroring RunConfig.
inline void apply_config_file(RunConfig& c, const json& j, const std::function<bool(const char*)>& set_by_flag) {
  auto str = [&](const char* key, std::string& dst) {
    if (j.contains(key) && !set_by_flag(key)) dst = j[key].get<std::string>();
  };
  try {
    if (j.contains("command") && c.command.empty()) c.command = j["command"].get<std::string>();
    str("model", c.model);
    str("scheme", c.scheme);
    str("output", c.output);
    str("format", c.format);
    str("from", c.from);
    str("to", c.to);
    str("loop", c.loop);
    str("summary", c.summary);
    str("point", c.point);
    str("route", c.route);
    if (j.contains("betas") && !set_by_flag("betas")) {
      const json& b = j["betas"];
      if (b.is_string()) {
        c.betas = b.get<std::string>();
      } else {
        std::string s;
        for (const auto& v : b) s += (s.empty() ? "" : ",") + format_double(v.get<double>());
        c.betas = s;
      }
    }
    if (j.contains("steps") && !set_by_flag("steps")) c.steps = j["steps"].get<long>();
    if (j.contains("samples") && !set_by_flag("samples")) c.samples = j["samples"].get<long>();
    if (j.contains("seed") && !set_by_flag("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("pole_margin") && !set_by_flag("pole-margin")) c.pole_margin = j["pole_margin"].get<double>();
    if (j.contains("model_args"))
      for (const auto& [k, v] : j["model_args"].items())
        if (!c.model_args.count(k)) c.model_args[k] = v.is_string() ? v.get<std::string>() : format_double(v.get<double>());
    if (j.contains("grid") && !set_by_flag("grid"))
      for (const auto& g : j["grid"])
        c.grid.push_back(GridSpec{g.at("name").get<std::string>(), g.at("min").get<double>(), g.at("max").get<double>(), g.at("count").get<long>()});
  } catch (const json::exception& e) {
    fail(kConfigError, std::string("config file: ") + e.what());
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mixed-state quantum geometric tensor toolkit"};
  RunConfig c;
  std::vector<std::string> sets, grids;
  std::string config_path;
  app.add_option("command", c.command, "field | geodesic | holonomy | limit-sweep | validate");
  app.add_option("path", c.path, "file to check (validate)");
  app.add_option("--model", c.model, "bloch, thermal, or a grid-model JSON file");
  app.add_option("--set", sets, "model argument key=value (repeatable)");
  app.add_option("--grid", grids, "name:min:max:count (repeatable)");
  app.add_option("--scheme", c.scheme, "analytic | central:h");
  app.add_option("--route", c.route, "eigen | covariant (field)");
  app.add_option("--steps", c.steps, "holonomy integration steps");
  app.add_option("--output", c.output, "output path (default stdout)");
  app.add_option("--format", c.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", c.seed, "seed for randomized inputs");
  app.add_option("--pole-margin", c.pole_margin, "minimum distance of polar grids from the poles");
  app.add_option("--threads", c.threads, "worker threads (0 = hardware)");
  app.add_option("--config", config_path, "JSON config; flags override it");
  app.add_option("--from", c.from, "geodesic start: bloch:x,y,z | point:a,b | random | matrix file");
  app.add_option("--to", c.to, "geodesic end");
  app.add_option("--samples", c.samples, "geodesic trace samples");
  app.add_option("--summary", c.summary, "geodesic summary JSON path (default OUTPUT.summary.json)");
  app.add_option("--loop", c.loop, "latitude:theta or waypoints a,b;c,d;...");
  app.add_option("--betas", c.betas, "comma-separated inverse temperatures");
  app.add_option("--point", c.point, "chart point for limit-sweep");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }
  try {
    auto set_by_flag = [&app](const char* name) { return app.count(std::string("--") + name) > 0; };
    for (const auto& g : grids) c.grid.push_back(parse_grid_spec(g));
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) fail(kConfigError, "--set expects key=value, got '" + s + "'");
      c.model_args[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
    }
    if (!config_path.empty()) {
      try {
        apply_config_file(c, read_json_file(config_path), set_by_flag);
      } catch (const Error& e) {
        fail(kConfigError, e.what());
      }
    }
    if (c.command == "field") return cmd_field(c, out);
    if (c.command == "geodesic") return cmd_geodesic(c, out);
    if (c.command == "holonomy") return cmd_holonomy(c, out);
    if (c.command == "limit-sweep") return cmd_limit_sweep(c, out);
    if (c.command == "validate") return cmd_validate(c, out);
    fail(kConfigError, c.command.empty() ? "no command given" : "unknown command '" + c.command + "'");
  } catch (const Failure& f) {
    err << "msqgt: " << f.message << "\n";
    return f.code;
  } catch (const Error& e) {
    err << "msqgt: " << e.what() << "\n";
    return kNumericalError;
  }
}

}  // namespace msqgt::cli
