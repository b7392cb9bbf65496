// io.hpp - JSON/CSV serialization and the lattice ("grid") model file format.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "msqgt/models.hpp"
#include "msqgt/qgt.hpp"
#include "msqgt/transport.hpp"

namespace msqgt {

using json = nlohmann::json;

/// Shortest text that reads back to the same double ("%.17g").
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json real_rows(const RMat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline json matrix_to_json(const Mat& m) {
  return json{{"dim", m.rows()}, {"re", real_rows(m.real())}, {"im", real_rows(m.imag())}};
}

namespace detail {
inline RMat rows_from_json(const json& j, Eigen::Index n, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n)
    throw Error(ErrorKind::SchemaError, detail::cat(what, " must be an array of ", n, " rows"));
  RMat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw Error(ErrorKind::SchemaError, detail::cat(what, " row ", i, " must have ", n, " entries"));
    for (Eigen::Index k = 0; k < n; ++k) {
      const json& v = row[static_cast<std::size_t>(k)];
      if (!v.is_number()) throw Error(ErrorKind::SchemaError, detail::cat(what, "[", i, "][", k, "] is not a number"));
      m(i, k) = v.get<double>();
    }
  }
  return m;
}

inline Mat complex_from_json(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("re")) throw Error(ErrorKind::SchemaError, what + " needs an \"re\" array");
  const Eigen::Index n = static_cast<Eigen::Index>(j["re"].is_array() ? j["re"].size() : 0);
  if (n == 0) throw Error(ErrorKind::SchemaError, what + ": \"re\" must be a non-empty array");
  if (j.contains("dim") && (!j["dim"].is_number_integer() || j["dim"].get<Eigen::Index>() != n))
    throw Error(ErrorKind::SchemaError, detail::cat(what, ": \"dim\" does not match ", n, " rows"));
  const RMat re = rows_from_json(j["re"], n, what + ".re");
  const RMat im = j.contains("im") ? rows_from_json(j["im"], n, what + ".im") : RMat::Zero(n, n);
  Mat m(n, n);
  m.real() = re;
  m.imag() = im;
  return m;
}
}  // namespace detail

/// Inverse of matrix_to_json; "im" may be omitted for real matrices.
inline Mat matrix_from_json(const json& j) { return detail::complex_from_json(j, "matrix"); }

inline json qgt_to_json(const QGTensor& q) {
  return json{{"chart", q.chart}, {"re", real_rows(q.entries.real())}, {"im", real_rows(q.entries.imag())}};
}

inline json holonomy_to_json(const HolonomyResult& r) {
  json j{{"unitary_re", real_rows(r.unitary.real())},
         {"unitary_im", real_rows(r.unitary.imag())},
         {"mean_holonomy", {r.mean_holonomy.real(), r.mean_holonomy.imag()}},
         {"uhlmann_phase", r.uhlmann_phase},
         {"steps", r.steps}};
  // NaN is not representable in JSON
  j["convergence_estimate"] = std::isnan(r.convergence_estimate) ? json(nullptr) : json(r.convergence_estimate);
  return j;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::SchemaError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::SchemaError, path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Grid models
//   {"params": [{"name": str, "grid": [ascending floats]}],
//    "nodes":  [{"index": [ints], "re": [[...]], "im": [[...]]}]}
// ---------------------------------------------------------------------------

inline constexpr double kTraceRenormBand = 1e-6;

/// Validate a lattice-node or interpolated matrix: Hermitian and PSD within
/// 1e-12; a trace within 1e-6 of one is renormalized, beyond that it is an
/// error. In strict mode any trace deviation above 1e-12 is an error.
inline DensityMatrix renormalized_density(const Mat& m, bool strict = false) {
  const double tr = m.trace().real();
  const double dev = std::abs(tr - 1.0);
  if (dev <= kConstructionTol || strict) return validate_density(m);
  if (dev > kTraceRenormBand) throw Error(ErrorKind::TraceNotOne, detail::cat("|Tr rho - 1| = ", dev, " beyond renormalization band"), dev);
  return validate_density(m / tr);
}

struct GridAxis {
  std::string name;
  std::vector<double> grid;
};

struct GridData {
  std::vector<GridAxis> axes;
  std::vector<Mat> nodes;  // row-major over axes, first axis slowest
  std::size_t dim = 0;

  std::size_t flat(const std::vector<std::size_t>& idx) const {
    std::size_t f = 0;
    for (std::size_t a = 0; a < axes.size(); ++a) f = f * axes[a].grid.size() + idx[a];
    return f;
  }
  std::vector<std::size_t> unflat(std::size_t f) const {
    std::vector<std::size_t> idx(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      idx[a] = f % axes[a].grid.size();
      f /= axes[a].grid.size();
    }
    return idx;
  }
};

/// Parse the schema without validating node densities.
inline GridData parse_grid(const json& j) {
  if (!j.is_object() || !j.contains("params") || !j.contains("nodes"))
    throw Error(ErrorKind::SchemaError, "grid model needs \"params\" and \"nodes\"");
  const json& ps = j["params"];
  if (!ps.is_array() || ps.empty()) throw Error(ErrorKind::SchemaError, "\"params\" must be a non-empty array");
  GridData g;
  std::size_t total = 1;
  for (const json& p : ps) {
    if (!p.is_object() || !p.contains("name") || !p["name"].is_string() || !p.contains("grid") || !p["grid"].is_array())
      throw Error(ErrorKind::SchemaError, "each param needs a string \"name\" and a \"grid\" array");
    GridAxis ax{p["name"].get<std::string>(), {}};
    for (const json& v : p["grid"]) {
      if (!v.is_number()) throw Error(ErrorKind::SchemaError, "grid of '" + ax.name + "' has a non-number");
      ax.grid.push_back(v.get<double>());
    }
    if (ax.grid.size() < 2) throw Error(ErrorKind::SchemaError, "grid of '" + ax.name + "' needs at least two points");
    for (std::size_t k = 1; k < ax.grid.size(); ++k)
      if (!(ax.grid[k] > ax.grid[k - 1])) throw Error(ErrorKind::SchemaError, "grid of '" + ax.name + "' is not strictly ascending");
    total *= ax.grid.size();
    g.axes.push_back(std::move(ax));
  }
  const json& ns = j["nodes"];
  if (!ns.is_array()) throw Error(ErrorKind::SchemaError, "\"nodes\" must be an array");
  if (ns.size() != total) throw Error(ErrorKind::SchemaError, detail::cat("expected ", total, " nodes, found ", ns.size()));
  g.nodes.resize(total);
  std::vector<bool> seen(total, false);
  for (const json& n : ns) {
    if (!n.is_object() || !n.contains("index") || !n["index"].is_array() || n["index"].size() != g.axes.size())
      throw Error(ErrorKind::SchemaError, detail::cat("each node needs an \"index\" of length ", g.axes.size()));
    std::vector<std::size_t> idx;
    for (std::size_t a = 0; a < g.axes.size(); ++a) {
      const json& v = n["index"][a];
      if (!v.is_number_integer() || v.get<long long>() < 0 || v.get<std::size_t>() >= g.axes[a].grid.size())
        throw Error(ErrorKind::SchemaError, detail::cat("node index out of range on axis '", g.axes[a].name, "'"));
      idx.push_back(v.get<std::size_t>());
    }
    const std::size_t f = g.flat(idx);
    if (seen[f]) throw Error(ErrorKind::SchemaError, detail::cat("duplicate node ", n["index"].dump()));
    seen[f] = true;
    g.nodes[f] = detail::complex_from_json(n, detail::cat("node ", n["index"].dump()));
    if (g.dim == 0) g.dim = static_cast<std::size_t>(g.nodes[f].rows());
    if (static_cast<std::size_t>(g.nodes[f].rows()) != g.dim)
      throw Error(ErrorKind::SchemaError, detail::cat("node ", n["index"].dump(), " has dimension ", g.nodes[f].rows(), ", expected ", g.dim));
  }
  return g;
}

inline std::string index_text(const std::vector<std::size_t>& idx) {
  std::string s = "[";
  for (std::size_t a = 0; a < idx.size(); ++a) s += (a ? "," : "") + std::to_string(idx[a]);
  return s + "]";
}

/// Multilinear interpolation of raw node entries at x (inside the lattice box).
inline Mat interpolate_grid(const GridData& g, const Point& x) {
  const std::size_t d = g.axes.size();
  std::vector<std::size_t> lo(d);
  std::vector<double> w(d);
  for (std::size_t a = 0; a < d; ++a) {
    const auto& gr = g.axes[a].grid;
    std::size_t k = 0;
    while (k + 2 < gr.size() && x[a] > gr[k + 1]) ++k;
    lo[a] = k;
    w[a] = std::clamp((x[a] - gr[k]) / (gr[k + 1] - gr[k]), 0.0, 1.0);
  }
  const auto n = static_cast<Eigen::Index>(g.dim);
  Mat acc = Mat::Zero(n, n);
  for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
    double weight = 1.0;
    std::vector<std::size_t> idx(d);
    for (std::size_t a = 0; a < d; ++a) {
      const bool up = (corner >> a) & 1U;
      idx[a] = lo[a] + (up ? 1 : 0);
      weight *= up ? w[a] : 1.0 - w[a];
    }
    if (weight != 0.0) acc += weight * g.nodes[g.flat(idx)];
  }
  return acc;
}

/// Load a grid model. Every node is validated (InvalidDensityAtNode names the
/// node and the violated invariant); derivatives come from central differences
/// at the smallest lattice spacing of each axis.
inline ModelFamily grid_model_from_json(const json& j, const std::string& name = "grid") {
  auto g = std::make_shared<GridData>(parse_grid(j));
  for (std::size_t f = 0; f < g->nodes.size(); ++f) {
    try {
      renormalized_density(g->nodes[f]);
    } catch (const Error& e) {
      throw Error(ErrorKind::InvalidDensityAtNode, "node " + index_text(g->unflat(f)) + ": " + e.what(), e.magnitude());
    }
  }
  ModelFamily m;
  m.name = name;
  m.dim = g->dim;
  for (const auto& ax : g->axes) {
    m.params.push_back(ParamSpec{ax.name, ax.grid.front(), ax.grid.back(), false, false});
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < ax.grid.size(); ++k) h = std::min(h, ax.grid[k] - ax.grid[k - 1]);
    m.lattice_spacing.push_back(h);
  }
  m.evaluate = [g, mm = m](const Point& x) {
    detail::check_in_domain(mm, x, {});
    return renormalized_density(interpolate_grid(*g, x));
  };
  return m;
}

inline ModelFamily load_grid_model(const std::string& path) { return grid_model_from_json(read_json_file(path), path); }

/// Sample a family on a lattice in the grid-model file format.
inline json export_grid_model(const ModelFamily& m, const std::vector<std::vector<double>>& grids) {
  if (grids.size() != m.n_params()) throw Error(ErrorKind::DimensionMismatch, "one grid per parameter required");
  json j;
  j["params"] = json::array();
  std::size_t total = 1;
  for (std::size_t a = 0; a < grids.size(); ++a) {
    j["params"].push_back({{"name", m.params[a].name}, {"grid", grids[a]}});
    total *= grids[a].size();
  }
  j["nodes"] = json::array();
  for (std::size_t f = 0; f < total; ++f) {
    std::vector<std::size_t> idx(grids.size());
    std::size_t rem = f;
    for (std::size_t a = grids.size(); a-- > 0;) {
      idx[a] = rem % grids[a].size();
      rem /= grids[a].size();
    }
    Point x(grids.size());
    for (std::size_t a = 0; a < grids.size(); ++a) x[a] = grids[a][idx[a]];
    const Mat rho = m.evaluate(x).matrix();
    j["nodes"].push_back({{"index", idx}, {"re", real_rows(rho.real())}, {"im", real_rows(rho.imag())}});
  }
  return j;
}

/// Strict validation of a matrix file ({"re", "im"}) or a grid-model file.
/// Returns one line per violation; empty means clean.
inline std::vector<std::string> validate_document(const json& j) {
  std::vector<std::string> out;
  auto check = [&out](const Mat& m, const std::string& where) {
    try {
      validate_density(m);
    } catch (const Error& e) {
      out.push_back(where + ": " + e.what());
    }
  };
  try {
    if (j.is_object() && j.contains("params")) {
      const GridData g = parse_grid(j);
      for (std::size_t f = 0; f < g.nodes.size(); ++f) check(g.nodes[f], "node " + index_text(g.unflat(f)));
    } else {
      check(matrix_from_json(j), "matrix");
    }
  } catch (const Error& e) {
    out.push_back(e.what());
  }
  return out;
}

}  // namespace msqgt
