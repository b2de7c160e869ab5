// SPDX-License-Identifier: Apache-2.0
#include "dbm/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <regex>
#include <sstream>

#include "dbm/errors.hpp"
#include "dbm/io.hpp"

namespace dbm {

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvariantFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string format = "json";
  int quadrature_order = QuadratureRule::kDefaultPanelPoints;
  double tol = 1e-10;
};

struct Context {
  Options options;
  Json config;
  ModelParams params{{}, {1.0}};
  std::unique_ptr<QuadratureRule> rule;
  SolverConfig solver;
};

const Json* section(const Json& config, const char* name) {
  if (!config.contains(name)) return nullptr;
  const Json& s = config.at(name);
  if (!s.is_object()) throw UsageError(std::string("config: \"") + name + "\" must be an object");
  return &s;
}

template <class T>
T value_or(const Json* s, const char* key, T fallback) {
  if (!s || !s->contains(key)) return fallback;
  try {
    return s->at(key).get<T>();
  } catch (const Json::exception&) {
    throw UsageError(std::string("config: bad value for \"") + key + "\"");
  }
}

// ---------------------------------------------------------------- scan grid

struct Axis {
  enum class Target { beta, lambda, field_v, field_h0 };
  std::string path;
  Target target = Target::beta;
  std::size_t index = 0;
  double min = 0.0;
  double max = 0.0;
  int steps = 0;

  double at(int k) const { return min + (max - min) * k / (steps - 1); }
};

Axis parse_axis(const Json& doc, const ModelParams& base) {
  if (!doc.is_object()) throw UsageError("scan: an axis must be an object");
  Axis axis;
  axis.path = value_or<std::string>(&doc, "path", "");
  axis.min = value_or<double>(&doc, "min", 0.0);
  axis.max = value_or<double>(&doc, "max", 0.0);
  axis.steps = value_or<int>(&doc, "steps", 0);
  if (axis.steps < 2) throw UsageError("scan: steps must be >= 2 on axis " + axis.path);
  if (!std::isfinite(axis.min) || !std::isfinite(axis.max) || !(axis.min < axis.max))
    throw UsageError("scan: need finite min < max on axis " + axis.path);

  static const std::regex vector_path(R"((beta|lambda)\[(\d+)\])");
  static const std::regex field_path(R"(fields\[(\d+)\]\.(v|h0))");
  std::smatch m;
  const std::size_t K = base.lambda().size();
  if (std::regex_match(axis.path, m, vector_path)) {
    axis.target = m[1] == "beta" ? Axis::Target::beta : Axis::Target::lambda;
    axis.index = std::stoul(m[2]);
    if (axis.index >= (axis.target == Axis::Target::beta ? K - 1 : K))
      throw UsageError("scan: index out of range in " + axis.path);
  } else if (std::regex_match(axis.path, m, field_path)) {
    axis.target = m[2] == "v" ? Axis::Target::field_v : Axis::Target::field_h0;
    axis.index = std::stoul(m[1]);
    if (axis.index >= K) throw UsageError("scan: index out of range in " + axis.path);
  } else {
    throw UsageError("scan: unknown parameter path \"" + axis.path + "\"");
  }
  if (axis.target == Axis::Target::lambda && (axis.min < 0.0 || axis.max > 1.0))
    throw UsageError("scan: lambda axis must stay within [0, 1]");
  return axis;
}

// Sets lambda_i = x and rescales the other entries proportionally so the
// vector stays on the simplex; uniform when the others carry no mass.
std::vector<double> renormalized_lambda(std::vector<double> lambda, std::size_t i, double x) {
  const std::size_t K = lambda.size();
  if (K == 1) {
    lambda[0] = 1.0;
    return lambda;
  }
  double rest = 0.0;
  for (std::size_t j = 0; j < K; ++j) rest += j == i ? 0.0 : lambda[j];
  for (std::size_t j = 0; j < K; ++j) {
    if (j == i) continue;
    lambda[j] = rest > 0.0 ? lambda[j] * (1.0 - x) / rest : (1.0 - x) / static_cast<double>(K - 1);
  }
  lambda[i] = x;
  return lambda;
}

ModelParams apply_axis(const ModelParams& base, const Axis& axis, double x) {
  switch (axis.target) {
    case Axis::Target::beta: {
      auto beta = base.beta();
      beta[axis.index] = x;
      return base.with_beta(std::move(beta));
    }
    case Axis::Target::lambda:
      return base.with_lambda(renormalized_lambda(base.lambda(), axis.index, x));
    case Axis::Target::field_v:
    case Axis::Target::field_h0: {
      auto fields = base.fields();
      if (fields.empty()) fields.assign(base.lambda().size(), FieldSpec::zero());
      fields[axis.index] = axis.target == Axis::Target::field_v ? FieldSpec::gaussian(x) : FieldSpec::point_mass(x);
      return base.with_fields(std::move(fields));
    }
  }
  return base;
}

struct GridPoint {
  std::vector<double> coords;
  ModelParams params;
};

struct Grid {
  ModelParams base{{}, {1.0}};
  std::vector<Axis> axes;
  std::vector<GridPoint> points;  // axis 1 outermost

  ModelParams params_at(const std::vector<double>& coords) const {
    ModelParams p = base;
    for (std::size_t a = 0; a < axes.size(); ++a) p = apply_axis(p, axes[a], coords[a]);
    return p;
  }
};

Grid build_grid(const Context& ctx) {
  Grid g;
  g.base = ctx.params;
  const Json* scan = section(ctx.config, "scan");
  if (!scan) {
    g.points.push_back({{}, ctx.params});
    return g;
  }
  if (!scan->contains("axis1")) throw UsageError("scan: axis1 is required");
  g.axes.push_back(parse_axis(scan->at("axis1"), ctx.params));
  if (scan->contains("axis2")) g.axes.push_back(parse_axis(scan->at("axis2"), ctx.params));
  if (g.axes.size() == 2 && g.axes[0].path == g.axes[1].path) throw UsageError("scan: axes must differ");

  const int n1 = g.axes[0].steps;
  const int n2 = g.axes.size() == 2 ? g.axes[1].steps : 1;
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      std::vector<double> coords{g.axes[0].at(i)};
      if (g.axes.size() == 2) coords.push_back(g.axes[1].at(j));
      g.points.push_back({coords, g.params_at(coords)});
    }
  }
  return g;
}

Json axis_columns(const Grid& grid, const GridPoint& pt) {
  Json row = Json::object();
  for (std::size_t a = 0; a < grid.axes.size(); ++a) row[grid.axes[a].path] = pt.coords[a];
  return row;
}

template <class Eval>
std::vector<Json> evaluate_grid(const Grid& grid, Eval&& eval) {
  std::vector<Json> rows(grid.points.size());
  parallel_for(grid.points.size(), [&](std::size_t i) {
    Json row = axis_columns(grid, grid.points[i]);
    Json body = eval(grid.points[i].params);
    for (auto it = body.begin(); it != body.end(); ++it) row[it.key()] = it.value();
    rows[i] = std::move(row);
  });
  return rows;
}

// Changes of side along axis 1, one pass per value of axis 2. A run of
// boundary points between two sides is reported at its midpoint; without
// one the crossing is located by bisection on the verdict.
Json region_crossings(const Grid& grid, const std::vector<RegionState>& states) {
  Json out = Json::array();
  if (grid.axes.empty()) return out;
  const Axis& axis = grid.axes[0];
  const int n1 = axis.steps;
  const int n2 = grid.axes.size() == 2 ? grid.axes[1].steps : 1;
  for (int j = 0; j < n2; ++j) {
    const auto state = [&](int i) { return states[static_cast<std::size_t>(i * n2 + j)]; };
    const auto params_at = [&](double x) {
      std::vector<double> coords{x};
      if (n2 > 1) coords.push_back(grid.axes[1].at(j));
      return grid.params_at(coords);
    };
    const auto report = [&](double at, int lo, int hi, RegionState from, RegionState to) {
      Json c;
      c["axis"] = axis.path;
      if (n2 > 1) c[grid.axes[1].path] = grid.axes[1].at(j);
      c["at"] = at;
      c["lo"] = axis.at(lo);
      c["hi"] = axis.at(hi);
      c["from"] = to_string(from);
      c["to"] = to_string(to);
      out.push_back(c);
    };
    int last = -1;  // last grid index off the boundary
    for (int i = 0; i < n1; ++i) {
      const RegionState s = state(i);
      if (s == RegionState::boundary) {
        if (i == n1 - 1 && last >= 0) {
          const int first = last + 1;
          report(0.5 * (axis.at(first) + axis.at(i)), last, i, state(last), s);
        }
        continue;
      }
      if (last < 0) {
        if (i > 0) report(0.5 * (axis.at(0) + axis.at(i - 1)), 0, i, RegionState::boundary, s);
      } else if (state(last) != s) {
        double at = 0.0;
        if (last + 1 < i) {
          at = 0.5 * (axis.at(last + 1) + axis.at(i - 1));
        } else {
          double lo = axis.at(last);
          double hi = axis.at(i);
          for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
            const double mid = 0.5 * (lo + hi);
            const RegionState m = classify_annealed(params_at(mid)).in_region;
            if (m == RegionState::boundary) {
              lo = hi = mid;
              break;
            }
            (m == state(last) ? lo : hi) = mid;
          }
          at = 0.5 * (lo + hi);
        }
        report(at, last, i, state(last), s);
      }
      last = i;
    }
  }
  return out;
}

// ---------------------------------------------------------------- solvers

enum class MethodChoice { automatic, nested, fixed_point };

MethodChoice method_choice(const Context& ctx) {
  const auto m = value_or<std::string>(section(ctx.config, "solver"), "method", "auto");
  if (m == "auto") return MethodChoice::automatic;
  if (m == "nested") return MethodChoice::nested;
  if (m == "fixed_point") return MethodChoice::fixed_point;
  throw UsageError("config: solver.method must be auto, nested or fixed_point");
}

bool nested_applicable(const ModelParams& p) {
  return p.positive_gaussian_fields() && p.positive_lambda() && p.positive_beta();
}

RsSolution fixed_point(const Context& ctx, const ModelParams& p) {
  const Json* s = section(ctx.config, "solver");
  std::vector<double> q0(p.lambda().size(), value_or<double>(s, "q0", 0.5));
  return solve_fixed_point(p, q0, ctx.solver);
}

RsSolution solve_rs(const Context& ctx, const ModelParams& p) {
  switch (method_choice(ctx)) {
    case MethodChoice::nested:
      if (!nested_applicable(p))
        throw UsageError("rs: method nested needs gaussian_centered fields with v > 0 and lambda, beta > 0");
      return solve_nested(p, ctx.solver);
    case MethodChoice::fixed_point:
      return fixed_point(ctx, p);
    case MethodChoice::automatic:
      break;
  }
  return nested_applicable(p) ? solve_nested(p, ctx.solver) : fixed_point(ctx, p);
}

double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

void require_bound_fields(const ModelParams& p) {
  for (const auto& f : p.fields()) {
    if (f.kind() != FieldSpec::Kind::zero && f.kind() != FieldSpec::Kind::gaussian_centered)
      throw UsageError("bound: fields must be zero or gaussian_centered");
  }
}

BoundMaximum bound_at(const Context& ctx, const ModelParams& p) {
  const int starts = value_or<int>(section(ctx.config, "bound"), "random_starts", 8);
  if (starts < 0) throw UsageError("config: bound.random_starts must be >= 0");
  return maximize_bound(p, ctx.solver, ctx.options.seed, starts);
}

// ---------------------------------------------------------------- commands

struct Report {
  Json json;
  std::vector<Json> rows;            // CSV rows
  std::optional<TrendReport> trend;  // verify writes the trend table as CSV
  int exit_code = kExitOk;
};

Report cmd_region(const Context& ctx) {
  const Grid grid = build_grid(ctx);
  std::vector<RegionState> states(grid.points.size());
  std::vector<Json> rows(grid.points.size());
  parallel_for(grid.points.size(), [&](std::size_t i) {
    const RegionVerdict v = classify_annealed(grid.points[i].params);
    states[i] = v.in_region;
    Json row = axis_columns(grid, grid.points[i]);
    const Json body = to_json(v);
    for (auto it = body.begin(); it != body.end(); ++it) row[it.key()] = it.value();
    rows[i] = std::move(row);
  });
  Report r;
  r.json["command"] = "region";
  r.json["rows"] = rows;
  r.json["crossings"] = region_crossings(grid, states);
  r.rows = std::move(rows);
  return r;
}

Report cmd_poly(const Context& ctx) {
  const ModelParams& p = ctx.params;
  const int K = p.layers();
  const ActivityVector t = activities(p);
  const Json* s = section(ctx.config, "poly");
  const double rho = value_or<double>(s, "rho", 1.0);
  const auto xs = value_or<std::vector<double>>(s, "x", {});

  Json j;
  j["K"] = K;
  j["activities"] = std::vector<double>(t.values().begin(), t.values().end());
  j["coefficients"] = coefficients(t, K);
  const ZeroSet z = zeros(t, K);
  j["zeros"] = z.zeros;
  j["largest_zero"] = z.largest();
  const auto il = interlacing_report(t, K, 1e-10);
  j["interlacing"] = Json{{"weak", il.weak}, {"strict", il.strict}, {"min_gap", il.min_gap}};
  const auto loc = localize_zeros(t, K, rho);
  j["localization"] = Json{{"rho", rho},
                           {"by_zeros", to_string(loc.by_zeros)},
                           {"by_chain", to_string(loc.by_chain)},
                           {"joint", to_string(loc.joint)}};
  Json values = Json::array();
  for (double x : xs) values.push_back(Json{{"x", x}, {"D", eval_sequence(x, t, K).values}});
  j["values"] = values;

  Report r;
  r.json = Json{{"command", "poly"}};
  for (auto it = j.begin(); it != j.end(); ++it) r.json[it.key()] = it.value();
  r.rows.push_back(j);
  return r;
}

Report cmd_rs(const Context& ctx) {
  const Grid grid = build_grid(ctx);
  const bool compare = value_or<bool>(section(ctx.config, "solver"), "compare", false);
  if (method_choice(ctx) == MethodChoice::nested) {
    for (const auto& pt : grid.points) {
      if (!nested_applicable(pt.params))
        throw UsageError("rs: method nested needs gaussian_centered fields with v > 0 and lambda, beta > 0");
    }
  }
  auto rows = evaluate_grid(grid, [&](const ModelParams& p) {
    const RsSolution s = solve_rs(ctx, p);
    Json j = to_json(s);
    if (compare) {
      // Damped iteration from the configured start against the nested solution.
      if (!nested_applicable(p)) throw UsageError("rs: compare needs the nested method to apply");
      const RsSolution other = s.method == RsMethod::nested ? fixed_point(ctx, p) : solve_nested(p, ctx.solver);
      j["agreement"] = sup_distance(s.q, other.q);
    }
    return j;
  });
  Report r;
  r.json["command"] = "rs";
  r.json["rows"] = rows;
  r.rows = std::move(rows);
  return r;
}

Report cmd_bound(const Context& ctx, std::ostream& err) {
  const Grid grid = build_grid(ctx);
  for (const auto& pt : grid.points) require_bound_fields(pt.params);
  auto rows = evaluate_grid(grid, [&](const ModelParams& p) {
    const BoundMaximum b = bound_at(ctx, p);
    Json j;
    j["status"] = b.certified ? "certified" : "UNCERTIFIED";
    const Json body = to_json(b);
    for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
    return j;
  });
  const auto uncertified = std::count_if(rows.begin(), rows.end(), [](const Json& j) { return j["status"] == "UNCERTIFIED"; });
  if (uncertified > 0) {
    err << "warning: " << uncertified << " of " << rows.size()
        << " bound rows are UNCERTIFIED (a layer has no RS certificate); their values are heuristic\n";
  }
  Report r;
  r.json["command"] = "bound";
  r.json["uncertified"] = uncertified;
  r.json["rows"] = rows;
  r.rows = std::move(rows);
  return r;
}

Report cmd_scan(const Context& ctx) {
  const Grid grid = build_grid(ctx);
  std::vector<std::string> outputs{"region", "rho", "rs_pressure", "bound", "certificates"};
  if (const Json* s = section(ctx.config, "scan"); s && s->contains("outputs")) {
    outputs = value_or<std::vector<std::string>>(s, "outputs", {});
    for (const auto& o : outputs) {
      if (o != "region" && o != "rho" && o != "rs_pressure" && o != "bound" && o != "certificates")
        throw UsageError("scan: unknown output \"" + o + "\"");
    }
  }
  const auto wants = [&](const char* o) { return std::find(outputs.begin(), outputs.end(), o) != outputs.end(); };
  if (wants("bound")) {
    for (const auto& pt : grid.points) require_bound_fields(pt.params);
  }

  std::vector<RegionState> states(grid.points.size());
  std::vector<Json> rows(grid.points.size());
  parallel_for(grid.points.size(), [&](std::size_t i) {
    const ModelParams& p = grid.points[i].params;
    Json row = axis_columns(grid, grid.points[i]);
    const RegionVerdict v = classify_annealed(p);
    states[i] = v.in_region;
    if (wants("region")) row["region"] = to_string(v.in_region);
    if (wants("rho")) row["rho"] = v.rho;
    if (wants("rs_pressure") || wants("certificates")) {
      std::optional<RsSolution> s;
      try {
        s = solve_rs(ctx, p);
      } catch (const ConvergenceError&) {
      }
      if (wants("rs_pressure")) {
        row["rs_pressure"] = s ? Json(s->pressure) : Json(nullptr);
        row["rs_method"] = s ? Json(to_string(s->method)) : Json("not_converged");
      }
      if (wants("certificates")) {
        const auto at = s ? s->certificates.at_ok() : std::nullopt;
        row["talagrand_ok"] = s ? Json(s->certificates.talagrand_ok()) : Json(nullptr);
        row["almeida_thouless_ok"] = at ? Json(*at) : Json(nullptr);
        const auto& st = s ? s->certificates.stable_at_zero : std::nullopt;
        row["stable_at_zero"] = st ? Json(*st) : Json(nullptr);
      }
    }
    if (wants("bound")) {
      const BoundMaximum b = bound_at(ctx, p);
      row["bound"] = b.value;
      row["bound_status"] = b.certified ? "certified" : "UNCERTIFIED";
    }
    rows[i] = std::move(row);
  });
  Report r;
  r.json["command"] = "scan";
  r.json["outputs"] = outputs;
  r.json["rows"] = rows;
  r.json["crossings"] = region_crossings(grid, states);
  r.rows = std::move(rows);
  return r;
}

std::vector<LayerAssignment> trend_sizes(const Json* v, const ModelParams& p) {
  std::vector<LayerAssignment> out;
  const Json sizes = v && v->contains("sizes") ? v->at("sizes") : Json::array({12, 18, 24});
  if (!sizes.is_array() || sizes.empty()) throw UsageError("verify: sizes must be a non-empty array");
  for (const auto& s : sizes) {
    if (s.is_number_integer()) {
      out.push_back(LayerAssignment::from_lambda(p.lambda(), s.get<int>()));
    } else if (s.is_array()) {
      out.push_back(LayerAssignment{s.get<std::vector<int>>()});
    } else {
      throw UsageError("verify: each size is a total N or a list of layer sizes");
    }
  }
  return out;
}

Report cmd_verify(const Context& ctx) {
  const ModelParams& p = ctx.params;
  const Json* v = section(ctx.config, "verify");
  const int n_disorder = value_or<int>(v, "n_disorder", 200);
  const Json* mc_section = v && v->contains("mc") ? &v->at("mc") : nullptr;
  McConfig mc;
  mc.sweeps = value_or<int>(mc_section, "sweeps", mc.sweeps);
  mc.replicas = value_or<int>(mc_section, "replicas", mc.replicas);
  const Json* cov_section = v && v->contains("covariance") ? &v->at("covariance") : nullptr;
  const int cov_n = value_or<int>(cov_section, "N", 16);
  const int cov_disorder = value_or<int>(cov_section, "n_disorder", 5000);
  const int cov_pairs = value_or<int>(cov_section, "pairs", 10);

  Report r;
  r.json["command"] = "verify";
  Json checks;

  // Throws ConsistencyError when the three membership tests disagree.
  RegionVerdict verdict;
  try {
    verdict = classify_annealed(p);
    checks["criteria_equivalence"] = true;
  } catch (const ConsistencyError& e) {
    throw InvariantFailure(std::string("criteria-equivalence failed: ") + e.what());
  }
  r.json["region"] = to_json(verdict);

  bool jensen = true;
  if (verdict.in_region == RegionState::inside) {
    const auto sizes = trend_sizes(v, p);
    TrendReport trend = annealed_trend(p, sizes, n_disorder, ctx.options.seed, mc);
    jensen = trend.jensen_ok;
    checks["jensen"] = trend.jensen_ok;
    checks["gap_decreasing"] = trend.gap_decreasing;
    r.json["trend"] = to_json(trend);
    r.trend = std::move(trend);
  } else {
    checks["jensen"] = nullptr;
    checks["gap_decreasing"] = nullptr;
    r.json["trend"] = Json{{"skipped", "parameters are not strictly inside the annealed region"}};
    r.trend = TrendReport{};
  }

  const LayerAssignment cov_assignment = LayerAssignment::from_lambda(p.lambda(), cov_n);
  const CovarianceReport cov = covariance_check(cov_assignment, p, cov_disorder, ctx.options.seed, cov_pairs);
  checks["covariance_within_5_se"] = cov.max_standard_errors < 5.0;
  r.json["covariance"] = to_json(cov);
  r.json["checks"] = checks;
  r.exit_code = jensen ? kExitOk : kExitInvariant;
  return r;
}

// ---------------------------------------------------------------- driver

Context load_context(const Options& options) {
  Context ctx;
  ctx.options = options;
  std::ifstream in(options.config_path);
  if (!in) throw UsageError("cannot open config " + options.config_path);
  try {
    ctx.config = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw UsageError(std::string("malformed config: ") + e.what());
  }
  try {
    ctx.params = model_from_json(ctx.config);
  } catch (const Json::exception& e) {
    throw UsageError(std::string("malformed config: ") + e.what());
  }
  if (options.quadrature_order < 1) throw UsageError("--quadrature-order must be >= 1");
  if (!(options.tol > 0.0)) throw UsageError("--tol must be > 0");
  if (options.quadrature_order != QuadratureRule::kDefaultPanelPoints)
    ctx.rule = std::make_unique<QuadratureRule>(QuadratureRule::composite(options.quadrature_order));
  ctx.solver.rule = ctx.rule.get();
  ctx.solver.tol = options.tol;
  const Json* s = section(ctx.config, "solver");
  ctx.solver.damping = value_or<double>(s, "damping", ctx.solver.damping);
  ctx.solver.max_iter = value_or<int>(s, "max_iter", ctx.solver.max_iter);
  return ctx;
}

Report dispatch(const Context& ctx, std::ostream& err) {
  const std::string& c = ctx.options.command;
  if (c == "region") return cmd_region(ctx);
  if (c == "poly") return cmd_poly(ctx);
  if (c == "rs") return cmd_rs(ctx);
  if (c == "bound") return cmd_bound(ctx, err);
  if (c == "verify") return cmd_verify(ctx);
  return cmd_scan(ctx);
}

std::string render(const Report& r, const std::string& format) {
  if (format == "json") return dump_json(r.json) + "\n";
  std::ostringstream out;
  if (r.trend) {
    write_trend_csv(*r.trend, out);
  } else {
    write_csv(r.rows, out);
  }
  return out.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Deep Boltzmann machine: annealed region, RS solutions, bounds, finite-volume checks", "dbm");
  app.fallthrough();
  app.require_subcommand(1, 1);
  Options options;
  app.add_option("--config", options.config_path, "JSON config: model parameters plus optional sections")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--seed", options.seed, "master seed");
  app.add_option("--out", options.out_path, "output file (default stdout)");
  app.add_option("--format", options.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--quadrature-order", options.quadrature_order, "Gauss-Legendre points per panel");
  app.add_option("--tol", options.tol, "solver tolerance");
  for (const char* name : {"region", "poly", "rs", "bound", "verify", "scan"}) {
    app.add_subcommand(name)->callback([&options, name] { options.command = name; });
  }
  app.get_subcommand("region")->description("annealed-region verdicts, per scan point");
  app.get_subcommand("poly")->description("chain polynomial: coefficients, zeros, interlacing");
  app.get_subcommand("rs")->description("replica-symmetric solution with certificates");
  app.get_subcommand("bound")->description("maximised variational lower bound");
  app.get_subcommand("verify")->description("finite-volume annealed trend and covariance checks");
  app.get_subcommand("scan")->description("phase-diagram scan with selectable outputs");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const Context ctx = load_context(options);
    const Report report = dispatch(ctx, err);
    const std::string text = render(report, options.format);
    if (options.out_path.empty()) {
      out << text;
    } else {
      std::ofstream file(options.out_path, std::ios::binary);
      if (!file) throw UsageError("cannot write " + options.out_path);
      file << text;
    }
    if (report.exit_code != kExitOk) err << "error: a hard invariant failed (see checks)\n";
    return report.exit_code;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Json::exception& e) {
    err << "error: malformed config: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvariant;
  }
}

}  // namespace dbm
