// SPDX-License-Identifier: Apache-2.0
#include "dbm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "dbm/errors.hpp"

namespace dbm {

namespace {

const Json& member(const Json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) throw DomainError(std::string("config: missing key \"") + key + "\"");
  return doc.at(key);
}

double number(const Json& v, const char* what) {
  if (!v.is_number()) throw DomainError(std::string("config: ") + what + " must be a number");
  return v.get<double>();
}

std::vector<double> numbers(const Json& v, const char* what) {
  if (!v.is_array()) throw DomainError(std::string("config: ") + what + " must be an array");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(number(x, what));
  return out;
}

Json optional_vector(const std::optional<std::vector<double>>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace

FieldSpec field_from_json(const Json& doc) {
  const Json& kind = member(doc, "kind");
  if (!kind.is_string()) throw DomainError("config: field kind must be a string");
  const auto k = kind.get<std::string>();
  if (k == "zero") return FieldSpec::zero();
  if (k == "point_mass") return FieldSpec::point_mass(number(member(doc, "h0"), "h0"));
  if (k == "gaussian_centered") return FieldSpec::gaussian(number(member(doc, "v"), "v"));
  if (k == "discrete") {
    const Json& atoms = member(doc, "atoms");
    if (!atoms.is_array()) throw DomainError("config: atoms must be an array");
    std::vector<FieldAtom> out;
    for (const auto& a : atoms) {
      if (!a.is_array() || a.size() != 2) throw DomainError("config: each atom is [value, weight]");
      out.push_back({number(a[0], "atom value"), number(a[1], "atom weight")});
    }
    return FieldSpec::discrete(std::move(out));
  }
  throw DomainError("config: unknown field kind \"" + k + "\"");
}

Json to_json(const FieldSpec& field) {
  Json j;
  j["kind"] = to_string(field.kind());
  std::visit(
      [&](const auto& law) {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, PointMassField>) j["h0"] = law.h0;
        if constexpr (std::is_same_v<T, GaussianField>) j["v"] = law.variance;
        if constexpr (std::is_same_v<T, DiscreteField>) {
          Json atoms = Json::array();
          for (const auto& a : law.atoms) atoms.push_back(Json::array({a.value, a.weight}));
          j["atoms"] = atoms;
        }
      },
      field.law());
  return j;
}

ModelParams model_from_json(const Json& doc) {
  if (!doc.is_object()) throw DomainError("config: top level must be an object");
  const Json& k = member(doc, "K");
  if (!k.is_number_integer()) throw DomainError("config: K must be an integer");
  const auto K = k.get<long long>();
  auto beta = numbers(member(doc, "beta"), "beta");
  auto lambda = numbers(member(doc, "lambda"), "lambda");
  if (K < 1 || static_cast<std::size_t>(K) != lambda.size())
    throw DomainError("config: K must equal the length of lambda");
  std::vector<FieldSpec> fields;
  if (doc.contains("fields")) {
    const Json& f = doc.at("fields");
    if (!f.is_array()) throw DomainError("config: fields must be an array");
    for (const auto& x : f) fields.push_back(field_from_json(x));
  }
  return ModelParams(std::move(beta), std::move(lambda), std::move(fields));
}

Json to_json(const ModelParams& params) {
  Json j;
  j["K"] = params.layers();
  j["beta"] = params.beta();
  j["lambda"] = params.lambda();
  Json fields = Json::array();
  for (const auto& f : params.fields()) fields.push_back(to_json(f));
  j["fields"] = fields;
  return j;
}

Json to_json(const RegionVerdict& v) {
  Json j;
  j["in_region"] = to_string(v.in_region);
  j["rho"] = v.rho;
  Json c;
  c["recursion"] = v.criteria.recursion ? Json(to_string(*v.criteria.recursion)) : Json(nullptr);
  c["chain"] = to_string(v.criteria.chain);
  c["spectral"] = to_string(v.criteria.spectral);
  j["criteria"] = c;
  j["chain_values"] = v.chain_values;
  j["a_star"] = optional_vector(v.a_star);
  j["feasible_a"] = optional_vector(v.feasible_a);
  return j;
}

Json to_json(const RsCertificates& c) {
  Json j;
  Json tala = Json::array();
  for (auto t : c.talagrand) tala.push_back(to_string(t));
  j["talagrand"] = tala;
  j["talagrand_ok"] = c.talagrand_ok();
  if (c.at) {
    Json at = Json::array();
    for (bool b : *c.at) at.push_back(b);
    j["almeida_thouless"] = at;
  } else {
    j["almeida_thouless"] = nullptr;
  }
  const auto at_ok = c.at_ok();
  j["almeida_thouless_ok"] = at_ok ? Json(*at_ok) : Json(nullptr);
  j["stable_at_zero"] = c.stable_at_zero ? Json(*c.stable_at_zero) : Json(nullptr);
  return j;
}

Json to_json(const RsSolution& s) {
  Json j;
  j["q"] = s.q;
  j["pressure"] = s.pressure;
  j["residual"] = s.residual;
  j["method"] = to_string(s.method);
  j["iterations"] = s.iterations;
  j["a"] = optional_vector(s.a);
  j["certificates"] = to_json(s.certificates);
  return j;
}

Json to_json(const BoundMaximum& b) {
  Json j;
  std::vector<double> q;
  std::vector<double> theta_sq;
  Json layers = Json::array();
  for (const auto& l : b.layers) {
    q.push_back(l.q);
    theta_sq.push_back(l.theta_sq);
    layers.push_back(to_string(l.certificate));
  }
  j["q"] = q;
  j["pressure"] = b.value;
  j["residual"] = b.stationarity_residual;
  j["method"] = "bound";
  j["certificates"] = Json{{"layers", layers}};
  j["a"] = b.a;
  j["certified"] = b.certified;
  j["boundary_suspect"] = b.boundary_suspect;
  j["theta_sq"] = theta_sq;
  j["local_maxima"] = b.local_maxima.size();
  return j;
}

Json to_json(const PressureEstimate& e) {
  Json j;
  j["method"] = to_string(e.method);
  j["mean"] = e.mean;
  j["std_error"] = e.std_error;
  j["n_samples"] = e.n_samples;
  j["control_variate"] = e.control_variate;
  j["non_equilibrated"] = e.non_equilibrated;
  return j;
}

Json to_json(const TrendRow& r) {
  Json j;
  j["N"] = r.n;
  j["method"] = to_string(r.estimate.method);
  j["mean"] = r.estimate.mean;
  j["std_error"] = r.estimate.std_error;
  j["p_annealed"] = r.p_annealed;
  j["gap"] = r.gap;
  j["flags"] = r.estimate.flags();
  j["jensen_ok"] = r.jensen_ok;
  return j;
}

Json to_json(const TrendReport& report) {
  Json rows = Json::array();
  for (const auto& r : report.rows) rows.push_back(to_json(r));
  Json j;
  j["rows"] = rows;
  j["jensen_ok"] = report.jensen_ok;
  j["gap_decreasing"] = report.gap_decreasing;
  return j;
}

Json to_json(const CovarianceReport& report) {
  Json pairs = Json::array();
  for (const auto& p : report.pairs) {
    pairs.push_back(Json{{"overlaps", p.overlaps},
                         {"expected", p.expected},
                         {"empirical", p.empirical},
                         {"std_error", p.std_error}});
  }
  Json j;
  j["pairs"] = pairs;
  j["max_deviation"] = report.max_deviation;
  j["max_standard_errors"] = report.max_standard_errors;
  return j;
}

namespace {

std::string format_digits(double x, int digits) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, digits);
  return std::string(buf, r.ptr);
}

void dump(const Json& j, std::ostringstream& out, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent <= 0) return;
    out << '\n' << std::string(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out << ',';
        first = false;
        newline(depth + 1);
        out << Json(it.key()).dump() << (indent > 0 ? ": " : ":");
        dump(it.value(), out, indent, depth + 1);
      }
      newline(depth);
      out << '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::none_of(j.begin(), j.end(), [](const Json& e) { return e.is_structured(); });
      out << '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out << (flat && indent > 0 ? ", " : ",");
        first = false;
        if (!flat) newline(depth + 1);
        dump(e, out, indent, depth + 1);
      }
      if (!flat) newline(depth);
      out << ']';
      return;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      out << (std::isfinite(x) ? format_digits(x, 17) : "null");
      return;
    }
    default:
      out << j.dump();
  }
}

void flatten(const std::string& prefix, const Json& v, Json& row) {
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) flatten(prefix + "[" + std::to_string(i) + "]", v[i], row);
  } else if (v.is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it) flatten(prefix + "." + it.key(), it.value(), row);
  } else {
    row[prefix] = v;
  }
}

std::string csv_cell(const Json& v) {
  switch (v.type()) {
    case Json::value_t::null:
      return "";
    case Json::value_t::number_float:
      return format_shortest(v.get<double>());
    case Json::value_t::string: {
      const auto s = v.get<std::string>();
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string quoted = "\"";
      for (char c : s) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
      return quoted + "\"";
    }
    default:
      return v.dump();
  }
}

}  // namespace

std::string dump_json(const Json& doc, int indent) {
  std::ostringstream out;
  dump(doc, out, indent, 0);
  return out.str();
}

std::string format_shortest(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

void write_csv(const std::vector<Json>& rows, std::ostream& out) {
  std::vector<Json> flat;
  std::vector<std::string> header;
  for (const auto& r : rows) {
    Json f = Json::object();
    for (auto it = r.begin(); it != r.end(); ++it) flatten(it.key(), it.value(), f);
    for (auto it = f.begin(); it != f.end(); ++it) {
      if (std::find(header.begin(), header.end(), it.key()) == header.end()) header.push_back(it.key());
    }
    flat.push_back(std::move(f));
  }
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (const auto& f : flat) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c) out << ',';
      if (f.contains(header[c])) out << csv_cell(f.at(header[c]));
    }
    out << '\n';
  }
}

void write_trend_csv(const TrendReport& report, std::ostream& out) {
  out << "N,method,mean,std_error,p_annealed,gap,flags\n";
  for (const auto& r : report.rows) {
    out << r.n << ',' << to_string(r.estimate.method) << ',' << format_shortest(r.estimate.mean) << ','
        << format_shortest(r.estimate.std_error) << ',' << format_shortest(r.p_annealed) << ','
        << format_shortest(r.gap) << ',' << r.estimate.flags() << '\n';
  }
}

}  // namespace dbm
