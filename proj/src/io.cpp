#include "spike/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <regex>
#include <sstream>

#include "spike/error.hpp"

namespace spike {

extern const char* const kRunConfigSchema;  // generated from schema/run_config.schema.json

namespace {

const char* kVersion = "1.0.0";

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v(i)));
  return a;
}


std::vector<double> split_numbers(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      require(used == item.size(), "bad number '" + item + "' in manifold spec");
    } catch (const std::logic_error&) {
      fail(ErrorKind::InvalidArgument, "bad number '" + item + "' in manifold spec");
    }
  }
  return out;
}

BoundaryManifold make_manifold(const std::string& kind, const std::vector<double>& prm, int orientation) {
  auto arity = [&](std::size_t lo, std::size_t hi) {
    require(prm.size() >= lo && prm.size() <= hi, "manifold '" + kind + "' takes " + std::to_string(lo) +
                                                       (lo == hi ? "" : "-" + std::to_string(hi)) + " parameters");
  };
  if (kind == "disk") {
    arity(0, 1);
    return BoundaryManifold::disk(prm.empty() ? 1.0 : prm[0], orientation);
  }
  if (kind == "ellipse") {
    arity(2, 2);
    return BoundaryManifold::ellipse(prm[0], prm[1], orientation);
  }
  if (kind == "ball") {
    arity(0, 1);
    return BoundaryManifold::ball(prm.empty() ? 1.0 : prm[0], orientation);
  }
  if (kind == "spheroid") {
    arity(2, 2);
    return BoundaryManifold::spheroid(prm[0], prm[1], orientation);
  }
  fail(ErrorKind::InvalidArgument, "unknown manifold kind '" + kind + "'");
}

std::string type_of(const json& v) {
  if (v.is_object()) return "object";
  if (v.is_array()) return "array";
  if (v.is_string()) return "string";
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer() || v.is_number_unsigned()) return "integer";
  if (v.is_number()) return "number";
  return "null";
}

bool type_matches(const std::string& want, const json& v) {
  std::string have = type_of(v);
  if (want == have) return true;
  if (want == "number" && have == "integer") return true;
  if (want == "integer" && have == "number") {
    double x = v.get<double>();
    return std::isfinite(x) && x == std::floor(x);
  }
  return false;
}

void validate_at(const json& schema, const json& doc, const std::string& path, std::vector<SchemaIssue>& out) {
  auto issue = [&](const std::string& msg) { out.push_back({path.empty() ? "/" : path, msg}); };
  if (schema.contains("oneOf")) {
    int matches = 0;
    std::vector<SchemaIssue> first;
    for (const auto& alt : schema["oneOf"]) {
      std::vector<SchemaIssue> tmp;
      validate_at(alt, doc, path, tmp);
      if (tmp.empty())
        ++matches;
      else if (first.empty())
        first = tmp;
    }
    if (matches != 1) {
      if (matches == 0 && !first.empty())
        out.insert(out.end(), first.begin(), first.end());
      else
        issue("must match exactly one alternative");
    }
    return;
  }
  if (schema.contains("type")) {
    const json& t = schema["type"];
    bool ok = false;
    if (t.is_array()) {
      for (const auto& w : t) ok = ok || type_matches(w.get<std::string>(), doc);
    } else {
      ok = type_matches(t.get<std::string>(), doc);
    }
    if (!ok) {
      issue("expected " + t.dump() + ", got " + type_of(doc));
      return;
    }
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"]) found = found || e == doc;
    if (!found) issue("must be one of " + schema["enum"].dump());
  }
  if (doc.is_number()) {
    double x = doc.get<double>();
    if (schema.contains("minimum") && x < schema["minimum"].get<double>())
      issue("must be >= " + schema["minimum"].dump());
    if (schema.contains("maximum") && x > schema["maximum"].get<double>())
      issue("must be <= " + schema["maximum"].dump());
    if (schema.contains("exclusiveMinimum") && x <= schema["exclusiveMinimum"].get<double>())
      issue("must be > " + schema["exclusiveMinimum"].dump());
  }
  if (doc.is_string() && schema.contains("pattern")) {
    if (!std::regex_match(doc.get<std::string>(), std::regex(schema["pattern"].get<std::string>())))
      issue("does not match pattern " + schema["pattern"].dump());
  }
  if (doc.is_array()) {
    if (schema.contains("minItems") && doc.size() < schema["minItems"].get<std::size_t>())
      issue("needs at least " + schema["minItems"].dump() + " items");
    if (schema.contains("maxItems") && doc.size() > schema["maxItems"].get<std::size_t>())
      issue("allows at most " + schema["maxItems"].dump() + " items");
    if (schema.contains("items"))
      for (std::size_t i = 0; i < doc.size(); ++i) validate_at(schema["items"], doc[i], path + "/" + std::to_string(i), out);
  }
  if (doc.is_object()) {
    if (schema.contains("required"))
      for (const auto& r : schema["required"])
        if (!doc.contains(r.get<std::string>())) out.push_back({path + "/" + r.get<std::string>(), "is required"});
    const json props = schema.value("properties", json::object());
    bool closed = schema.contains("additionalProperties") && schema["additionalProperties"] == false;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      std::string sub = path + "/" + it.key();
      if (props.contains(it.key()))
        validate_at(props[it.key()], it.value(), sub, out);
      else if (closed)
        out.push_back({sub, "is not a recognised field"});
    }
  }
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json meta_block(const std::string& command, const json& config) {
  return {{"command", command},
          {"config_hash", fnv1a_hex(config.dump())},
          {"config", config},
          {"versions",
           {{"spike", kVersion},
            {"profile", kVersion},
            {"geometry", kVersion},
            {"reduction", kVersion},
            {"linearized_spectrum", kVersion},
            {"pde", kVersion},
            {"cli", kVersion}}}};
}

BoundaryManifold parse_manifold(const json& spec) {
  if (spec.is_string()) {
    std::string s = spec.get<std::string>();
    int orientation = 1;
    if (s.size() > 3 && s.compare(s.size() - 3, 3, ":-1") == 0) {
      orientation = -1;
      s.resize(s.size() - 3);
    }
    auto colon = s.find(':');
    std::string kind = s.substr(0, colon);
    std::vector<double> prm = colon == std::string::npos ? std::vector<double>{} : split_numbers(s.substr(colon + 1));
    return make_manifold(kind, prm, orientation);
  }
  require(spec.is_object(), "manifold must be a string or an object");
  std::vector<double> prm;
  if (spec.contains("params")) prm = spec["params"].get<std::vector<double>>();
  return make_manifold(spec.at("kind").get<std::string>(), prm, spec.value("orientation", 1));
}

json manifold_json(const BoundaryManifold& m) {
  json prm = json::array();
  switch (m.kind()) {
    case ManifoldKind::Disk:
    case ManifoldKind::Ball: prm.push_back(m.a()); break;
    case ManifoldKind::Ellipse:
    case ManifoldKind::Spheroid:
      prm.push_back(m.a());
      prm.push_back(m.b());
      break;
  }
  return {{"kind", m.kind_name()}, {"params", prm}, {"orientation", m.orientation()}};
}

std::string format_number(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::ostream& os, const std::vector<std::string>& header) : os_(os), width_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
  os_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  require(values.size() == width_, "CSV row width does not match the header");
  for (std::size_t i = 0; i < values.size(); ++i) os_ << (i ? "," : "") << format_number(values[i]);
  os_ << '\n';
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), "cannot open " + path.string() + " for writing");
  f << text;
}

void write_json(const std::filesystem::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

json to_json(const MomentReport& r) {
  json moments = json::object();
  for (const auto& [k, v] : r.moments) moments[k] = v;
  return {{"n", r.n},
          {"p", r.p},
          {"C", r.C},
          {"alpha", r.alpha},
          {"pohozaev_residual", r.pohozaev_residual},
          {"nehari_residual", r.nehari_residual},
          {"energy_identity_residual", r.energy_identity_residual},
          {"moment_identity_residual", r.moment_identity_residual},
          {"quadrature_error", r.quadrature_error},
          {"moments", moments}};
}

json to_json(const CurvatureReport& r) {
  json h = json::array();
  for (Eigen::Index i = 0; i < r.h.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < r.h.cols(); ++j) row.push_back(r.h(i, j));
    h.push_back(row);
  }
  return {{"h", h}, {"H", r.H}, {"dH", vec_json(r.dH)}};
}

json to_json(const CriticalPoint& c) {
  return {{"t", c.xi.t},   {"phi", c.xi.phi},   {"x", json::array({c.x.x(), c.x.y(), c.x.z()})},
          {"H", c.H},      {"dH", c.dH},        {"kind", c.kind},
          {"stable", c.stable}, {"isolated", c.isolated}};
}

json to_json(const MetricExpansionReport& r) {
  return {{"g1_slope", number_or_null(r.g1_slope)}, {"g3_slope", number_or_null(r.g3_slope)},
          {"g1_max", r.g1_max},                     {"g3_max", r.g3_max},
          {"g2_max", r.g2_max},                     {"mixed_error", r.mixed_error},
          {"identity_error", r.identity_error},     {"radii", r.radii},
          {"g1_residuals", r.g1_res},               {"g3_residuals", r.g3_res}};
}

json to_json(const TransitionReport& r) {
  return {{"e_identity", r.e_identity}, {"de_deta", r.de_deta},
          {"de_dy", r.de_dy},           {"mixed_steps", r.steps},
          {"mixed", r.mixed},           {"mixed_slope", number_or_null(r.mixed_slope)},
          {"h_normal_dependence", r.h_normal_dependence}};
}

json to_json(const ExpansionFit& f) {
  return {{"C_hat", f.C_hat}, {"slope_hat", f.slope_hat}, {"alpha_hat", number_or_null(f.alpha_hat)},
          {"r2", f.r2},       {"eps_min", f.eps_min},     {"eps_max", f.eps_max},
          {"H", f.H},         {"in_window", f.in_window}, {"eps", f.eps},
          {"J", f.J}};
}

json to_json(const GradientCheck& g) {
  return {{"grad", vec_json(g.grad)}, {"predicted", vec_json(g.predicted)}, {"rel_deviation", g.rel_deviation}};
}

json to_json(const SpectrumReport& r) {
  json tang = json::array();
  for (const auto& v : r.overlap_tangential) tang.push_back(v);
  return {{"eigenvalues", r.eigenvalues},
          {"residuals", r.residuals},
          {"kernel_tol", r.kernel_tol},
          {"kernel_indices", r.kernel_indices},
          {"overlaps",
           {{"dU_dz_i", tang},
            {"dU_dz_n", r.overlap_normal},
            {"kernel_dU_dz_i", r.kernel_overlap},
            {"kernel_dU_dz_n", r.kernel_overlap_normal}}},
          {"parity", r.parity},
          {"gap", r.gap},
          {"iterations", r.iterations},
          {"grid", {{"n", r.grid.n}, {"L", r.grid.L}, {"h", r.grid.h}}}};
}

json to_json(const RemainderStudy& s) {
  json rows = json::array();
  for (const auto& r : s.rows)
    rows.push_back({{"eps", r.eps},
                    {"norm", r.norm},
                    {"raw_norm", r.raw_norm},
                    {"projection_residual", r.projection_residual},
                    {"gram_condition", r.gram_condition},
                    {"nodes", r.nodes}});
  return {{"rows", rows}, {"slope", s.slope}, {"predicted", s.predicted}};
}

json to_json(const SolveReport& r) {
  return {{"eps", r.eps},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"residual", r.residual},
          {"min_u", r.min_u},
          {"max_u", r.max_u},
          {"peak_node", r.peak_node},
          {"peak_x", json::array({r.peak_x.x(), r.peak_x.y()})},
          {"foot", {{"t", r.foot.t}, {"x", json::array({r.foot_x.x(), r.foot_x.y()})}}},
          {"nearest_critical", {{"t", r.nearest_critical.t}}},
          {"critical_distance", number_or_null(r.critical_distance)},
          {"energy", r.energy},
          {"nodes", r.nodes}};
}

json to_json(const ContinuationResult& r) {
  json stages = json::array();
  for (const auto& s : r.stages) {
    json j = to_json(s.report);
    j["energy_ansatz"] = s.energy_ansatz;
    j["energy_gap"] = s.energy_gap;
    stages.push_back(j);
  }
  return {{"stages", stages}, {"complete", r.complete}, {"failure", r.failure}};
}

void write_landscape_csv(std::ostream& os, const std::vector<LandscapeRow>& rows) {
  CsvWriter w(os, {"xi_param", "eps", "J", "gradJ", "H"});
  for (const auto& r : rows) w.row({r.xi_param, r.eps, r.J, r.gradJ, r.H});
}

void write_curvature_csv(std::ostream& os, const std::vector<CurvatureSample>& rows) {
  CsvWriter w(os, {"t", "H", "dH"});
  for (const auto& r : rows) w.row({r.t, r.H, r.dH});
}

void write_remainder_csv(std::ostream& os, const RemainderStudy& s) {
  CsvWriter w(os, {"eps", "norm", "log_eps", "log_norm"});
  for (const auto& r : s.rows) w.row({r.eps, r.norm, std::log(r.eps), std::log(r.norm)});
}

void write_solution_csv(std::ostream& os, const DiscreteDomain& d, const Eigen::VectorXd& u) {
  CsvWriter w(os, {"x", "y", "u"});
  for (std::size_t i = 0; i < d.size(); ++i) w.row({d.nodes()[i].x(), d.nodes()[i].y(), u(static_cast<Eigen::Index>(i))});
}

std::vector<SchemaIssue> validate_schema(const json& schema, const json& doc) {
  std::vector<SchemaIssue> out;
  validate_at(schema, doc, "", out);
  return out;
}

const json& run_config_schema() {
  static const json schema = json::parse(kRunConfigSchema);
  return schema;
}

}  // namespace spike
