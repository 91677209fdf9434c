#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "spike/geometry.hpp"
#include "spike/pde.hpp"
#include "spike/profile.hpp"
#include "spike/reduction.hpp"
#include "spike/spectrum.hpp"

namespace spike {

using json = nlohmann::ordered_json;

/// 64-bit FNV-1a of the bytes, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Provenance block attached to every output document.
json meta_block(const std::string& command, const json& config);

/// Parses "disk", "disk:R", "ellipse:a,b", "ball", "ball:R", "spheroid:a,c", optionally followed
/// by ":-1" to flip the orientation, or the object form {kind, params, orientation}.
BoundaryManifold parse_manifold(const json& spec);
json manifold_json(const BoundaryManifold& m);

/// Shortest round-trip decimal representation, so reruns give identical bytes.
std::string format_number(double x);

/// Minimal CSV writer with a fixed header.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);

 private:
  std::ostream& os_;
  std::size_t width_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const json& doc);

json to_json(const MomentReport& r);
json to_json(const CurvatureReport& r);
json to_json(const CriticalPoint& c);
json to_json(const MetricExpansionReport& r);
json to_json(const TransitionReport& r);
json to_json(const ExpansionFit& f);
json to_json(const GradientCheck& g);
json to_json(const SpectrumReport& r);
json to_json(const RemainderStudy& s);
json to_json(const SolveReport& r);
json to_json(const ContinuationResult& r);

void write_landscape_csv(std::ostream& os, const std::vector<LandscapeRow>& rows);
void write_curvature_csv(std::ostream& os, const std::vector<CurvatureSample>& rows);
void write_remainder_csv(std::ostream& os, const RemainderStudy& s);
void write_solution_csv(std::ostream& os, const DiscreteDomain& d, const Eigen::VectorXd& u);

/// Validation against the subset of JSON Schema used by the bundled config schema:
/// type, properties, required, additionalProperties, enum, minimum, maximum,
/// exclusiveMinimum, minItems, maxItems, items, pattern, oneOf.
struct SchemaIssue {
  std::string path;  ///< JSON pointer of the offending field
  std::string message;
};
std::vector<SchemaIssue> validate_schema(const json& schema, const json& doc);

/// The run-config schema shipped in schema/run_config.schema.json.
const json& run_config_schema();

}  // namespace spike
