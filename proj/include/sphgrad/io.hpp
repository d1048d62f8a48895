#pragma once

// File formats shared by the library and the command-line tool.
//
// Model spec JSON:
//   {"type":"components","components":[{"z":[..],"k":1,"theta":0.5}],"delta":0}
//   {"type":"quadratic","mu":[..],"A":[[..],..],"delta":0}
// Point CSV: header `x,y,z` (unit vectors) or `lon_deg,lat_deg`.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sphgrad/inference.hpp"
#include "sphgrad/potential.hpp"

namespace sphgrad {

using Json = nlohmann::json;

struct ModelFile {
  Json raw;
  /// The potential with the file's parameter values (theta or mu/A).
  PotentialSpec potential;
  /// Set for quadratic files.
  std::optional<QuadraticSpec> quadratic;
  /// The family the file describes, for fitting.
  ModelSpec model;
  /// Parameter values in the model's packed layout.
  Eigen::VectorXd theta;

  /// Throws InadmissibleSpec if the file's own parameters are inadmissible.
  AdmissibilityReport validate() const;
};

/// Throws ParseError on schema violations.
ModelFile parse_model_json(const Json& j);
ModelFile load_model_file(const std::filesystem::path& path);

Json potential_to_json(const PotentialSpec& spec);
Json quadratic_to_json(const QuadraticSpec& q);

/// Throws ParseError with the 1-based line of the offending row.
std::vector<SpherePoint> parse_points_csv(std::istream& in);
std::vector<SpherePoint> load_points_csv(const std::filesystem::path& path);

/// {"model", "theta_hat", "loglik", "aic", "dim", "converged", "iterations",
///  "gap", "label", "data_fingerprint", "trace"}
Json fit_report_json(const FitResult& fit, const ModelSpec& model, const Json& model_json);
FitResult parse_fit_report(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace sphgrad
