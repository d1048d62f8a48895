#include "sphgrad/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "sphgrad/density.hpp"

namespace sphgrad {

namespace {

Eigen::VectorXd to_vector(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ParseError(what + " must be a non-empty array of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(what + " must contain only numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Json from_vector(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json from_matrix(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(from_vector(m.row(i).transpose()));
  return out;
}

double number_or(const Json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ParseError(std::string("\"") + key + "\" must be a number");
  return j[key].get<double>();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("'" + s + "' is not a finite number", line);
  }
}

}  // namespace

AdmissibilityReport ModelFile::validate() const {
  if (quadratic) return validate_quadratic(*quadratic);
  return validate_spec(potential);
}

ModelFile parse_model_json(const Json& j) {
  if (!j.is_object()) throw ParseError("model spec must be a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) {
    throw ParseError("model spec needs a string \"type\" (components or quadratic)");
  }
  ModelFile file;
  file.raw = j;
  const std::string type = j["type"].get<std::string>();
  const double delta = number_or(j, "delta", 0.0);
  if (delta < 0.0 || delta >= 1.0) throw ParseError("\"delta\" must lie in [0, 1)");
  const std::string name = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>() : type;

  if (type == "components") {
    if (!j.contains("components") || !j["components"].is_array()) {
      throw ParseError("components model needs a \"components\" array");
    }
    int n = -1;
    if (j.contains("n")) {
      if (!j["n"].is_number_integer()) throw ParseError("\"n\" must be an integer");
      n = j["n"].get<int>();
    }
    std::vector<SpherePoint> anchors;
    std::vector<int> freqs;
    std::vector<double> weights;
    for (const auto& c : j["components"]) {
      if (!c.is_object() || !c.contains("z")) throw ParseError("each component needs \"z\"");
      Eigen::VectorXd z = to_vector(c["z"], "component \"z\"");
      if (z.norm() == 0.0) throw ParseError("component anchor \"z\" must be non-zero");
      int k = 1;
      if (c.contains("k")) {
        if (!c["k"].is_number_integer() || c["k"].get<int>() < 1) {
          throw ParseError("component \"k\" must be a positive integer");
        }
        k = c["k"].get<int>();
      }
      anchors.emplace_back(std::move(z));
      freqs.push_back(k);
      weights.push_back(number_or(c, "theta", 0.0));
    }
    if (n < 0) n = anchors.empty() ? 2 : anchors.front().dim();
    for (const auto& z : anchors) {
      if (z.dim() != n) throw ParseError("all anchors must have " + std::to_string(n + 1) + " coordinates");
    }
    file.model = ModelSpec::components_model(n, anchors, freqs, delta);
    file.model.name = name;
    file.theta = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
    file.potential = file.model.instantiate(file.theta);
    file.potential.slack = delta;
    return file;
  }
  if (type == "quadratic") {
    if (!j.contains("mu")) throw ParseError("quadratic model needs \"mu\"");
    QuadraticSpec q;
    q.mu = to_vector(j["mu"], "\"mu\"");
    const Eigen::Index m = q.mu.size();
    if (m < 2) throw ParseError("\"mu\" needs at least 2 entries");
    q.A = Eigen::MatrixXd::Zero(m, m);
    if (j.contains("A")) {
      const Json& a = j["A"];
      if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != m) {
        throw ParseError("\"A\" must be a " + std::to_string(m) + "x" + std::to_string(m) + " array");
      }
      for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::VectorXd row = to_vector(a[r], "\"A\" row");
        if (row.size() != m) throw ParseError("\"A\" rows must have " + std::to_string(m) + " entries");
        q.A.row(r) = row.transpose();
      }
    }
    if ((q.A - q.A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + q.A.cwiseAbs().maxCoeff())) {
      throw ParseError("\"A\" must be symmetric");
    }
    q.slack = delta;
    file.quadratic = q;
    file.model = ModelSpec::quadratic_model(static_cast<int>(m) - 1, delta);
    file.model.name = name;
    file.theta = pack_quadratic(q.mu, q.A);
    file.potential = decompose_quadratic(q);
    return file;
  }
  throw ParseError("unknown model type \"" + type + "\"");
}

ModelFile load_model_file(const std::filesystem::path& path) {
  return parse_model_json(read_json_file(path));
}

Json potential_to_json(const PotentialSpec& spec) {
  Json comps = Json::array();
  for (const auto& c : spec.components) {
    comps.push_back({{"z", from_vector(c.anchor.coords())}, {"k", c.profile.k}, {"theta", c.weight}});
  }
  return {{"type", "components"}, {"n", spec.n}, {"components", comps}, {"delta", spec.slack}};
}

Json quadratic_to_json(const QuadraticSpec& q) {
  return {{"type", "quadratic"}, {"mu", from_vector(q.mu)}, {"A", from_matrix(q.A)}, {"delta", q.slack}};
}

std::vector<SpherePoint> parse_points_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv(line);
      break;
    }
  }
  if (header.empty()) throw EmptyData();
  const bool xyz = header == std::vector<std::string>{"x", "y", "z"};
  const bool lonlat = header == std::vector<std::string>{"lon_deg", "lat_deg"};
  if (!xyz && !lonlat) {
    throw ParseError("header must be 'x,y,z' or 'lon_deg,lat_deg'", line_no);
  }
  std::vector<SpherePoint> points;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    if (xyz) {
      const Eigen::Vector3d v(parse_number(fields[0], line_no), parse_number(fields[1], line_no),
                              parse_number(fields[2], line_no));
      if (v.norm() < 1e-12) throw ParseError("zero vector is not a sphere point", line_no);
      points.emplace_back(v);
    } else {
      const double lon = parse_number(fields[0], line_no);
      const double lat = parse_number(fields[1], line_no);
      if (lon < -180.0 || lon >= 180.0) throw ParseError("lon_deg must lie in [-180, 180)", line_no);
      if (lat < -90.0 || lat > 90.0) throw ParseError("lat_deg must lie in [-90, 90]", line_no);
      points.push_back(from_lon_lat(lon, lat));
    }
  }
  return points;
}

std::vector<SpherePoint> load_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_points_csv(in);
}

Json fit_report_json(const FitResult& fit, const ModelSpec& model, const Json& model_json) {
  Json theta;
  if (model.kind == ModelKind::quadratic) {
    const QuadraticSpec q = unpack_quadratic(model.n, fit.theta_hat);
    theta = {{"mu", from_vector(q.mu)}, {"A", from_matrix(q.A)}};
  } else {
    theta = from_vector(fit.theta_hat);
  }
  Json trace = Json::array();
  for (double v : fit.trace) trace.push_back(v);
  return {{"model", model_json},   {"label", fit.label},
          {"theta_hat", theta},    {"loglik", fit.loglik},
          {"aic", fit.aic},        {"dim", fit.dim},
          {"converged", fit.converged}, {"iterations", fit.iterations},
          {"gap", fit.gap},        {"data_fingerprint", fit.data_fingerprint},
          {"trace", trace}};
}

FitResult parse_fit_report(const Json& j) {
  if (!j.is_object()) throw ParseError("fit report must be a JSON object");
  FitResult fit;
  try {
    fit.loglik = j.at("loglik").get<double>();
    fit.aic = j.at("aic").get<double>();
    fit.dim = j.at("dim").get<int>();
    fit.converged = j.value("converged", false);
    fit.iterations = j.value("iterations", 0);
    fit.gap = j.value("gap", 0.0);
    fit.label = j.value("label", std::string());
    fit.data_fingerprint = j.at("data_fingerprint").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed fit report: ") + e.what());
  }
  return fit;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << text;
}

}  // namespace sphgrad
