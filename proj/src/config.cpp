#include "conewave/config.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace conewave {

namespace {

template <typename T>
void pull(const nlohmann::json& j, const std::string& a, const std::string& b, T& out) {
  if (!j.contains(a) || !j[a].contains(b)) return;
  try {
    out = j[a][b].template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(a + "." + b, "wrong type for " + a + "." + b);
  }
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  return {
      {"schema_version", schema_version},
      {"grid", {{"L", grid_L}, {"n", grid_n}}},
      {"potential",
       {{"kind", potential_kind},
        {"depth", potential_depth},
        {"radius", potential_radius},
        {"path", potential_path}}},
      {"time", {{"t_max", t_max}, {"steps", t_steps}}},
      {"quadrature",
       {{"lambda_max", lambda_max}, {"dlambda", dlambda}, {"sphere_degree", sphere_degree}}},
      {"estimate", {{"id", estimate_id}, {"with_scaling", with_scaling}}},
      {"thresholds",
       {{"resonance_scale", resonance_scale}, {"small_data_gate", small_data_gate}}},
      {"semilinear",
       {{"sign", quintic_sign}, {"amplitude", amplitude}, {"data_width", data_width}}},
      {"wiener",
       {{"method", wiener_method},
        {"max_terms", wiener_max_terms},
        {"tol", wiener_tol}}},
      {"output_dir", output_dir},
  };
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  if (j.contains("schema_version")) c.schema_version = j["schema_version"].get<int>();
  pull(j, "grid", "L", c.grid_L);
  pull(j, "grid", "n", c.grid_n);
  pull(j, "potential", "kind", c.potential_kind);
  pull(j, "potential", "depth", c.potential_depth);
  pull(j, "potential", "radius", c.potential_radius);
  pull(j, "potential", "path", c.potential_path);
  pull(j, "time", "t_max", c.t_max);
  pull(j, "time", "steps", c.t_steps);
  pull(j, "quadrature", "lambda_max", c.lambda_max);
  pull(j, "quadrature", "dlambda", c.dlambda);
  pull(j, "quadrature", "sphere_degree", c.sphere_degree);
  pull(j, "estimate", "id", c.estimate_id);
  pull(j, "estimate", "with_scaling", c.with_scaling);
  pull(j, "thresholds", "resonance_scale", c.resonance_scale);
  pull(j, "thresholds", "small_data_gate", c.small_data_gate);
  pull(j, "semilinear", "sign", c.quintic_sign);
  pull(j, "semilinear", "amplitude", c.amplitude);
  pull(j, "semilinear", "data_width", c.data_width);
  pull(j, "wiener", "method", c.wiener_method);
  pull(j, "wiener", "max_terms", c.wiener_max_terms);
  pull(j, "wiener", "tol", c.wiener_tol);
  if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path,
                          const std::vector<std::string>& overrides) {
  nlohmann::json doc;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open config file " + path);
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path, std::string("malformed JSON: ") + e.what());
    }
  } else {
    doc = RunConfig{}.to_json();
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return from_json(doc);
}

void RunConfig::validate() const {
  if (schema_version != 1) throw ConfigError("schema_version", "unsupported schema_version");
  if (!(grid_L > 0.0)) throw ConfigError("grid.L", "grid.L must be positive");
  if (grid_n < 3 || grid_n % 2 == 0)
    throw ConfigError("grid.n", "grid.n must be odd and >= 3");
  if (potential_kind != "none" && potential_kind != "well" && potential_kind != "bump" &&
      potential_kind != "file")
    throw ConfigError("potential.kind", "potential.kind must be none|well|bump|file");
  if (potential_kind == "file" && potential_path.empty())
    throw ConfigError("potential.path", "potential.path required for kind=file");
  if (potential_kind != "none" && potential_kind != "file" &&
      !(potential_radius > 0.0 && potential_radius < grid_L))
    throw ConfigError("potential.radius", "potential.radius must lie in (0, L)");
  if (!(t_max > 0.0)) throw ConfigError("time.t_max", "time.t_max must be positive");
  if (t_steps < 2) throw ConfigError("time.steps", "time.steps must be >= 2");
  if (!(lambda_max > 0.0) || !(dlambda > 0.0) || dlambda > lambda_max)
    throw ConfigError("quadrature.dlambda", "need 0 < dlambda <= lambda_max");
  if (sphere_degree < 3) throw ConfigError("quadrature.sphere_degree", "degree too small");
  if (quintic_sign != 1 && quintic_sign != -1)
    throw ConfigError("semilinear.sign", "semilinear.sign must be +-1");
  if (!(small_data_gate > 0.0))
    throw ConfigError("thresholds.small_data_gate", "gate must be positive");
  if (wiener_method != "neumann" && wiener_method != "fourier")
    throw ConfigError("wiener.method", "wiener.method must be neumann|fourier");
}

ScalarField3D RunConfig::potential() const {
  const Grid3D g = grid();
  if (potential_kind == "none") return ScalarField3D(g);
  if (potential_kind == "file") return read_field(potential_path);
  const double c = potential_depth, R = potential_radius;
  if (potential_kind == "well") return square_well(g, c, R);
  return ScalarField3D::from_function(  // smooth bump well
      g,
      [=](double x, double y, double z) -> complexd {
        const double q = (x * x + y * y + z * z) / (R * R);
        return q < 1.0 ? -c * std::exp(-1.0 / (1.0 - q)) : 0.0;
      },
      R);
}

std::string RunConfig::hash() const {
  const std::string s = to_json().dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError(assignment, "override must be dotted.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  nlohmann::json* node = &doc;
  std::stringstream keys(path);
  std::string key, last;
  std::vector<std::string> parts;
  while (std::getline(keys, key, '.')) parts.push_back(key);
  if (parts.empty()) throw ConfigError(assignment, "empty override path");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
  last = parts.back();

  // Parse as JSON scalar when possible, else keep the raw string.
  nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
  (*node)[last] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
}

void write_manifest(const std::string& path, const RunConfig& cfg, double seconds) {
  nlohmann::json j;
  j["config"] = cfg.to_json();
  j["config_hash"] = cfg.hash();
  j["schema_version"] = cfg.schema_version;
  j["wall_seconds"] = seconds;
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

}  // namespace conewave
