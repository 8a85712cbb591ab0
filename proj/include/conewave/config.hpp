#pragma once

#include <string>
#include <vector>

#include "conewave/core.hpp"

#include "json.hpp"

namespace conewave {

/// Thrown on schema violations; `key` points at the offending config entry.
struct ConfigError : std::runtime_error {
  std::string key;
  ConfigError(std::string k, const std::string& what)
      : std::runtime_error(what), key(std::move(k)) {}
};

struct RunConfig {
  int schema_version = 1;
  double grid_L = 2.0;
  int grid_n = 33;

  std::string potential_kind = "none";  // none | well | bump | file
  double potential_depth = 1.0;
  double potential_radius = 1.0;
  std::string potential_path;

  double t_max = 4.0;
  int t_steps = 33;

  double lambda_max = 12.0;
  double dlambda = 0.1;
  int sphere_degree = 23;

  std::string estimate_id = "t-weighted-sine";
  bool with_scaling = true;

  double resonance_scale = 1e-3;
  double small_data_gate = 0.1;

  int quintic_sign = 1;
  double amplitude = 0.01;
  double data_width = 0.5;

  std::string wiener_method = "neumann";  // neumann | fourier
  int wiener_max_terms = 40;
  double wiener_tol = 1e-8;

  std::string output_dir = "out";

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path,
                        const std::vector<std::string>& overrides);

  void validate() const;
  Grid3D grid() const { return Grid3D(grid_L, grid_n); }
  /// Builds the configured potential on the configured grid; "none" gives 0.
  ScalarField3D potential() const;

  /// FNV-1a of the canonical JSON dump; embedded in run manifests.
  std::string hash() const;
};

/// Applies "dotted.path=value" to a JSON document; throws ConfigError on an
/// unknown path or unparsable value.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// report manifest: config, hash, schema version, wall time (timings are not
/// part of the bit-identical artifact contract and live only here).
void write_manifest(const std::string& path, const RunConfig& cfg, double seconds);

}  // namespace conewave
