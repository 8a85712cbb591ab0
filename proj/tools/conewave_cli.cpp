#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "conewave/cone_kernel.hpp"
#include "conewave/config.hpp"
#include "conewave/core.hpp"
#include "conewave/free_wave.hpp"
#include "conewave/norms.hpp"
#include "conewave/semilinear.hpp"
#include "conewave/spectral.hpp"
#include "conewave/strichartz.hpp"

namespace fs = std::filesystem;
using namespace conewave;

namespace {

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void error_json(const std::string& kind, const std::string& key, const std::string& what) {
  nlohmann::json j{{"error", kind}, {"what", what}};
  if (!key.empty()) j["key"] = key;
  std::cerr << j.dump() << std::endl;
}

fs::path prepare_output(const RunConfig& cfg) {
  fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  return dir;
}

void write_report(const fs::path& dir, const nlohmann::json& j) {
  std::ofstream out(dir / "report.json");
  out << j.dump(2) << "\n";
}

ScalarField3D bump_data(const RunConfig& cfg) {
  const double w = cfg.data_width, a = cfg.amplitude;
  return ScalarField3D::from_function(
      cfg.grid(),
      [=](double x, double y, double z) -> complexd {
        const double q = (x * x + y * y + z * z) / (w * w);
        return q < 1.0 ? a * std::exp(-1.0 / (1.0 - q)) : 0.0;
      },
      w);
}

int run_kato_norm(const RunConfig& cfg) {
  auto dir = prepare_output(cfg);
  ScalarField3D V = cfg.potential();
  NormReport r = kato_norm(V);
  nlohmann::json j{{"tool", "kato-norm"}, {"schema_version", 1}};
  j["report"] = nlohmann::json::parse(r.to_json());
  write_report(dir, j);
  return 0;
}

int run_propagate(const RunConfig& cfg) {
  auto dir = prepare_output(cfg);
  ScalarField3D f = bump_data(cfg);
  ScalarField3D V = cfg.potential();
  std::vector<double> times(static_cast<std::size_t>(cfg.t_steps));
  for (int k = 0; k < cfg.t_steps; ++k)
    times[static_cast<std::size_t>(k)] = cfg.t_max * (k + 1) / cfg.t_steps;

  SpacetimeField u(cfg.grid(), times);
  if (cfg.potential_kind == "none") {
    SphereRule rule = SphereRule::product_rule(cfg.sphere_degree);
    for (std::size_t k = 0; k < times.size(); ++k)
      u.set_slice(k, sine_free(f, times[k], rule));
  } else {
    PointSpectrum pt = point_spectrum(V);
    StonePlan plan(pc_project(f, pt), V, cfg.lambda_max, cfg.dlambda);
    for (std::size_t k = 0; k < times.size(); ++k)
      u.set_slice(k, plan.evaluate(times[k], PropagatorKind::Sine));
  }
  u.write_sup_trace_csv((dir / "table.csv").string());
  u.write((dir / "frames").string());
  nlohmann::json j{{"tool", "propagate"},
                   {"schema_version", 1},
                   {"kind", "sine"},
                   {"final_sup", u.sup_trace().back().second}};
  write_report(dir, j);
  return 0;
}

int run_scan_spectrum(const RunConfig& cfg) {
  auto dir = prepare_output(cfg);
  ScalarField3D V = cfg.potential();
  SpectralScan scan = resonance_scan(V, cfg.lambda_max, 64, cfg.resonance_scale);
  PointSpectrum pt = point_spectrum(V);
  nlohmann::json j{{"tool", "scan-spectrum"}, {"schema_version", 1}};
  j["scan"] = nlohmann::json::parse(scan.to_json());
  j["point_spectrum"] = nlohmann::json::parse(pt.to_json());
  write_report(dir, j);
  std::ofstream csv(dir / "table.csv");
  csv << "lambda,min_singular,condition\n";
  for (std::size_t i = 0; i < scan.lambdas.size(); ++i)
    csv << scan.lambdas[i] << "," << scan.min_singular[i] << "," << scan.condition[i]
        << "\n";
  if (scan.zero_resonance_flag) throw NumericalFailure("zero-energy resonance detected");
  return 0;
}

int run_invert_wiener(const RunConfig& cfg) {
  auto dir = prepare_output(cfg);
  ScalarField3D V = cfg.potential();
  ConeKernel T = t_minus(V);
  WienerOptions wopts;
  wopts.max_terms = cfg.wiener_max_terms;
  wopts.tol = cfg.wiener_tol;
  WienerDiagnostics diag;
  const WienerMode mode =
      cfg.wiener_method == "neumann" ? WienerMode::Neumann : WienerMode::FourierSide;
  ConeKernel S = wiener_invert(T, mode, wopts, &diag);

  ConeKernel one = ConeKernel::identity(T.grid, T.drho);
  ConeKernel residual = kernel_add(compose(kernel_add(one, T), S), kernel_scale(one, -1.0));
  const double res_norm = ux_norm(residual, SpaceId::L1);
  nlohmann::json j{{"tool", "invert-wiener"},
                   {"schema_version", 1},
                   {"method", cfg.wiener_method},
                   {"residual_l1", res_norm},
                   {"terms_used", diag.terms_used},
                   {"norm_ratio", diag.norm_ratio},
                   {"tail_bound", diag.tail_bound},
                   {"min_singular", diag.min_singular},
                   {"tail_mass", diag.tail_mass},
                   {"fourier_modulus", diag.fourier_modulus}};
  write_report(dir, j);
  write_cone_kernel((dir / "inverse.json").string(), S);
  return 0;
}

int run_verify(const RunConfig& cfg) {
  auto dir = prepare_output(cfg);
  EstimateSpec spec = find_estimate(cfg.estimate_id);
  ScalarField3D V = cfg.potential();
  PointSpectrum pt =
      cfg.potential_kind == "none" ? PointSpectrum{} : point_spectrum(V);
  VerifyOptions vopts;
  vopts.t_max = cfg.t_max;
  vopts.t_steps = cfg.t_steps;
  vopts.lambda_max = cfg.lambda_max;
  vopts.dlambda = cfg.dlambda;
  vopts.with_scaling = cfg.with_scaling;
  EstimateReport rep =
      verify_estimate(spec, standard_family(cfg.grid()), V, pt, vopts);
  nlohmann::json j{{"tool", "verify"}, {"schema_version", 1}};
  j["estimate"] = {{"id", spec.estimate_id}, {"description", spec.description}};
  j["report"] = nlohmann::json::parse(rep.to_json());
  write_report(dir, j);
  rep.write_csv((dir / "table.csv").string());
  if (!std::isfinite(rep.max_ratio)) throw NumericalFailure("non-finite estimate ratio");
  return 0;
}

int run_semilinear(const RunConfig& cfg) {
  auto dir = prepare_output(cfg);
  ScalarField3D f0 = bump_data(cfg);
  ScalarField3D f1(cfg.grid());
  std::vector<double> times(static_cast<std::size_t>(cfg.t_steps));
  for (int k = 0; k < cfg.t_steps; ++k)
    times[static_cast<std::size_t>(k)] = cfg.t_max * k / (cfg.t_steps - 1);
  SpacetimeField F(cfg.grid(), times);  // zero forcing

  QuinticOptions qopts;
  qopts.sign = cfg.quintic_sign;
  qopts.small_data_gate = cfg.small_data_gate;
  FixedPointState state;
  if (cfg.potential_kind == "none") {
    state = solve_quintic(f0, f1, F, FreePropagator(cfg.sphere_degree), qopts);
  } else {
    ScalarField3D V = cfg.potential();
    state = solve_quintic(f0, f1, F,
                          StonePropagator(V, point_spectrum(V), cfg.lambda_max, cfg.dlambda),
                          qopts);
  }
  nlohmann::json j{{"tool", "semilinear"},
                   {"schema_version", 1},
                   {"converged", state.converged},
                   {"message", state.message},
                   {"iterate_norms", state.iterate_norms},
                   {"contraction_ratios", state.contraction_ratios},
                   {"quintic_norm", state.quintic_norm},
                   {"quintic_bound", state.quintic_bound}};
  write_report(dir, j);
  std::ofstream csv(dir / "table.csv");
  csv << "iteration,norm\n";
  for (std::size_t i = 0; i < state.iterate_norms.size(); ++i)
    csv << i << "," << state.iterate_norms[i] << "\n";
  if (state.solution.time_count() > 0)
    write_field((dir / "final.wcf").string(), state.solution.slice(state.solution.time_count() - 1));
  if (!state.converged) throw NumericalFailure(state.message);
  return 0;
}

int run_oracle_fdtd(const RunConfig& cfg) {
  auto dir = prepare_output(cfg);
  ScalarField3D f0 = bump_data(cfg);
  ScalarField3D f1(cfg.grid());
  ScalarField3D V = cfg.potential();
  const double h = cfg.grid().spacing();
  double dt = 0.5 * h / std::sqrt(3.0);
  const int per = std::max(1, static_cast<int>(std::ceil(cfg.t_max / (cfg.t_steps * dt))));
  dt = cfg.t_max / (cfg.t_steps * per);
  std::vector<double> times(static_cast<std::size_t>(cfg.t_steps));
  for (int k = 0; k < cfg.t_steps; ++k)
    times[static_cast<std::size_t>(k)] = cfg.t_max * (k + 1) / cfg.t_steps;
  SpacetimeField u = fdtd_evolve(f0, f1, nullptr, V, times, dt, 0);
  u.write_sup_trace_csv((dir / "table.csv").string());
  u.write((dir / "frames").string());
  nlohmann::json j{{"tool", "oracle-fdtd"},
                   {"schema_version", 1},
                   {"dt", dt},
                   {"final_sup", u.sup_trace().back().second}};
  write_report(dir, j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Light-cone wave toolkit: norms, propagators, spectral scans, "
               "estimate verification"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::vector<std::string> overrides;
  bool list_estimates = false;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--set", overrides, "dotted.path=value overrides");
  app.add_flag("--list-estimates", list_estimates, "print the estimate catalog");

  const std::vector<std::pair<std::string, int (*)(const RunConfig&)>> commands = {
      {"kato-norm", &run_kato_norm},     {"propagate", &run_propagate},
      {"scan-spectrum", &run_scan_spectrum}, {"invert-wiener", &run_invert_wiener},
      {"verify", &run_verify},           {"semilinear", &run_semilinear},
      {"oracle-fdtd", &run_oracle_fdtd},
  };
  for (const auto& [name, fn] : commands) app.add_subcommand(name);

  CLI11_PARSE(app, argc, argv);

  if (list_estimates) {
    for (const auto& e : estimate_catalog())
      std::cout << e.estimate_id << "\t" << e.description << "\n";
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return 0;
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    RunConfig cfg = RunConfig::load(config_path, overrides);
    int rc = 0;
    for (const auto& [name, fn] : commands)
      if (app.get_subcommand(name)->parsed()) rc = fn(cfg);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest((fs::path(cfg.output_dir) / "manifest.json").string(), cfg, secs);
    return rc;
  } catch (const ConfigError& e) {
    error_json("validation", e.key, e.what());
    return 2;
  } catch (const NumericalFailure& e) {
    error_json("numerical", "", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    error_json("validation", "", e.what());
    return 2;
  } catch (const std::exception& e) {
    error_json("runtime", "", e.what());
    return 3;
  }
}
