#include "conewave/strichartz.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "conewave/free_wave.hpp"
#include "conewave/norms.hpp"

#include "json.hpp"

namespace conewave {

namespace {

double spatial_norm(const ScalarField3D& f, const SpaceNorm& space) {
  switch (space.kind) {
    case SpaceNorm::Kind::Linf:
      return f.max_abs();
    case SpaceNorm::Kind::Lq: {
      if (space.q <= 0.0) throw std::invalid_argument("Lq needs q > 0");
      const double h3 = std::pow(f.grid.spacing(), 3);
      KahanSum acc;
      for (const auto& v : f.values) acc.add(std::pow(std::abs(v), space.q));
      return std::pow(acc.value() * h3, 1.0 / space.q);
    }
    case SpaceNorm::Kind::LorentzQ2:
      return lorentz_norm(f, space.q, 2.0).value;
    case SpaceNorm::Kind::WeakL3:
      return lorentz_norm(f, 3.0, std::numeric_limits<double>::infinity()).value;
    case SpaceNorm::Kind::Kato:
      return kato_norm(f).value;
  }
  throw std::logic_error("unknown space norm");
}

// Trapezoid L^p norm over the time grid; p = inf is the max.
double time_norm(const std::vector<double>& times, const std::vector<double>& vals,
                 double p) {
  if (times.size() != vals.size() || times.empty())
    throw std::invalid_argument("time_norm: size mismatch");
  if (std::isinf(p)) return *std::max_element(vals.begin(), vals.end());
  if (p <= 0.0) throw std::invalid_argument("time_norm: p > 0 required");
  if (times.size() == 1) return 0.0;
  KahanSum acc;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double dt = times[k + 1] - times[k];
    acc.add(0.5 * dt * (std::pow(vals[k], p) + std::pow(vals[k + 1], p)));
  }
  return std::pow(acc.value(), 1.0 / p);
}

}  // namespace

double reversed_norm(const SpacetimeField& u, const SpaceNorm& space, double time_p,
                     NormOrder order) {
  u.validate();
  if (order == NormOrder::TimeOuter) {
    std::vector<double> vals(u.time_count());
    for (std::size_t k = 0; k < u.time_count(); ++k)
      vals[k] = spatial_norm(u.slice(k), space);
    return time_norm(u.times, vals, time_p);
  }
  // Space outer: time norm pointwise in x, then the spatial norm.
  ScalarField3D g(u.grid);
  const std::size_t n = g.values.size();
  std::vector<double> tv(u.time_count());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < u.time_count(); ++k) tv[k] = std::abs(u.frames[k][i]);
    g.values[i] = time_norm(u.times, tv, time_p);
  }
  return spatial_norm(g, space);
}

ScalarField3D maximal_function(const SpacetimeField& u) {
  u.validate();
  ScalarField3D g(u.grid);
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    double m = 0.0;
    for (std::size_t k = 0; k < u.time_count(); ++k)
      m = std::max(m, std::abs(u.frames[k][i]));
    g.values[i] = m;
  }
  return g;
}

double sobolev_rhs(const ScalarField3D& f, double s) {
  if (s <= -1.5)
    throw std::invalid_argument("sobolev_rhs: s <= -3/2 is not locally integrable");
  const int n = f.grid.points_per_axis;
  const std::int64_t N = f.grid.count();
  std::vector<complexd> buf(f.values);
  fftw_plan plan = fftw_plan_dft_3d(
      n, n, n, reinterpret_cast<fftw_complex*>(buf.data()),
      reinterpret_cast<fftw_complex*>(buf.data()), FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  const double h3 = std::pow(f.grid.spacing(), 3);
  // wavenumber spacing of the n-periodic sample sequence, so grid plane waves
  // pick up exactly |xi|^s
  const double base = 2.0 * M_PI / (n * f.grid.spacing());
  KahanSum acc;
  for (std::int64_t idx = 0; idx < N; ++idx) {
    auto [ix, iy, iz] = f.grid.unpack(idx);
    const int kx = ix <= n / 2 ? ix : ix - n;
    const int ky = iy <= n / 2 ? iy : iy - n;
    const int kz = iz <= n / 2 ? iz : iz - n;
    if (kx == 0 && ky == 0 && kz == 0) continue;  // zero mode carries no seminorm
    const double xi2 = base * base * (double(kx) * kx + double(ky) * ky + double(kz) * kz);
    acc.add(std::pow(xi2, s) * std::norm(buf[static_cast<std::size_t>(idx)]));
  }
  return std::sqrt(acc.value() * h3 / double(N));
}

std::vector<EstimateSpec> estimate_catalog() {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<EstimateSpec> cat;
  auto put = [&](EstimateSpec e) { cat.push_back(std::move(e)); };

  put({"sine-Linf-L1t-Kato",
       "||sin(t sqrt H) Pc f / sqrt H||_{L^inf_x L^1_t} <= C ||f||_K",
       PropagatorKind::Sine, {SpaceNorm::Kind::Linf, 0}, 1.0, NormOrder::SpaceOuter,
       false, EstimateSpec::Rhs::Kato, 0.0});
  put({"t-weighted-sine",
       "||t sin(t sqrt H) Pc f / sqrt H||_{L^inf_x L^1_t} <= C ||f||_1",
       PropagatorKind::Sine, {SpaceNorm::Kind::Linf, 0}, 1.0, NormOrder::SpaceOuter,
       true, EstimateSpec::Rhs::L1, 0.0});
  put({"sine-weak3-L1t",
       "||sin(t sqrt H) Pc f / sqrt H||_{weakL3_x L^1_t} <= C ||f||_1",
       PropagatorKind::Sine, {SpaceNorm::Kind::WeakL3, 0}, 1.0, NormOrder::SpaceOuter,
       false, EstimateSpec::Rhs::L1, 0.0});
  put({"sine-Linf-L2t",
       "||sin(t sqrt H) Pc f / sqrt H||_{L^inf_x L^2_t} <= C ||f||_2",
       PropagatorKind::Sine, {SpaceNorm::Kind::Linf, 0}, 2.0, NormOrder::SpaceOuter,
       false, EstimateSpec::Rhs::L2, 0.0});
  put({"t-weighted-cos-grad",
       "||t cos(t sqrt H) Pc f||_{L^inf_x L^1_t} <= C ||grad f||_1",
       PropagatorKind::Cosine, {SpaceNorm::Kind::Linf, 0}, 1.0, NormOrder::SpaceOuter,
       true, EstimateSpec::Rhs::GradL1, 0.0});
  put({"cos-Linf-L1t-DeltaL1",
       "||cos(t sqrt H) Pc f||_{L^inf_x L^1_t} <= C ||Delta f||_1",
       PropagatorKind::Cosine, {SpaceNorm::Kind::Linf, 0}, 1.0, NormOrder::SpaceOuter,
       false, EstimateSpec::Rhs::DeltaL1, 0.0});
  put({"cos-weak3-Linft-DeltaL1",
       "||cos(t sqrt H) Pc f||_{weakL3_x L^inf_t} <= C ||Delta f||_1",
       PropagatorKind::Cosine, {SpaceNorm::Kind::WeakL3, 0}, inf, NormOrder::SpaceOuter,
       false, EstimateSpec::Rhs::DeltaL1, 0.0});
  put({"maximal-L62",
       "||cos(t sqrt H) Pc f||_{L^{6,2}_x L^inf_t} <= C ||f||_{Hdot^1}",
       PropagatorKind::Cosine, {SpaceNorm::Kind::LorentzQ2, 6.0}, inf,
       NormOrder::SpaceOuter, false, EstimateSpec::Rhs::HdotS, 1.0});
  put({"strichartz-L4",
       "||sin(t sqrt H) Pc f / sqrt H||_{L^4_t L^4_x} <= C ||f||_{Hdot^{-1/2}}",
       PropagatorKind::Sine, {SpaceNorm::Kind::Lq, 4.0}, 4.0, NormOrder::TimeOuter,
       false, EstimateSpec::Rhs::HdotS, -0.5});
  put({"sharp-L4-cos",
       "||cos(t sqrt H) Pc f||_{L^4_t L^4_x} <= C ||f||_{Hdot^{1/2}}",
       PropagatorKind::Cosine, {SpaceNorm::Kind::Lq, 4.0}, 4.0, NormOrder::TimeOuter,
       false, EstimateSpec::Rhs::HdotS, 0.5});
  return cat;
}

EstimateSpec find_estimate(const std::string& id) {
  for (auto& e : estimate_catalog())
    if (e.estimate_id == id) return e;
  throw std::invalid_argument("unknown estimate id: " + id);
}

void write_estimate_catalog_json(const std::string& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : estimate_catalog())
    arr.push_back({{"estimate_id", e.estimate_id}, {"description", e.description}});
  std::ofstream out(path);
  out << arr.dump(2) << "\n";
}

std::string EstimateReport::to_json() const {
  nlohmann::json j;
  j["estimate_id"] = estimate_id;
  j["max_ratio"] = max_ratio;
  j["scaling_drift"] = scaling_drift;
  j["members"] = nlohmann::json::array();
  for (const auto& m : members) {
    nlohmann::json e{{"name", m.name}, {"lhs", m.lhs}, {"rhs", m.rhs}, {"ratio", m.ratio}};
    if (m.skipped) e["skipped"] = m.reason;
    j["members"].push_back(e);
  }
  return j.dump(2);
}

void EstimateReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  out << "name,lhs,rhs,ratio\n";
  for (const auto& m : members)
    out << m.name << "," << m.lhs << "," << m.rhs << "," << m.ratio << "\n";
}

std::vector<std::pair<std::string, ScalarField3D>> standard_family(const Grid3D& g) {
  const double L = g.half_width;
  auto bump = [](double q) {  // smooth, compactly supported in q < 1
    return q < 1.0 ? std::exp(-1.0 / (1.0 - q)) : 0.0;
  };
  auto radial = [&](double R) {
    return [=](double x, double y, double z) -> complexd {
      return bump((x * x + y * y + z * z) / (R * R));
    };
  };
  std::vector<std::pair<std::string, ScalarField3D>> fam;
  fam.emplace_back("bump-narrow",
                   ScalarField3D::from_function(g, radial(0.15 * L), 0.15 * L));
  fam.emplace_back("bump-medium",
                   ScalarField3D::from_function(g, radial(0.30 * L), 0.30 * L));
  fam.emplace_back("bump-wide",
                   ScalarField3D::from_function(g, radial(0.45 * L), 0.45 * L));
  const double a = 0.40 * L, b = 0.25 * L, c = 0.15 * L;
  fam.emplace_back("anisotropic",
                   ScalarField3D::from_function(
                       g,
                       [&](double x, double y, double z) -> complexd {
                         return bump(x * x / (a * a) + y * y / (b * b) + z * z / (c * c));
                       },
                       a));
  const double R2 = 0.15 * L, off = 0.25 * L;
  fam.emplace_back("two-bump",
                   ScalarField3D::from_function(
                       g,
                       [&](double x, double y, double z) -> complexd {
                         const double q1 =
                             ((x - off) * (x - off) + y * y + z * z) / (R2 * R2);
                         const double q2 =
                             ((x + off) * (x + off) + y * y + z * z) / (R2 * R2);
                         return bump(q1) + 0.7 * bump(q2);
                       },
                       off + R2));
  fam.emplace_back("modulated",
                   ScalarField3D::from_function(
                       g,
                       [&](double x, double y, double z) -> complexd {
                         return std::cos(6.0 * x / L) *
                                bump((x * x + y * y + z * z) / (0.09 * L * L));
                       },
                       0.30 * L));
  return fam;
}

namespace {

double rhs_norm(const ScalarField3D& f, const EstimateSpec& spec) {
  switch (spec.rhs) {
    case EstimateSpec::Rhs::L1:
      return f.l1_norm();
    case EstimateSpec::Rhs::L2:
      return f.l2_norm();
    case EstimateSpec::Rhs::Kato:
      return kato_norm(f).value;
    case EstimateSpec::Rhs::GradL1:
      return l1_of_gradient(f);
    case EstimateSpec::Rhs::DeltaL1:
      return discrete_laplacian(f).l1_norm();
    case EstimateSpec::Rhs::HdotS:
      return sobolev_rhs(f, spec.s);
  }
  throw std::logic_error("unknown rhs");
}

ScalarField3D rescale_field(const ScalarField3D& f, double alpha, double amp) {
  FieldSampler s(f);
  std::optional<double> supp;
  if (f.support_radius) supp = *f.support_radius / alpha;
  return ScalarField3D::from_function(
      f.grid,
      [&](double x, double y, double z) { return amp * s(alpha * x, alpha * y, alpha * z); },
      supp);
}

}  // namespace

EstimateReport verify_estimate(const EstimateSpec& spec,
                               const std::vector<std::pair<std::string, ScalarField3D>>& family,
                               const ScalarField3D& V, const PointSpectrum& pt,
                               const VerifyOptions& opts) {
  EstimateReport report;
  report.estimate_id = spec.estimate_id;
  std::vector<double> alphas = opts.with_scaling ? opts.alphas : std::vector<double>{1.0};
  if (std::find(alphas.begin(), alphas.end(), 1.0) == alphas.end()) alphas.push_back(1.0);

  std::vector<double> per_alpha_max;
  for (double alpha : alphas) {
    ScalarField3D Va = alpha == 1.0 ? V : rescale_field(V, alpha, alpha * alpha);
    PointSpectrum pta = pt;
    if (alpha != 1.0 && !pt.eigenvalues.empty()) pta = point_spectrum_single_box(Va);

    std::vector<double> times(static_cast<std::size_t>(opts.t_steps));
    const double T = opts.t_max / alpha;
    for (int k = 0; k < opts.t_steps; ++k)
      times[static_cast<std::size_t>(k)] = -T + 2.0 * T * k / (opts.t_steps - 1);

    double amax = 0.0;
    for (const auto& [name, f] : family) {
      ScalarField3D fa = alpha == 1.0 ? f : rescale_field(f, alpha, 1.0);
      EstimateMember m;
      m.name = name;
      const double rhs = rhs_norm(fa, spec);
      if (!(rhs > 1e-300)) {
        m.skipped = true;
        m.reason = "rhs norm vanishes";
        if (alpha == 1.0) report.members.push_back(m);
        continue;
      }
      ScalarField3D fp = pc_project(fa, pta);
      StonePlan plan(fp, Va, opts.lambda_max * alpha, opts.dlambda * alpha);
      SpacetimeField u(fa.grid, times);
      for (std::size_t k = 0; k < times.size(); ++k) {
        ScalarField3D frame = plan.evaluate(times[k], spec.kind);
        if (spec.t_weight)
          for (auto& v : frame.values) v *= std::abs(times[k]);
        u.set_slice(k, frame);
      }
      m.lhs = reversed_norm(u, spec.lhs_space, spec.lhs_time_p, spec.lhs_order);
      m.rhs = rhs;
      m.ratio = m.lhs / m.rhs;
      amax = std::max(amax, m.ratio);
      if (alpha == 1.0) report.members.push_back(m);
    }
    per_alpha_max.push_back(amax);
    if (alpha == 1.0) report.max_ratio = amax;
  }
  const double hi = *std::max_element(per_alpha_max.begin(), per_alpha_max.end());
  const double lo = *std::min_element(per_alpha_max.begin(), per_alpha_max.end());
  report.scaling_drift = hi > 0.0 ? (hi - lo) / (0.5 * (hi + lo)) : 0.0;
  return report;
}

std::vector<DecayPoint> dispersive_decay_trace(PropagatorKind kind,
                                               const ScalarField3D& data,
                                               const ScalarField3D& V,
                                               const std::vector<double>& times,
                                               double lambda_max, double dlambda) {
  StonePlan plan(data, V, lambda_max, dlambda);
  std::vector<DecayPoint> trace;
  trace.reserve(times.size());
  for (double t : times) {
    const double sup = plan.evaluate(t, kind).max_abs();
    trace.push_back({t, sup, std::abs(t) * sup});
  }
  return trace;
}

std::vector<std::pair<double, double>> ae_convergence_probe(
    const ScalarField3D& f0, const ScalarField3D& f1, const ScalarField3D& V,
    const std::vector<double>& taus, const std::vector<std::array<double, 3>>& probes,
    double lambda_max, double dlambda) {
  if (taus.empty() || probes.empty())
    throw std::invalid_argument("ae_convergence_probe: empty input");
  StonePlan plan0(f0, V, lambda_max, dlambda);
  StonePlan plan1(f1, V, lambda_max, dlambda);
  FieldSampler s0(f0);
  std::vector<std::pair<double, double>> out;
  const int samples_per_tau = 8;
  for (double tau : taus) {
    double worst = 0.0;
    for (int j = 1; j <= samples_per_tau; ++j) {
      for (int sgn : {-1, 1}) {
        const double t = sgn * tau * j / samples_per_tau;
        ScalarField3D u = plan0.evaluate(t, PropagatorKind::Cosine);
        ScalarField3D v = plan1.evaluate(t, PropagatorKind::Sine);
        FieldSampler su(u), sv(v);
        for (const auto& p : probes) {
          const complexd diff =
              su(p[0], p[1], p[2]) + sv(p[0], p[1], p[2]) - s0(p[0], p[1], p[2]);
          worst = std::max(worst, std::abs(diff));
        }
      }
    }
    out.emplace_back(tau, worst);
  }
  return out;
}

}  // namespace conewave
