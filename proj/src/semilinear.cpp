#include "conewave/semilinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "conewave/free_wave.hpp"
#include "conewave/norms.hpp"
#include "conewave/sphere_rule.hpp"
#include "conewave/strichartz.hpp"

namespace conewave {

FreePropagator::FreePropagator(int sphere_degree) : degree_(sphere_degree) {}

std::function<ScalarField3D(double)> FreePropagator::sine_flow(
    const ScalarField3D& f) const {
  auto rule = std::make_shared<SphereRule>(SphereRule::product_rule(degree_));
  ScalarField3D copy = f;
  return [copy, rule](double t) { return sine_free(copy, t, *rule); };
}

std::function<ScalarField3D(double)> FreePropagator::cosine_flow(
    const ScalarField3D& f) const {
  auto rule = std::make_shared<SphereRule>(SphereRule::product_rule(degree_));
  ScalarField3D copy = f;
  return [copy, rule](double t) { return cosine_free(copy, t, *rule); };
}

StonePropagator::StonePropagator(ScalarField3D V, PointSpectrum pt, double lambda_max,
                                 double dlambda)
    : V_(std::move(V)), pt_(std::move(pt)), lambda_max_(lambda_max), dlambda_(dlambda) {}

std::function<ScalarField3D(double)> StonePropagator::sine_flow(
    const ScalarField3D& f) const {
  auto plan = std::make_shared<StonePlan>(pc_project(f, pt_), V_, lambda_max_, dlambda_);
  return [plan](double t) { return plan->evaluate(t, PropagatorKind::Sine); };
}

std::function<ScalarField3D(double)> StonePropagator::cosine_flow(
    const ScalarField3D& f) const {
  auto plan = std::make_shared<StonePlan>(pc_project(f, pt_), V_, lambda_max_, dlambda_);
  return [plan](double t) { return plan->evaluate(t, PropagatorKind::Cosine); };
}

SpacetimeField duhamel_sine(const SpacetimeField& F, const Propagator& prop) {
  F.validate();
  if (F.times.empty() || std::abs(F.times.front()) > 1e-14)
    throw std::invalid_argument("duhamel_sine: time grid must start at 0");
  const std::size_t nt = F.time_count();
  SpacetimeField u(F.grid, F.times);

  // One flow per source slice, evaluated at every later t_k - s_j.
  std::vector<std::function<ScalarField3D(double)>> flows(nt);
  for (std::size_t j = 0; j < nt; ++j) flows[j] = prop.sine_flow(F.slice(j));

  for (std::size_t k = 0; k < nt; ++k) {
    std::vector<complexd> acc(static_cast<std::size_t>(F.grid.count()), complexd(0.0));
    if (k > 0) {
      for (std::size_t j = 0; j <= k; ++j) {
        double w;  // trapezoid weight on [0, t_k]
        if (j == 0)
          w = 0.5 * (F.times[1] - F.times[0]);
        else if (j == k)
          w = 0.5 * (F.times[k] - F.times[k - 1]);
        else
          w = 0.5 * (F.times[j + 1] - F.times[j - 1]);
        ScalarField3D g = flows[j](F.times[k] - F.times[j]);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * g.values[i];
      }
    }
    u.frames[k] = std::move(acc);
  }
  return u;
}

double iteration_norm(const SpacetimeField& u) {
  return reversed_norm(u, {SpaceNorm::Kind::LorentzQ2, 6.0},
                       std::numeric_limits<double>::infinity(), NormOrder::SpaceOuter);
}

namespace {

SpacetimeField add_fields(const SpacetimeField& a, const SpacetimeField& b) {
  SpacetimeField out = a;
  for (std::size_t k = 0; k < out.frames.size(); ++k)
    for (std::size_t i = 0; i < out.frames[k].size(); ++i)
      out.frames[k][i] += b.frames[k][i];
  return out;
}

double diff_norm(const SpacetimeField& a, const SpacetimeField& b) {
  SpacetimeField d = a;
  for (std::size_t k = 0; k < d.frames.size(); ++k)
    for (std::size_t i = 0; i < d.frames[k].size(); ++i)
      d.frames[k][i] -= b.frames[k][i];
  return iteration_norm(d);
}

SpacetimeField quintic_source(const SpacetimeField& u, int sign) {
  SpacetimeField F = u;
  for (auto& frame : F.frames)
    for (auto& v : frame) {
      const complexd v2 = v * v;
      v = -double(sign) * v2 * v2 * v;
    }
  return F;
}

}  // namespace

FixedPointState solve_quintic(const ScalarField3D& f0, const ScalarField3D& f1,
                              const SpacetimeField& F, const Propagator& prop,
                              const QuinticOptions& opts) {
  F.validate();
  FixedPointState state;

  SpacetimeField lin(F.grid, F.times);
  auto cflow = prop.cosine_flow(f0);
  auto sflow = prop.sine_flow(f1);
  for (std::size_t k = 0; k < F.times.size(); ++k) {
    ScalarField3D frame = cflow(F.times[k]);
    ScalarField3D s = sflow(F.times[k]);
    for (std::size_t i = 0; i < frame.values.size(); ++i) frame.values[i] += s.values[i];
    lin.set_slice(k, frame);
  }
  bool forced = false;
  for (const auto& frame : F.frames)
    for (const auto& v : frame)
      if (v != complexd(0.0)) forced = true;
  if (forced) lin = add_fields(lin, duhamel_sine(F, prop));

  const double lin_norm = iteration_norm(lin);
  if (lin_norm > opts.small_data_gate) {
    state.message = "data too large";
    state.solution = lin;
    return state;
  }

  SpacetimeField u = lin;
  state.iterate_norms.push_back(iteration_norm(u));
  SpacetimeField prev = lin;
  double prev_incr = -1.0;
  int bad_streak = 0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    SpacetimeField next = add_fields(lin, duhamel_sine(quintic_source(u, opts.sign), prop));
    const double incr = diff_norm(next, u);
    if (prev_incr > 0.0) {
      const double ratio = incr / prev_incr;
      state.contraction_ratios.push_back(ratio);
      bad_streak = ratio >= 1.0 ? bad_streak + 1 : 0;
      if (bad_streak >= 3) {
        state.message = "data too large";
        state.solution = next;
        return state;
      }
    }
    prev = u;
    u = next;
    state.iterate_norms.push_back(iteration_norm(u));
    if (incr < opts.tolerance) {
      state.converged = true;
      break;
    }
    prev_incr = incr;
  }

  // A posteriori Hoelder consistency of the nonlinearity.
  SpacetimeField u5 = quintic_source(u, -1);  // +u^5
  state.quintic_norm = reversed_norm(u5, {SpaceNorm::Kind::LorentzQ2, 1.2},
                                     std::numeric_limits<double>::infinity(),
                                     NormOrder::SpaceOuter);
  const double un = iteration_norm(u);
  state.quintic_bound = std::pow(un, 5);
  state.solution = std::move(u);
  if (state.message.empty())
    state.message = state.converged ? "converged" : "iteration budget exhausted";
  return state;
}

}  // namespace conewave
