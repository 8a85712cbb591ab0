#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "conewave/core.hpp"
#include "conewave/spacetime.hpp"
#include "conewave/spectral.hpp"

namespace conewave {

/// Linear wave flow interface used by the Duhamel iteration. sine_flow binds
/// the data once and returns a closure cheap to evaluate at many times.
class Propagator {
 public:
  virtual ~Propagator() = default;
  virtual std::function<ScalarField3D(double)> sine_flow(const ScalarField3D& f) const = 0;
  virtual std::function<ScalarField3D(double)> cosine_flow(const ScalarField3D& f) const = 0;
};

/// V = 0 flow through the spherical-mean formulas.
class FreePropagator : public Propagator {
 public:
  explicit FreePropagator(int sphere_degree = 23);
  std::function<ScalarField3D(double)> sine_flow(const ScalarField3D& f) const override;
  std::function<ScalarField3D(double)> cosine_flow(const ScalarField3D& f) const override;

 private:
  int degree_;
};

/// Perturbed flow through precomputed spectral-measure plans; projects the
/// data onto the continuous subspace first.
class StonePropagator : public Propagator {
 public:
  StonePropagator(ScalarField3D V, PointSpectrum pt, double lambda_max, double dlambda);
  std::function<ScalarField3D(double)> sine_flow(const ScalarField3D& f) const override;
  std::function<ScalarField3D(double)> cosine_flow(const ScalarField3D& f) const override;

 private:
  ScalarField3D V_;
  PointSpectrum pt_;
  double lambda_max_, dlambda_;
};

/// u(t_k) = int_0^{t_k} sin((t_k - s) sqrt H) Pc / sqrt H  F(s) ds by the
/// trapezoid rule on the source's own time grid (times must start at 0).
SpacetimeField duhamel_sine(const SpacetimeField& F, const Propagator& prop);

struct FixedPointState {
  bool converged = false;
  std::string message;
  std::vector<double> iterate_norms;      // reversed L^{6,2}_x L^inf_t norm per iterate
  std::vector<double> contraction_ratios;  // ||u_{n+1}-u_n|| / ||u_n - u_{n-1}||
  double quintic_norm = 0.0;               // ||u^5||_{L^{6/5,2}_x L^inf_t}
  double quintic_bound = 0.0;              // ||u||^5 in the iteration norm
  SpacetimeField solution;
};

struct QuinticOptions {
  int sign = +1;               // +1 defocusing, -1 focusing: u'' - Lap u + V u = F - sign u^5
  double small_data_gate = 0.1;
  int max_iterations = 12;
  double tolerance = 1e-6;     // absolute increment in the iteration norm
};

/// Small-data fixed point for the quintic equation on the time grid of F
/// (or the supplied grid when F is absent). Flags "data too large" after
/// three consecutive non-contracting sweeps.
FixedPointState solve_quintic(const ScalarField3D& f0, const ScalarField3D& f1,
                              const SpacetimeField& F, const Propagator& prop,
                              const QuinticOptions& opts);

/// Iteration norm used by the fixed point: L^{6,2}_x outer, sup in time.
double iteration_norm(const SpacetimeField& u);

}  // namespace conewave
