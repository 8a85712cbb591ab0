#pragma once

#include <string>
#include <vector>

#include "conewave/core.hpp"
#include "conewave/spacetime.hpp"
#include "conewave/spectral.hpp"

namespace conewave {

struct SpaceNorm {
  enum class Kind { Lq, Linf, LorentzQ2, Kato, WeakL3 };
  Kind kind = Kind::Lq;
  double q = 2.0;  // Lq exponent or Lorentz first index
};

enum class NormOrder { SpaceOuter, TimeOuter };

/// Reversed space-time norm: SpaceOuter computes the time norm at each point
/// first (the stronger ordering), TimeOuter the spatial norm per slice.
/// time_p = inf gives the sup in time; the K* spatial norm is represented by
/// its weak-L^3 surrogate.
double reversed_norm(const SpacetimeField& u, const SpaceNorm& space, double time_p,
                     NormOrder order);

/// Pointwise sup over the time grid of |u|.
ScalarField3D maximal_function(const SpacetimeField& u);

/// Homogeneous Sobolev seminorm via the box-periodic discrete |xi|^s
/// multiplier (surrogate for the whole-space seminorm; exact for s = 0).
double sobolev_rhs(const ScalarField3D& f, double s);

struct EstimateSpec {
  std::string estimate_id;
  std::string description;  // the inequality in plain text
  PropagatorKind kind = PropagatorKind::Sine;
  SpaceNorm lhs_space;
  double lhs_time_p = 1.0;
  NormOrder lhs_order = NormOrder::SpaceOuter;
  bool t_weight = false;  // multiply the evolution by |t| before taking norms
  enum class Rhs { L1, L2, Kato, GradL1, DeltaL1, HdotS } rhs = Rhs::L1;
  double s = 0.0;  // Sobolev index when rhs = HdotS
};

std::vector<EstimateSpec> estimate_catalog();
EstimateSpec find_estimate(const std::string& id);
void write_estimate_catalog_json(const std::string& path);

struct EstimateMember {
  std::string name;
  double lhs = 0.0, rhs = 0.0, ratio = 0.0;
  bool skipped = false;
  std::string reason;
};

struct EstimateReport {
  std::string estimate_id;
  std::vector<EstimateMember> members;
  double max_ratio = 0.0;
  double scaling_drift = 0.0;  // relative spread of max_ratio across alphas

  std::string to_json() const;
  void write_csv(const std::string& path) const;
};

struct VerifyOptions {
  double t_max = 4.0;
  int t_steps = 33;         // samples on [-t_max, t_max]
  double lambda_max = 12.0;
  double dlambda = 0.1;
  std::vector<double> alphas = {0.5, 1.0, 2.0};
  bool with_scaling = true;
};

/// Named data family (isotropic bumps at three widths, an anisotropic bump, a
/// two-bump superposition, a modulated bump), all supported well inside the box.
std::vector<std::pair<std::string, ScalarField3D>> standard_family(const Grid3D& g);

/// Evolve every family member (P_c applied first), compute lhs/rhs per the
/// spec, and measure the ratio spread across the rescaling family
/// (x, t) -> (alpha x, alpha t), V -> alpha^2 V(alpha .).
EstimateReport verify_estimate(const EstimateSpec& spec,
                               const std::vector<std::pair<std::string, ScalarField3D>>& family,
                               const ScalarField3D& V, const PointSpectrum& pt,
                               const VerifyOptions& opts);

struct DecayPoint {
  double t, sup_x, t_sup;
};
std::vector<DecayPoint> dispersive_decay_trace(PropagatorKind kind,
                                               const ScalarField3D& data,
                                               const ScalarField3D& V,
                                               const std::vector<double>& times,
                                               double lambda_max, double dlambda);

/// For each tau in the grid (decreasing), the sup over probe points of
/// max_{|t| <= tau} |u(t,x) - f0(x)| where u is the linear evolution.
std::vector<std::pair<double, double>> ae_convergence_probe(
    const ScalarField3D& f0, const ScalarField3D& f1, const ScalarField3D& V,
    const std::vector<double>& taus, const std::vector<std::array<double, 3>>& probes,
    double lambda_max, double dlambda);

}  // namespace conewave
