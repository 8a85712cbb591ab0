#pragma once

#include <functional>
#include <memory>

#include "conewave/cone_kernel.hpp"
#include "conewave/core.hpp"
#include "conewave/spacetime.hpp"

namespace conewave {

/// V(x) e^{± i lambda |x-y|} / (4 pi |x-y|) h^3, rows restricted to supp V,
/// diagonal cell regularized.
OperatorMatrix vr0_matrix(const ScalarField3D& V, double lambda, int sign);

struct SpectralScan {
  std::vector<double> lambdas;
  std::vector<double> min_singular;
  std::vector<double> condition;
  bool zero_resonance_flag = false;
  double threshold = 0.0;
  std::vector<double> resonance_candidates;

  std::string to_json() const;
};

/// Min singular value of I + V R0^+(lambda^2) on m uniform samples of
/// [0, lambda_max]; the zero-resonance flag fires when the lambda = 0 value
/// drops below threshold_scale times the matrix norm.
SpectralScan resonance_scan(const ScalarField3D& V, double lambda_max, int m,
                            double threshold_scale = 1e-3);

/// Smallest eigenvalue of the compression of I + V R0^+(0) onto supp V for
/// the well -c * chi_{B(0,1)}; used by the bisection wrapper below. The
/// kernel is symmetric positive for c > 0, so the zero crossing in c marks
/// the zero-energy resonance.
double well_zero_energy_indicator(const ScalarField3D& minus_chi, double c);

/// Bisection in c for the critical depth of V = -c chi_{B(0,1)} on the given
/// grid (indicator field passed as chi, i.e. +1 on the ball).
double well_critical_depth(const ScalarField3D& chi, double c_lo, double c_hi,
                           double tol);

struct PointSpectrum {
  std::vector<double> eigenvalues;          // negative, increasing
  std::vector<ScalarField3D> eigenfunctions;  // L2-normalized

  std::string to_json() const;
};

/// Negative eigenvalues of -Laplace_h + V with zero boundary conditions,
/// found by shifted inverse iteration with a fast-sine-transform
/// preconditioner and filtered for stability under box enlargement.
PointSpectrum point_spectrum(const ScalarField3D& V, double stability_rel = 0.01);

/// Same solver without the two-box stability filter (used internally and by
/// convergence studies).
PointSpectrum point_spectrum_single_box(const ScalarField3D& V);

ScalarField3D pc_project(const ScalarField3D& f, const PointSpectrum& spec);

enum class PropagatorKind { Sine, Cosine, SqrtHSine, Exp };

/// Precomputed Stone-formula data for one (f, V) pair: stores
/// g(lambda) = Im[ R_V^+(lambda^2) f ] on a uniform lambda grid; any time
/// evaluation is then a Filon-weighted sum over the grid. Requires real f and
/// real V (the imaginary part is taken pointwise).
class StonePlan {
 public:
  StonePlan(const ScalarField3D& f, const ScalarField3D& V, double lambda_max,
            double dlambda);

  /// Sine kind means sin(t sqrt H) P_c / sqrt H; SqrtHSine drops the 1/sqrt H.
  ScalarField3D evaluate(double t, PropagatorKind kind) const;

  double lambda_max() const { return lambda_max_; }

 private:
  Grid3D grid_;
  double lambda_max_ = 0.0, dlambda_ = 0.0;
  std::vector<std::vector<complexd>> g_;  // per lambda node
};

/// One-shot perturbed propagator (builds a StonePlan internally).
ScalarField3D perturbed_propagator(const ScalarField3D& f, double t,
                                   PropagatorKind kind, const ScalarField3D& V,
                                   double lambda_max, double dlambda);

/// Leapfrog integration of d^2_t u - Laplace u + V u + quintic_sign u^5 = F
/// with zero boundary; frames recorded at the requested times (snapped to
/// steps). F adds its contribution to the accumulator for the current time.
using ForcingFn = std::function<void(double t, std::vector<complexd>& accum)>;
SpacetimeField fdtd_evolve(const ScalarField3D& f0, const ScalarField3D& f1,
                           const ForcingFn& F, const ScalarField3D& V,
                           const std::vector<double>& record_times, double dt,
                           int quintic_sign = 0);

/// Discrete energy ||grad u||^2 + ||u_t||^2 + int V |u|^2 (+ sign/3 int u^6)
/// from two consecutive frames.
double fdtd_energy(const ScalarField3D& u_prev, const ScalarField3D& u_next,
                   double dt, const ScalarField3D& V, int quintic_sign = 0);

struct NormEquivalenceReport {
  double min_l1_ratio = 0.0, max_l1_ratio = 0.0;
  double min_kato_ratio = 0.0, max_kato_ratio = 0.0;
};
/// Ratios ||(-Laplace + V) f|| / ||Laplace f|| in L1 and Kato norms across a
/// family of fields.
NormEquivalenceReport norm_equivalence_check(const ScalarField3D& V,
                                             const std::vector<ScalarField3D>& family);

/// 7-point discrete Laplacian with zero boundary.
ScalarField3D discrete_laplacian(const ScalarField3D& f);

}  // namespace conewave
