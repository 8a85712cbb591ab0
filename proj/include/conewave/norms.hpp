#pragma once

#include <string>
#include <vector>

#include "conewave/core.hpp"

namespace conewave {

enum class NormId { L1, Lp, LorentzPQ, Kato, KatoTheta, WeakL3, W11, SupWeighted2 };

struct NormReport {
  NormId norm_id = NormId::L1;
  double value = 0.0;
  std::optional<std::array<double, 3>> attained_at;  // sup-type norms only
  bool coarse_grid_warning = false;
  double theta = 0.0, p = 0.0, q = 0.0;  // parameters where applicable

  std::string to_json() const;
};

/// sup_y sum_x |V(x)| / |x-y| h^3, diagonal cell regularized by the exact
/// cube integral; sup over grid points plus a golden-section refinement pass
/// around the argmax.
NormReport kato_norm(const ScalarField3D& V);

/// sup_x sum_y |f(y)| / |x-y|^theta h^3, 0 <= theta <= 1; theta=0 is L^1,
/// theta=1 is the Kato norm.
NormReport kato_theta_norm(const ScalarField3D& f, double theta);

/// Lorentz L^{p,q} quasinorm from the decreasing rearrangement of |f| over
/// cells of measure h^3; q = inf means weak-L^p.
NormReport lorentz_norm(const ScalarField3D& f, double p, double q);

struct KatoModulus {
  double radius;
  double local_value;   // sup_y over {|x-y| < radius}
  double distal_value;  // sup_y over {|x-y| > radius}
};
std::vector<KatoModulus> kato_moduli(const ScalarField3D& V,
                                     const std::vector<double>& radii);

struct SobolevCheck {
  std::string inequality_id;
  double lhs = 0.0, rhs = 0.0, constant = 0.0;  // registry constant in lhs <= C rhs
  bool holds = false;
};
/// Checks the registry inequalities: ||f||_K <= ||grad f||_1,
/// ||f||_inf <= (4pi)^{-1} ||D^2 f||_K, and sup_x sum |f|/|x-y|^2 <= ||grad f||_K.
std::vector<SobolevCheck> sobolev_checks(const ScalarField3D& f);

/// Central-difference gradient components (second order, one-sided at the
/// boundary); used by sobolev_checks and the propagators.
std::array<ScalarField3D, 3> gradient(const ScalarField3D& f);

double l1_of_gradient(const ScalarField3D& f);

}  // namespace conewave
