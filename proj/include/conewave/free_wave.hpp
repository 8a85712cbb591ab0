#pragma once

#include "conewave/core.hpp"
#include "conewave/sphere_rule.hpp"

namespace conewave {

/// Tricubic (Catmull-Rom, separable) point evaluation of a grid field.
/// Points outside the box evaluate to zero; callers must only rely on that
/// when the field has declared compact support.
class FieldSampler {
 public:
  explicit FieldSampler(const ScalarField3D& f) : f_(&f) {}
  complexd operator()(double x, double y, double z) const;

 private:
  const ScalarField3D* f_;
};

/// Fourth-order central difference along one axis (second order one-sided at
/// the boundary).
ScalarField3D gradient4(const ScalarField3D& f, int axis);

/// (4pi)^{-1} sum_k w_k f(x + r w_k).
complexd spherical_mean(const FieldSampler& f, const std::array<double, 3>& x,
                        double r, const SphereRule& rule);

/// Kirchhoff sine propagator: t * mean of f1 over the sphere of radius |t|.
ScalarField3D sine_free(const ScalarField3D& f1, double t, const SphereRule& rule);

/// Kirchhoff cosine propagator:
/// (4pi)^{-1} sum_k w_k [ f0(x+|t|w) + |t| w . grad f0(x+|t|w) ].
ScalarField3D cosine_free(const ScalarField3D& f0, double t, const SphereRule& rule);

enum class WaveKind { Sine, Cosine };

/// Exact radial evolution through the 1D reduction w = r*v: cosine data give
/// u = (w(r+t)+w(r-t))/(2r), sine data u = (W(r+t)-W(r-t))/(2r) with W the
/// antiderivative of w; Taylor limits at r = 0.
RadialProfile radial_oracle(const RadialProfile& profile, double t, WaveKind kind);

/// Convolution with e^{i sqrt(z) |x-y|} / (4 pi |x-y|), principal branch with
/// Im sqrt(z) > 0; z on [0, inf) is rejected (use the boundary variant).
ScalarField3D free_resolvent_apply(const ScalarField3D& f, complexd z);

/// Boundary values R_0^{±}(lambda^2): kernel e^{± i lambda |x-y|}/(4 pi |x-y|).
ScalarField3D free_resolvent_boundary(const ScalarField3D& f, double lambda, int sign);

/// Radial kernel of the half-wave flow smoothed to order s:
/// C_s r^{-1} ( sgn(t-r)/|r-t|^{2-2s} - 1/(r+t)^{2-2s} ); blows up at t = r.
/// The s -> 1 limit is the sharp light-cone kernel chi_{t<r}/(4 pi r).
double ks_kernel(double r, double t, double s);
double ks_constant(double s);

}  // namespace conewave
