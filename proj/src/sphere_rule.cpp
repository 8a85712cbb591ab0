#include "conewave/sphere_rule.hpp"

#include <cmath>
#include <stdexcept>

namespace conewave {

namespace {
// Gauss-Legendre on [-1,1] by Newton iteration on Legendre roots.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * t * p1 - j * p2) / (j + 1);
      }
      double dp = n * (t * p0 - p1) / (t * t - 1.0);
      double dt = p0 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    double p0 = 1.0, p1 = 0.0;
    for (int j = 0; j < n; ++j) {
      double p2 = p1;
      p1 = p0;
      p0 = ((2 * j + 1) * t * p1 - j * p2) / (j + 1);
    }
    double dp = n * (t * p0 - p1) / (t * t - 1.0);
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}
}  // namespace

SphereRule SphereRule::product_rule(int degree) {
  if (degree < 1) throw std::invalid_argument("SphereRule: degree >= 1 required");
  // n_theta GL points integrate cos-polynomials up to 2*n_theta - 1;
  // n_phi equispaced phi nodes handle harmonics up to n_phi - 1.
  int n_theta = degree / 2 + 1;
  int n_phi = degree + 1;
  std::vector<double> ct, wt;
  gauss_legendre(n_theta, ct, wt);

  SphereRule rule;
  rule.degree = degree;
  rule.nodes.reserve(static_cast<std::size_t>(n_theta) * n_phi);
  rule.weights.reserve(rule.nodes.capacity());
  double wphi = 2.0 * M_PI / n_phi;
  for (int i = 0; i < n_theta; ++i) {
    double c = ct[i];
    double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (int j = 0; j < n_phi; ++j) {
      double phi = wphi * j;
      rule.nodes.push_back({s * std::cos(phi), s * std::sin(phi), c});
      rule.weights.push_back(wt[i] * wphi);
    }
  }
  return rule;
}

}  // namespace conewave
