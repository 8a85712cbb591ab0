#pragma once

#include <array>
#include <vector>

namespace conewave {

/// Quadrature rule on the unit sphere: weights sum to 4*pi and polynomials up
/// to the declared algebraic degree integrate exactly. Built as a product of
/// Gauss-Legendre in cos(theta) and a uniform trapezoid in phi.
struct SphereRule {
  std::vector<std::array<double, 3>> nodes;  // unit directions
  std::vector<double> weights;               // sum to 4*pi
  int degree = 0;

  static SphereRule product_rule(int degree);
  std::size_t size() const { return nodes.size(); }
};

}  // namespace conewave
