#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "conewave/free_wave.hpp"
#include "conewave/semilinear.hpp"
#include "conewave/sphere_rule.hpp"
#include "conewave/strichartz.hpp"

using namespace conewave;

namespace {

ScalarField3D bump(const Grid3D& g, double amp, double R) {
  return ScalarField3D::from_function(
      g,
      [=](double x, double y, double z) -> complexd {
        double q = (x * x + y * y + z * z) / (R * R);
        return q < 1.0 ? amp * std::exp(-1.0 / (1.0 - q)) : 0.0;
      },
      R);
}

std::vector<double> uniform_times(double t_max, int nt) {
  std::vector<double> t;
  for (int k = 0; k < nt; ++k) t.push_back(t_max * k / (nt - 1));
  return t;
}

}  // namespace

TEST_CASE("duhamel with zero source is zero") {
  Grid3D g(2.0, 13);
  SpacetimeField F(g, uniform_times(1.0, 4));
  FreePropagator prop(11);
  auto u = duhamel_sine(F, prop);
  for (const auto& fr : u.frames)
    for (const auto& v : fr) CHECK(std::abs(v) == 0.0);
  // and rejects grids that do not start at 0
  SpacetimeField bad(g, {0.5, 1.0});
  CHECK_THROWS(duhamel_sine(bad, prop));
}

TEST_CASE("duhamel of a constant source starts like t^2/2 F") {
  Grid3D g(2.0, 17);
  auto src = bump(g, 1.0, 0.8);
  SpacetimeField F(g, uniform_times(0.1, 6));
  for (std::size_t k = 0; k < F.time_count(); ++k) F.set_slice(k, src);
  FreePropagator prop(17);
  auto u = duhamel_sine(F, prop);
  CHECK(u.slice(0).max_abs() == 0.0);
  double t = F.times.back();
  auto last = u.slice(F.time_count() - 1);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < last.values.size(); ++i) {
    num += std::norm(last.values[i] - 0.5 * t * t * src.values[i]);
    den += std::norm(0.5 * t * t * src.values[i]);
  }
  CHECK(std::sqrt(num / den) < 0.05);  // next order is O(t^2) relative
}

TEST_CASE("small data contracts and stays near the linear evolution") {
  Grid3D g(2.0, 17);
  auto f0 = bump(g, 0.15, 0.8);
  ScalarField3D f1(g);
  SpacetimeField F(g, uniform_times(1.0, 5));
  FreePropagator prop(17);
  QuinticOptions opts;
  opts.small_data_gate = 0.3;
  opts.tolerance = 1e-12;  // force a few sweeps so contraction ratios appear
  auto st = solve_quintic(f0, f1, F, prop, opts);
  CHECK(st.converged);
  CHECK(st.message == "converged");
  REQUIRE(!st.contraction_ratios.empty());
  for (double r : st.contraction_ratios) CHECK(r < 0.5);
  // a posteriori quintic consistency
  CHECK(st.quintic_norm <= 10.0 * st.quintic_bound + 1e-300);
  CHECK(st.quintic_bound < 1e-3);  // small data -> small nonlinearity
  // the solution is a small perturbation of the linear flow
  auto cflow = prop.cosine_flow(f0);
  double dev = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < F.time_count(); ++k) {
    auto linf = cflow(F.times[k]);
    auto sol = st.solution.slice(k);
    for (std::size_t i = 0; i < sol.values.size(); ++i) {
      dev = std::max(dev, std::abs(sol.values[i] - linf.values[i]));
      scale = std::max(scale, std::abs(linf.values[i]));
    }
  }
  CHECK(dev < 1e-2 * scale);
}

TEST_CASE("focusing and defocusing corrections have opposite sign") {
  Grid3D g(2.0, 17);
  auto f0 = bump(g, 0.05, 0.8);
  ScalarField3D f1(g);
  SpacetimeField F(g, uniform_times(1.0, 5));
  FreePropagator prop(17);
  QuinticOptions defoc, foc;
  foc.sign = -1;
  auto sd = solve_quintic(f0, f1, F, prop, defoc);
  auto sf = solve_quintic(f0, f1, F, prop, foc);
  REQUIRE(sd.converged);
  REQUIRE(sf.converged);
  // linear part cancels in the sum; corrections are opposite to leading order
  auto cflow = prop.cosine_flow(f0);
  double worst = 0.0, corr = 0.0;
  for (std::size_t k = 1; k < F.time_count(); ++k) {
    auto linf = cflow(F.times[k]);
    auto ud = sd.solution.slice(k);
    auto uf = sf.solution.slice(k);
    for (std::size_t i = 0; i < ud.values.size(); ++i) {
      double cd = std::abs(ud.values[i] - linf.values[i]);
      corr = std::max(corr, cd);
      worst = std::max(worst,
                       std::abs(ud.values[i] + uf.values[i] - 2.0 * linf.values[i]));
    }
  }
  CHECK(corr > 0.0);
  CHECK(worst < 0.05 * corr);
}

TEST_CASE("large data trips the smallness gate") {
  Grid3D g(2.0, 13);
  auto f0 = bump(g, 5.0, 0.8);
  ScalarField3D f1(g);
  SpacetimeField F(g, uniform_times(1.0, 4));
  FreePropagator prop(11);
  auto st = solve_quintic(f0, f1, F, prop, {});
  CHECK(!st.converged);
  CHECK(st.message == "data too large");
}

TEST_CASE("stone propagator with V = 0 agrees with the free propagator") {
  Grid3D g(1.5, 15);
  ScalarField3D V(g);
  PointSpectrum none;
  auto f = bump(g, 1.0, 0.8);
  FreePropagator fp(23);
  StonePropagator sp(V, none, 16.0, 0.1);
  auto uf = fp.sine_flow(f)(0.5);
  auto us = sp.sine_flow(f)(0.5);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < uf.values.size(); ++i) {
    num += std::norm(uf.values[i] - us.values[i]);
    den += std::norm(uf.values[i]);
  }
  CHECK(std::sqrt(num / den) < 2e-2);
}

TEST_CASE("iteration norm is the lorentz 6,2 sup-in-time norm") {
  Grid3D g(1.0, 9);
  SpacetimeField u(g, {0.0, 1.0});
  auto f = bump(g, 1.0, 0.6);
  u.set_slice(0, f);
  ScalarField3D half = f;
  for (auto& v : half.values) v *= 0.5;
  u.set_slice(1, half);
  // sup in time is the first slice everywhere, so the norm is that of f
  SpacetimeField one_slice(g, {0.0});
  one_slice.set_slice(0, f);
  double a = iteration_norm(u);
  SpaceNorm l62{SpaceNorm::Kind::LorentzQ2, 6.0};
  double b = reversed_norm(one_slice, l62, std::numeric_limits<double>::infinity(),
                           NormOrder::SpaceOuter);
  CHECK(a == doctest::Approx(b).epsilon(1e-13));
}
