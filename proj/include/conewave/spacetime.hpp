#pragma once

#include <string>
#include <vector>

#include "conewave/core.hpp"

namespace conewave {

/// Samples u(t_k, x_i) on a shared space grid and a strictly increasing time
/// grid. Frames are stored densely, x-fastest like ScalarField3D.
struct SpacetimeField {
  Grid3D grid;
  std::vector<double> times;
  std::vector<std::vector<complexd>> frames;  // frames[k] has grid.count() entries

  SpacetimeField() = default;
  SpacetimeField(const Grid3D& g, std::vector<double> t);

  void validate() const;
  std::size_t time_count() const { return times.size(); }

  ScalarField3D slice(std::size_t k) const;
  void set_slice(std::size_t k, const ScalarField3D& f);

  /// (t_k, sup_x |u(t_k, x)|) trace.
  std::vector<std::pair<double, double>> sup_trace() const;
  void write_sup_trace_csv(const std::string& path) const;

  /// Frame files <prefix>_k.wcf plus a JSON manifest <prefix>.json.
  void write(const std::string& prefix) const;
  static SpacetimeField read(const std::string& prefix);
};

}  // namespace conewave
