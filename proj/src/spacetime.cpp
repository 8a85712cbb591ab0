#include "conewave/spacetime.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace conewave {

SpacetimeField::SpacetimeField(const Grid3D& g, std::vector<double> t)
    : grid(g), times(std::move(t)) {
  frames.assign(times.size(),
                std::vector<complexd>(static_cast<std::size_t>(g.count()), complexd(0.0)));
  validate();
}

void SpacetimeField::validate() const {
  for (std::size_t k = 1; k < times.size(); ++k)
    if (times[k] <= times[k - 1])
      throw std::invalid_argument("SpacetimeField: time samples must be strictly increasing");
  for (const auto& fr : frames) {
    if (fr.size() != static_cast<std::size_t>(grid.count()))
      throw std::invalid_argument("SpacetimeField: frame size mismatch");
    for (const auto& v : fr)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw std::invalid_argument("SpacetimeField: non-finite frame value");
  }
}

ScalarField3D SpacetimeField::slice(std::size_t k) const {
  ScalarField3D f(grid);
  f.values = frames.at(k);
  return f;
}

void SpacetimeField::set_slice(std::size_t k, const ScalarField3D& f) {
  if (f.grid != grid) throw std::invalid_argument("set_slice: grid mismatch");
  frames.at(k) = f.values;
}

std::vector<std::pair<double, double>> SpacetimeField::sup_trace() const {
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; k < times.size(); ++k) {
    double m = 0.0;
    for (const auto& v : frames[k]) m = std::max(m, std::abs(v));
    out.emplace_back(times[k], m);
  }
  return out;
}

void SpacetimeField::write_sup_trace_csv(const std::string& path) const {
  std::ofstream os(path);
  os << "t,sup_abs,t_times_sup\n";
  os.precision(15);
  for (const auto& [t, m] : sup_trace()) os << t << "," << m << "," << t * m << "\n";
}

void SpacetimeField::write(const std::string& prefix) const {
  nlohmann::json j;
  j["half_width"] = grid.half_width;
  j["points_per_axis"] = grid.points_per_axis;
  j["times"] = times;
  std::ofstream(prefix + ".json") << j.dump(2) << "\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    ScalarField3D f = slice(k);
    write_field(prefix + "_" + std::to_string(k) + ".wcf", f);
  }
}

SpacetimeField SpacetimeField::read(const std::string& prefix) {
  std::ifstream is(prefix + ".json");
  if (!is) throw std::runtime_error("SpacetimeField::read: missing manifest " + prefix + ".json");
  nlohmann::json j = nlohmann::json::parse(is);
  SpacetimeField out(Grid3D(j["half_width"].get<double>(), j["points_per_axis"].get<int>()),
                     j["times"].get<std::vector<double>>());
  for (std::size_t k = 0; k < out.times.size(); ++k)
    out.frames[k] = read_field(prefix + "_" + std::to_string(k) + ".wcf").values;
  return out;
}

}  // namespace conewave
