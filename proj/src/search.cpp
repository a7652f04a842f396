#include "mhc/search.hpp"

#include <cmath>

namespace mhc {

Axis Axis::list(std::string name, std::vector<nlohmann::json> values) {
  Axis a;
  a.name = std::move(name);
  a.kind = Kind::values;
  a.values = std::move(values);
  return a;
}

Axis Axis::range(std::string name, Kind kind, double lo, double hi) {
  Axis a;
  a.name = std::move(name);
  a.kind = kind;
  a.lo = lo;
  a.hi = hi;
  return a;
}

bool SearchSpace::is_grid() const {
  for (const auto& a : axes) {
    if (a.kind != Axis::Kind::values) return false;
  }
  return true;
}

void SearchSpace::validate() const {
  if (axes.empty()) throw UsageError("search space '" + family + "' has no axes");
  for (const auto& a : axes) {
    switch (a.kind) {
      case Axis::Kind::values:
        if (a.values.empty()) throw UsageError("axis '" + a.name + "' has no values");
        break;
      case Axis::Kind::log_uniform:
        if (!(a.lo > 0)) throw UsageError("log-uniform axis '" + a.name + "' needs a positive lower bound");
        [[fallthrough]];
      case Axis::Kind::uniform:
      case Axis::Kind::integer:
        if (!(a.lo <= a.hi)) throw UsageError("axis '" + a.name + "' has an inverted range");
        if (a.kind == Axis::Kind::integer && (a.lo != std::floor(a.lo) || a.hi != std::floor(a.hi))) {
          throw UsageError("integer axis '" + a.name + "' needs integer bounds");
        }
        break;
    }
  }
}

std::vector<nlohmann::json> expand_grid(const SearchSpace& space) {
  space.validate();
  if (!space.is_grid()) throw UsageError("expand_grid: space '" + space.family + "' has a range axis");
  std::vector<nlohmann::json> out{nlohmann::json::object()};
  for (const auto& axis : space.axes) {
    std::vector<nlohmann::json> next;
    next.reserve(out.size() * axis.values.size());
    for (const auto& partial : out) {
      for (const auto& v : axis.values) {
        nlohmann::json c = partial;
        c[axis.name] = v;
        next.push_back(std::move(c));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<nlohmann::json> sample_random(const SearchSpace& space, std::size_t n_trials, std::uint64_t seed) {
  space.validate();
  if (n_trials == 0) throw UsageError("random search needs at least one trial");
  Rng rng(seed);
  std::vector<nlohmann::json> out;
  for (std::size_t t = 0; t < n_trials; ++t) {
    nlohmann::json c = nlohmann::json::object();
    for (const auto& a : space.axes) {
      switch (a.kind) {
        case Axis::Kind::values:
          c[a.name] = a.values[rng.uniform_index(a.values.size())];
          break;
        case Axis::Kind::uniform:
          c[a.name] = rng.uniform(a.lo, a.hi);
          break;
        case Axis::Kind::log_uniform:
          c[a.name] = std::exp(rng.uniform(std::log(a.lo), std::log(a.hi)));
          break;
        case Axis::Kind::integer: {
          const auto lo = static_cast<long long>(a.lo);
          const auto span = static_cast<std::size_t>(static_cast<long long>(a.hi) - lo + 1);
          c[a.name] = lo + static_cast<long long>(rng.uniform_index(span));
          break;
        }
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

SearchSpace space_from_json(const std::string& family, const nlohmann::json& axes) {
  if (!axes.is_array()) throw UsageError("search axes for '" + family + "' must be a JSON array");
  SearchSpace s;
  s.family = family;
  for (const auto& j : axes) {
    const auto name = j.at("name").get<std::string>();
    if (j.contains("values")) {
      s.axes.push_back(Axis::list(name, j.at("values").get<std::vector<nlohmann::json>>()));
      continue;
    }
    bool found = false;
    for (const auto& [key, kind] : {std::pair{"uniform", Axis::Kind::uniform},
                                    std::pair{"log_uniform", Axis::Kind::log_uniform},
                                    std::pair{"int", Axis::Kind::integer}}) {
      if (j.contains(key)) {
        const auto r = j.at(key).get<std::vector<double>>();
        if (r.size() != 2) throw UsageError("axis '" + name + "' range needs [lo, hi]");
        s.axes.push_back(Axis::range(name, kind, r[0], r[1]));
        found = true;
        break;
      }
    }
    if (!found) throw UsageError("axis '" + name + "' needs values, uniform, log_uniform or int");
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const SearchSpace& space) {
  nlohmann::json axes = nlohmann::json::array();
  for (const auto& a : space.axes) {
    switch (a.kind) {
      case Axis::Kind::values: axes.push_back({{"name", a.name}, {"values", a.values}}); break;
      case Axis::Kind::uniform: axes.push_back({{"name", a.name}, {"uniform", {a.lo, a.hi}}}); break;
      case Axis::Kind::log_uniform: axes.push_back({{"name", a.name}, {"log_uniform", {a.lo, a.hi}}}); break;
      case Axis::Kind::integer: axes.push_back({{"name", a.name}, {"int", {a.lo, a.hi}}}); break;
    }
  }
  return axes;
}

std::size_t select_best(const std::vector<double>& values) {
  std::size_t best = values.size();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) continue;
    if (best == values.size() || values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace mhc
