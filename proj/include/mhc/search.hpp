#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "mhc/common.hpp"

namespace mhc {

/// One hyperparameter axis: an explicit value list, or a range with a
/// sampling law. Integer ranges are inclusive.
struct Axis {
  enum class Kind { values, uniform, log_uniform, integer };

  std::string name;
  Kind kind = Kind::values;
  std::vector<nlohmann::json> values;
  double lo = 0.0;
  double hi = 0.0;

  static Axis list(std::string name, std::vector<nlohmann::json> values);
  static Axis range(std::string name, Kind kind, double lo, double hi);
};

struct SearchSpace {
  std::string family;
  std::vector<Axis> axes;

  bool is_grid() const;
  void validate() const;
};

/// Cartesian product; the first axis varies slowest.
std::vector<nlohmann::json> expand_grid(const SearchSpace& space);

/// n_trials independent draws, axis by axis in declaration order. Value-list
/// axes are drawn uniformly from their list.
std::vector<nlohmann::json> sample_random(const SearchSpace& space, std::size_t n_trials, std::uint64_t seed);

/// Axes are an array of {"name", "values"} or {"name", "uniform"|"log_uniform"|"int": [lo, hi]}.
SearchSpace space_from_json(const std::string& family, const nlohmann::json& axes);
nlohmann::json to_json(const SearchSpace& space);

/// Index of the largest value; ties go to the earliest index. NaN entries
/// (failed trials) never win. Returns values.size() if every entry is NaN.
std::size_t select_best(const std::vector<double>& values);

}  // namespace mhc
