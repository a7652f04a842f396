// Shared fixtures for the unit tests: random instances and the synthetic
// corpus pipeline.
#pragma once

#include <cmath>
#include <vector>

#include "mhc/common.hpp"
#include "mhc/experiment.hpp"
#include "mhc/synthetic.hpp"

namespace mhc::test {

// Labels in [0, k) with every class present (requires n >= k).
inline std::vector<LabelId> random_labels(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<LabelId> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<LabelId>(i < k ? i : rng.uniform_index(k));
  rng.shuffle(y);
  return y;
}

// Dense matrix with values drawn from a small integer grid so that ties occur.
inline DenseMatrix random_grid_matrix(std::size_t n, std::size_t d, int levels, Rng& rng) {
  DenseMatrix x(n, d);
  for (auto& v : x.data()) v = static_cast<double>(rng.uniform_index(static_cast<std::size_t>(levels)));
  return x;
}

inline SparseMatrix random_sparse(std::size_t n, std::size_t d, double density, Rng& rng) {
  DenseMatrix x(n, d);
  for (auto& v : x.data()) v = rng.bernoulli(density) ? rng.uniform(-1.0, 1.0) : 0.0;
  return to_sparse(x);
}

inline double rel_error(double a, double b) { return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)}); }

inline ExperimentConfig synthetic_config(std::uint64_t seed = 42) {
  ExperimentConfig c = default_experiment();
  c.seed = seed;
  return c;
}

inline PreparedData synthetic_data(std::size_t n, SchemeKind scheme = SchemeKind::binary, std::uint64_t seed = 42,
                                   std::uint64_t corpus_seed = 7) {
  const auto spec = scheme == SchemeKind::binary ? binary_synthetic_spec(n, corpus_seed)
                                                 : multiclass_synthetic_spec(n, corpus_seed);
  auto config = synthetic_config(seed);
  config.scheme = scheme;
  return prepare_records(generate_corpus(spec), config);
}

}  // namespace mhc::test
