#include "mhc/common.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mhc {

double SparseVector::squared_norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return s;
}

double SparseVector::dot(std::span<const double> dense) const {
  double s = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) s += values[k] * dense[indices[k]];
  return s;
}

double SparseVector::get(std::uint32_t index) const {
  const auto it = std::lower_bound(indices.begin(), indices.end(), index);
  if (it == indices.end() || *it != index) return 0.0;
  return values[static_cast<std::size_t>(it - indices.begin())];
}

double SparseVector::dot(const SparseVector& other) const {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < indices.size() && j < other.indices.size()) {
    if (indices[i] == other.indices[j]) {
      s += values[i++] * other.values[j++];
    } else if (indices[i] < other.indices[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return s;
}

DenseMatrix to_dense(const SparseMatrix& x) {
  DenseMatrix out(x.rows.size(), x.cols);
  for (std::size_t r = 0; r < x.rows.size(); ++r) {
    const auto& row = x.rows[r];
    for (std::size_t k = 0; k < row.indices.size(); ++k) out(r, row.indices[k]) = row.values[k];
  }
  return out;
}

SparseVector to_sparse(std::span<const double> x) {
  SparseVector v;
  for (std::size_t c = 0; c < x.size(); ++c) {
    if (x[c] != 0.0) {
      v.indices.push_back(static_cast<std::uint32_t>(c));
      v.values.push_back(x[c]);
    }
  }
  return v;
}

SparseMatrix to_sparse(const DenseMatrix& x) {
  SparseMatrix out;
  out.cols = x.cols();
  out.rows.reserve(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out.rows.push_back(to_sparse(x.row(r)));
  return out;
}

void require_finite(const SparseMatrix& x) {
  for (std::size_t r = 0; r < x.rows.size(); ++r) {
    for (double v : x.rows[r].values) {
      if (!std::isfinite(v)) throw DataError("non-finite feature value in row " + std::to_string(r));
    }
  }
}

void require_finite(const DenseMatrix& x) {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (double v : x.row(r)) {
      if (!std::isfinite(v)) throw DataError("non-finite feature value in row " + std::to_string(r));
    }
  }
}

double Rng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  const std::uint64_t bound = n;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t child_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 1));
}

ClassWeightMode parse_class_weight(std::string_view s) {
  if (s == "balanced") return ClassWeightMode::balanced;
  if (s == "none" || s == "None" || s.empty()) return ClassWeightMode::none;
  throw UsageError("unknown class_weight: " + std::string(s));
}

std::string_view to_string(ClassWeightMode mode) {
  return mode == ClassWeightMode::balanced ? "balanced" : "none";
}

std::vector<std::size_t> class_counts(std::span<const LabelId> labels, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (LabelId y : labels) {
    if (y >= num_classes) throw std::invalid_argument("label out of range: " + std::to_string(y));
    ++counts[y];
  }
  return counts;
}

std::vector<double> class_weights(std::span<const LabelId> labels, std::size_t num_classes,
                                  ClassWeightMode mode) {
  if (mode == ClassWeightMode::none) return std::vector<double>(num_classes, 1.0);
  const auto counts = class_counts(labels, num_classes);
  std::vector<double> w(num_classes);
  const double n = static_cast<double>(labels.size());
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (counts[k] == 0) {
      throw DataError("balanced class weights: class " + std::to_string(k) + " is absent");
    }
    w[k] = n / (static_cast<double>(num_classes) * static_cast<double>(counts[k]));
  }
  return w;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace mhc
