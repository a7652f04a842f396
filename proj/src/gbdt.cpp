#include "mhc/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mhc/linear.hpp"

namespace mhc {
namespace {

constexpr double kMinGain = 1e-12;

double newton_term(double g, double h, double lambda) { return g * g / (h + lambda); }

void fill_default_bin(std::span<BinStats> bins, std::size_t default_bin, const BinStats& total) {
  BinStats rest;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (b == default_bin) continue;
    rest.g += bins[b].g;
    rest.h += bins[b].h;
    rest.count += bins[b].count;
  }
  bins[default_bin] = {total.g - rest.g, total.h - rest.h, total.count - rest.count};
}

// Left child takes bins 0..b. Keeps the first candidate that beats best_gain
// by more than kMinGain, so callers must visit features in increasing order.
void scan_feature(std::span<const BinStats> bins, std::size_t f, const BinStats& total, double lambda,
                  std::size_t min_child_samples, std::optional<HistSplit>& best, double& best_gain) {
  const double parent = newton_term(total.g, total.h, lambda);
  BinStats left;
  for (std::size_t b = 0; b + 1 < bins.size(); ++b) {
    left.g += bins[b].g;
    left.h += bins[b].h;
    left.count += bins[b].count;
    const BinStats right{total.g - left.g, total.h - left.h, total.count - left.count};
    if (left.count < min_child_samples || right.count < min_child_samples) continue;
    const double gain = newton_term(left.g, left.h, lambda) + newton_term(right.g, right.h, lambda) - parent;
    if (gain > best_gain + kMinGain) {
      best = HistSplit{static_cast<std::uint32_t>(f), static_cast<std::uint32_t>(b), gain, left, right};
      best_gain = gain;
    }
  }
}

struct LeafState {
  int node;
  int depth;
  std::vector<std::uint32_t> samples;
  std::optional<HistSplit> split;
};

class LeafwiseBuilder {
 public:
  LeafwiseBuilder(const BinnedMatrix& x, const SparseBinIndex& index, std::span<const double> g,
                  std::span<const double> h, const TreeConfig& config)
      : x_(x), index_(index), g_(g), h_(h), config_(config), offset_(x.cols + 1, 0), touched_(x.cols, 0) {
    for (std::size_t f = 0; f < x.cols; ++f) offset_[f + 1] = offset_[f] + x.num_bins(f);
    flat_.resize(offset_[x.cols]);
  }

  // Returns the tree and, for each of its leaves, the samples it holds.
  GbdtTree grow(std::vector<std::uint32_t> samples, std::vector<std::pair<int, std::vector<std::uint32_t>>>& leaves_out) {
    GbdtTree tree;
    tree.nodes.emplace_back();
    tree.nodes[0].count = samples.size();
    std::vector<LeafState> leaves;
    leaves.push_back({0, 0, std::move(samples), std::nullopt});
    evaluate(leaves.back());

    while (leaves.size() < config_.num_leaves) {
      std::size_t pick = leaves.size();
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (!leaves[i].split) continue;
        if (pick == leaves.size() || leaves[i].split->gain > leaves[pick].split->gain + kMinGain ||
            (std::abs(leaves[i].split->gain - leaves[pick].split->gain) <= kMinGain &&
             leaves[i].node < leaves[pick].node)) {
          pick = i;
        }
      }
      if (pick == leaves.size()) break;

      LeafState parent = std::move(leaves[pick]);
      leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));
      const HistSplit& s = *parent.split;
      std::vector<std::uint32_t> left, right;
      for (auto i : parent.samples) (x_.at(i, s.feature) <= s.bin ? left : right).push_back(i);

      const int l = static_cast<int>(tree.nodes.size());
      const int r = l + 1;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      GbdtNode& node = tree.nodes[static_cast<std::size_t>(parent.node)];
      node.feature = static_cast<int>(s.feature);
      node.bin = s.bin;
      node.threshold = x_.edges[s.feature][s.bin];
      node.gain = s.gain;
      node.left = l;
      node.right = r;
      tree.nodes[static_cast<std::size_t>(l)].count = left.size();
      tree.nodes[static_cast<std::size_t>(r)].count = right.size();

      leaves.push_back({l, parent.depth + 1, std::move(left), std::nullopt});
      evaluate(leaves.back());
      leaves.push_back({r, parent.depth + 1, std::move(right), std::nullopt});
      evaluate(leaves.back());
    }

    for (auto& leaf : leaves) {
      double g = 0.0, h = 0.0;
      for (auto i : leaf.samples) {
        g += g_[i];
        h += h_[i];
      }
      tree.nodes[static_cast<std::size_t>(leaf.node)].value = -g / (h + kLeafLambda) * config_.learning_rate;
      leaves_out.emplace_back(leaf.node, std::move(leaf.samples));
    }
    return tree;
  }

 private:
  // Accumulates only the non-default entries of the leaf's rows into a
  // reused flat buffer, then scans the features those rows touch. Untouched
  // features hold every sample in one bin and cannot split.
  void evaluate(LeafState& leaf) {
    const bool depth_ok = config_.max_depth < 0 || leaf.depth < config_.max_depth;
    if (!depth_ok || leaf.samples.size() < 2 * config_.min_child_samples) return;
    BinStats total;
    features_.clear();
    for (auto i : leaf.samples) {
      total.g += g_[i];
      total.h += h_[i];
      ++total.count;
      for (std::size_t e = index_.row_ptr[i]; e < index_.row_ptr[i + 1]; ++e) {
        const auto f = index_.feature[e];
        if (!touched_[f]) {
          touched_[f] = 1;
          features_.push_back(f);
        }
        BinStats& b = flat_[offset_[f] + index_.bin[e]];
        b.g += g_[i];
        b.h += h_[i];
        ++b.count;
      }
    }
    std::sort(features_.begin(), features_.end());
    std::optional<HistSplit> best;
    double best_gain = 0.0;
    for (auto f : features_) {
      std::span<BinStats> bins(flat_.data() + offset_[f], offset_[f + 1] - offset_[f]);
      fill_default_bin(bins, index_.default_bin[f], total);
      scan_feature(bins, f, total, kLeafLambda, config_.min_child_samples, best, best_gain);
      std::fill(bins.begin(), bins.end(), BinStats{});
      touched_[f] = 0;
    }
    leaf.split = best;
  }

  const BinnedMatrix& x_;
  const SparseBinIndex& index_;
  std::span<const double> g_;
  std::span<const double> h_;
  const TreeConfig& config_;
  std::vector<std::size_t> offset_;
  std::vector<BinStats> flat_;
  std::vector<std::uint8_t> touched_;
  std::vector<std::uint32_t> features_;
};

template <typename Lookup>
double tree_output(const GbdtTree& tree, Lookup&& lookup) {
  const GbdtNode* node = &tree.nodes.at(0);
  while (!node->is_leaf()) {
    const double v = lookup(static_cast<std::uint32_t>(node->feature));
    node = &tree.nodes[static_cast<std::size_t>(v <= node->threshold ? node->left : node->right)];
  }
  return node->value;
}

Histogram empty_histogram(const BinnedMatrix& x) {
  Histogram hist(x.cols);
  for (std::size_t f = 0; f < x.cols; ++f) hist[f].resize(x.num_bins(f));
  return hist;
}

void fill_feature(const BinnedMatrix& x, std::span<const double> g, std::span<const double> h,
                  std::span<const std::uint32_t> samples, std::size_t f, std::vector<BinStats>& out) {
  const std::uint8_t* col = x.bins.data() + f * x.rows;
  for (auto i : samples) {
    BinStats& b = out[col[i]];
    b.g += g[i];
    b.h += h[i];
    ++b.count;
  }
}

}  // namespace

std::vector<double> bin_edges(std::vector<double> values, std::size_t max_bins) {
  if (max_bins < 2) throw std::invalid_argument("bin_edges: need at least two bins");
  std::sort(values.begin(), values.end());
  std::vector<double> distinct = values;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  auto midpoint = [](double lo, double hi) {
    const double m = lo + (hi - lo) / 2.0;
    return m < hi ? m : lo;
  };
  std::vector<double> edges;
  if (distinct.size() <= max_bins) {
    for (std::size_t k = 0; k + 1 < distinct.size(); ++k) edges.push_back(midpoint(distinct[k], distinct[k + 1]));
    return edges;
  }
  const std::size_t n = values.size();
  for (std::size_t q = 1; q < max_bins; ++q) {
    const std::size_t idx = q * n / max_bins;
    if (idx == 0 || idx >= n || !(values[idx - 1] < values[idx])) continue;
    const double e = midpoint(values[idx - 1], values[idx]);
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  return edges;
}

std::size_t bin_of(std::span<const double> edges, double v) {
  return static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), v) - edges.begin());
}

BinnedMatrix bin_features(const FeatureColumns& x, std::size_t max_bins) {
  if (max_bins > 255) throw std::invalid_argument("bin_features: at most 255 bins");
  BinnedMatrix b;
  b.rows = x.rows();
  b.cols = x.cols();
  b.edges.resize(b.cols);
  b.bins.resize(b.rows * b.cols);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t f = 0; f < b.cols; ++f) {
    const auto col = x.column(f);
    b.edges[f] = bin_edges(std::vector<double>(col.begin(), col.end()), max_bins);
    for (std::size_t i = 0; i < b.rows; ++i) {
      b.bins[f * b.rows + i] = static_cast<std::uint8_t>(bin_of(b.edges[f], col[i]));
    }
  }
  return b;
}

Histogram build_histogram(const BinnedMatrix& x, std::span<const double> g, std::span<const double> h,
                          std::span<const std::uint32_t> samples) {
  Histogram hist = empty_histogram(x);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t f = 0; f < x.cols; ++f) fill_feature(x, g, h, samples, f, hist[f]);
  return hist;
}

Histogram build_histogram_serial(const BinnedMatrix& x, std::span<const double> g, std::span<const double> h,
                                 std::span<const std::uint32_t> samples) {
  Histogram hist = empty_histogram(x);
  for (std::size_t f = 0; f < x.cols; ++f) fill_feature(x, g, h, samples, f, hist[f]);
  return hist;
}

std::optional<HistSplit> best_histogram_split(const Histogram& hist, double lambda, std::size_t min_child_samples) {
  std::optional<HistSplit> best;
  double best_gain = 0.0;
  for (std::size_t f = 0; f < hist.size(); ++f) {
    BinStats total;
    for (const auto& b : hist[f]) {
      total.g += b.g;
      total.h += b.h;
      total.count += b.count;
    }
    scan_feature(hist[f], f, total, lambda, min_child_samples, best, best_gain);
  }
  return best;
}

SparseBinIndex SparseBinIndex::build(const BinnedMatrix& x) {
  SparseBinIndex index;
  index.default_bin.resize(x.cols);
  for (std::size_t f = 0; f < x.cols; ++f) index.default_bin[f] = static_cast<std::uint8_t>(bin_of(x.edges[f], 0.0));
  std::vector<std::size_t> per_row(x.rows, 0);
  for (std::size_t f = 0; f < x.cols; ++f) {
    for (std::size_t i = 0; i < x.rows; ++i) per_row[i] += x.at(i, f) != index.default_bin[f];
  }
  index.row_ptr.assign(x.rows + 1, 0);
  for (std::size_t i = 0; i < x.rows; ++i) index.row_ptr[i + 1] = index.row_ptr[i] + per_row[i];
  index.feature.resize(index.row_ptr[x.rows]);
  index.bin.resize(index.row_ptr[x.rows]);
  std::vector<std::size_t> cursor(index.row_ptr.begin(), index.row_ptr.end() - 1);
  for (std::size_t f = 0; f < x.cols; ++f) {
    for (std::size_t i = 0; i < x.rows; ++i) {
      const auto b = x.at(i, f);
      if (b == index.default_bin[f]) continue;
      index.feature[cursor[i]] = static_cast<std::uint32_t>(f);
      index.bin[cursor[i]++] = b;
    }
  }
  return index;
}

Histogram build_histogram_sparse(const BinnedMatrix& x, const SparseBinIndex& index, std::span<const double> g,
                                 std::span<const double> h, std::span<const std::uint32_t> samples) {
  Histogram hist = empty_histogram(x);
  BinStats total;
  for (auto i : samples) {
    total.g += g[i];
    total.h += h[i];
    ++total.count;
    for (std::size_t e = index.row_ptr[i]; e < index.row_ptr[i + 1]; ++e) {
      BinStats& b = hist[index.feature[e]][index.bin[e]];
      b.g += g[i];
      b.h += h[i];
      ++b.count;
    }
  }
  for (std::size_t f = 0; f < x.cols; ++f) fill_default_bin(hist[f], index.default_bin[f], total);
  return hist;
}

std::size_t GbdtTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const GbdtNode& n) { return n.is_leaf(); }));
}

std::size_t GbdtTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t out = 0;
  // Children are always appended after their parent.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out = std::max(out, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return out;
}

double gbdt_loss(std::span<const double> f, std::span<const LabelId> y, std::size_t num_classes,
                 std::span<const double> class_weights) {
  const std::size_t k = num_classes == 2 ? 1 : num_classes;
  double loss = 0.0, mass = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double w = class_weights[y[i]];
    const double* row = f.data() + i * k;
    double ce;
    if (k == 1) {
      const double z = row[0];
      const double sp = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      ce = sp - (y[i] == 1 ? z : 0.0);
    } else {
      const double m = *std::max_element(row, row + k);
      double s = 0.0;
      for (std::size_t c = 0; c < k; ++c) s += std::exp(row[c] - m);
      ce = m + std::log(s) - row[y[i]];
    }
    loss += w * ce;
    mass += w;
  }
  return mass > 0 ? loss / mass : 0.0;
}

GbdtModel fit_gbdt(const FeatureColumns& x, std::span<const LabelId> y, std::size_t num_classes,
                   const TreeConfig& config, GbdtTrace* trace) {
  config.validate();
  if (x.rows() != y.size()) throw std::invalid_argument("fit_gbdt: X and y differ in length");
  if (num_classes < 2) throw std::invalid_argument("fit_gbdt: need at least two classes");
  for (LabelId label : y) {
    if (label >= num_classes) throw std::invalid_argument("fit_gbdt: label out of range");
  }
  const auto counts = class_counts(y, num_classes);
  if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2) {
    throw DataError("fit_gbdt: at least two classes must be present");
  }

  GbdtModel model;
  model.num_classes = num_classes;
  model.dim = x.cols();
  model.learning_rate = config.learning_rate;
  model.num_leaves = config.num_leaves;
  model.lambda = kLeafLambda;
  model.class_weights = class_weights(y, num_classes, config.class_weight);
  const BinnedMatrix binned = bin_features(x, config.max_bins);
  const SparseBinIndex index = SparseBinIndex::build(binned);
  model.edges = binned.edges;

  const std::size_t n = y.size();
  const std::size_t k_out = model.outputs();
  std::vector<double> w(n);
  double mass = 0.0;
  std::vector<double> class_mass(num_classes, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = model.class_weights[y[i]];
    mass += w[i];
    class_mass[y[i]] += w[i];
  }
  const double eps = 1e-12;
  if (k_out == 1) {
    const double p = std::clamp(class_mass[1] / mass, eps, 1.0 - eps);
    model.base_score = {std::log(p / (1.0 - p))};
  } else {
    for (std::size_t c = 0; c < num_classes; ++c) model.base_score.push_back(std::log(std::max(class_mass[c] / mass, eps)));
  }

  std::vector<double> f(n * k_out);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k_out; ++c) f[i * k_out + c] = model.base_score[c];
  }
  GbdtTrace local;
  local.loss.push_back(gbdt_loss(f, y, num_classes, model.class_weights));

  std::vector<double> g(n * k_out), h(n * k_out);
  std::vector<std::uint32_t> all(n);
  std::iota(all.begin(), all.end(), 0u);
  std::vector<double> gk(n), hk(n);
  for (std::size_t round = 0; round < config.n_estimators; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = f.data() + i * k_out;
      if (k_out == 1) {
        const double p = sigmoid(row[0]);
        g[i] = w[i] * (p - (y[i] == 1 ? 1.0 : 0.0));
        h[i] = w[i] * p * (1.0 - p);
      } else {
        const auto p = softmax(std::span<const double>(row, k_out));
        for (std::size_t c = 0; c < k_out; ++c) {
          g[i * k_out + c] = w[i] * (p[c] - (y[i] == c ? 1.0 : 0.0));
          h[i * k_out + c] = w[i] * p[c] * (1.0 - p[c]);
        }
      }
    }
    std::vector<GbdtTree> trees;
    for (std::size_t c = 0; c < k_out; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        gk[i] = g[i * k_out + c];
        hk[i] = h[i * k_out + c];
      }
      LeafwiseBuilder builder(binned, index, gk, hk, config);
      std::vector<std::pair<int, std::vector<std::uint32_t>>> leaves;
      GbdtTree tree = builder.grow(all, leaves);
      for (const auto& [node, samples] : leaves) {
        const double v = tree.nodes[static_cast<std::size_t>(node)].value;
        for (auto i : samples) f[i * k_out + c] += v;
      }
      trees.push_back(std::move(tree));
    }
    model.rounds.push_back(std::move(trees));
    local.loss.push_back(gbdt_loss(f, y, num_classes, model.class_weights));
  }
  if (trace) *trace = std::move(local);
  return model;
}

std::vector<double> raw_scores(const GbdtModel& model, const SparseVector& x) {
  if (!x.indices.empty() && x.indices.back() >= model.dim) {
    throw std::invalid_argument("gbdt predict: feature index beyond model dimension");
  }
  std::vector<double> out = model.base_score;
  for (const auto& round : model.rounds) {
    for (std::size_t c = 0; c < round.size(); ++c) {
      out[c] += tree_output(round[c], [&](std::uint32_t f) { return x.get(f); });
    }
  }
  return out;
}

std::vector<double> raw_scores(const GbdtModel& model, std::span<const double> x) {
  if (x.size() != model.dim) throw std::invalid_argument("gbdt predict: dimension mismatch");
  std::vector<double> out = model.base_score;
  for (const auto& round : model.rounds) {
    for (std::size_t c = 0; c < round.size(); ++c) {
      out[c] += tree_output(round[c], [&](std::uint32_t f) { return x[f]; });
    }
  }
  return out;
}

std::vector<double> predict_proba(const GbdtModel& model, const SparseVector& x) {
  const auto z = raw_scores(model, x);
  if (model.outputs() == 1) {
    const double p = sigmoid(z[0]);
    return {1.0 - p, p};
  }
  return softmax(z);
}

LabelId predict(const GbdtModel& model, const SparseVector& x) {
  return static_cast<LabelId>(argmax(predict_proba(model, x)));
}

nlohmann::json to_json(const GbdtModel& model) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& round : model.rounds) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : round) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& n : tree.nodes) {
        if (n.is_leaf()) {
          nodes.push_back({{"value", n.value}, {"n", n.count}});
        } else {
          nodes.push_back({{"feature", n.feature},
                           {"bin", n.bin},
                           {"threshold", n.threshold},
                           {"left", n.left},
                           {"right", n.right},
                           {"gain", n.gain},
                           {"n", n.count}});
        }
      }
      trees.push_back(std::move(nodes));
    }
    rounds.push_back(std::move(trees));
  }
  return {{"num_classes", model.num_classes},
          {"dim", model.dim},
          {"learning_rate", model.learning_rate},
          {"num_leaves", model.num_leaves},
          {"lambda", model.lambda},
          {"base_score", model.base_score},
          {"class_weights", model.class_weights},
          {"bin_edges", model.edges},
          {"rounds", rounds}};
}

GbdtModel gbdt_from_json(const nlohmann::json& j) {
  GbdtModel m;
  m.num_classes = j.at("num_classes").get<std::size_t>();
  m.dim = j.at("dim").get<std::size_t>();
  m.learning_rate = j.at("learning_rate").get<double>();
  m.num_leaves = j.at("num_leaves").get<std::size_t>();
  m.lambda = j.at("lambda").get<double>();
  m.base_score = j.at("base_score").get<std::vector<double>>();
  m.class_weights = j.at("class_weights").get<std::vector<double>>();
  m.edges = j.at("bin_edges").get<std::vector<std::vector<double>>>();
  if (m.base_score.size() != m.outputs()) throw DataError("gbdt json: base score length mismatch");
  for (const auto& jr : j.at("rounds")) {
    std::vector<GbdtTree> round;
    for (const auto& jt : jr) {
      GbdtTree tree;
      for (const auto& jn : jt) {
        GbdtNode n;
        n.count = jn.at("n").get<std::size_t>();
        if (jn.contains("feature")) {
          n.feature = jn.at("feature").get<int>();
          n.bin = jn.at("bin").get<std::uint32_t>();
          n.threshold = jn.at("threshold").get<double>();
          n.left = jn.at("left").get<int>();
          n.right = jn.at("right").get<int>();
          n.gain = jn.at("gain").get<double>();
        } else {
          n.value = jn.at("value").get<double>();
        }
        tree.nodes.push_back(n);
      }
      const auto count = static_cast<int>(tree.nodes.size());
      for (const auto& n : tree.nodes) {
        if (!n.is_leaf() && (n.left <= 0 || n.left >= count || n.right <= 0 || n.right >= count)) {
          throw DataError("gbdt json: child index out of range");
        }
      }
      if (tree.nodes.empty()) throw DataError("gbdt json: empty tree");
      round.push_back(std::move(tree));
    }
    if (round.size() != m.outputs()) throw DataError("gbdt json: wrong number of trees in a round");
    m.rounds.push_back(std::move(round));
  }
  return m;
}

}  // namespace mhc
