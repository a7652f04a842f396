#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "mhc/common.hpp"

namespace mhc {

using Sequence = std::vector<std::uint32_t>;

inline constexpr std::uint32_t kPad = 0;
inline constexpr std::uint32_t kOov = 1;

class SeqVocabulary {
 public:
  SeqVocabulary() = default;

  /// Tokens seen at least `min_freq` times, ids assigned in lexicographic order from 2.
  static SeqVocabulary build(std::span<const TokenList> docs, std::size_t min_freq = 2, std::size_t max_len = 64);

  /// Right-truncated, PAD-right-padded to max_len; unknown tokens map to OOV.
  Sequence encode(std::span<const std::string> tokens) const;
  std::uint32_t index_of(const std::string& token) const;

  std::size_t size() const { return tokens_.size() + 2; }
  std::size_t max_len() const { return max_len_; }
  std::size_t min_freq() const { return min_freq_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  nlohmann::json to_json() const;
  static SeqVocabulary from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> tokens_;  // id = position + 2
  std::unordered_map<std::string, std::uint32_t> index_;
  std::size_t max_len_ = 64;
  std::size_t min_freq_ = 2;
};

/// Gate matrices map row vectors: a = x W + h U + b, with W (E x H), U (H x H).
struct GruParams {
  Eigen::MatrixXd embedding;  // V x E
  Eigen::MatrixXd wz, uz, wr, ur, wh, uh;
  Eigen::RowVectorXd bz, br, bh;
  Eigen::MatrixXd wo;  // H x K
  Eigen::RowVectorXd bo;
  double dropout = 0.2;

  std::size_t vocab_size() const { return static_cast<std::size_t>(embedding.rows()); }
  std::size_t embedding_dim() const { return static_cast<std::size_t>(embedding.cols()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(uz.rows()); }
  std::size_t num_classes() const { return static_cast<std::size_t>(wo.cols()); }

  static GruParams zeros(std::size_t vocab, std::size_t emb, std::size_t hidden, std::size_t classes);
  /// Every entry uniform(-0.08, 0.08).
  static GruParams random(std::size_t vocab, std::size_t emb, std::size_t hidden, std::size_t classes,
                          std::uint64_t seed);

  /// Visits every tensor in a fixed order; used by the optimizer and gradient checks.
  template <typename F>
  void for_each(F&& f) {
    f(embedding); f(wz); f(uz); f(wr); f(ur); f(wh); f(uh);
    f(bz); f(br); f(bh); f(wo); f(bo);
  }
  template <typename F>
  void for_each_pair(GruParams& other, F&& f) {
    f(embedding, other.embedding); f(wz, other.wz); f(uz, other.uz); f(wr, other.wr); f(ur, other.ur);
    f(wh, other.wh); f(uh, other.uh); f(bz, other.bz); f(br, other.br); f(bh, other.bh);
    f(wo, other.wo); f(bo, other.bo);
  }
};

/// h_t = (1 - z) * h + z * tanh(x Wh + (r * h) Uh + bh), with
/// z = sigmoid(x Wz + h Uz + bz) and r = sigmoid(x Wr + h Ur + br).
Eigen::RowVectorXd gru_cell(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& h, const GruParams& p);

/// Logits for one sequence. PAD positions leave the state untouched. In train
/// mode `dropout_mask` (length H, entries 0 or 1/(1-p)) scales the final state.
Eigen::RowVectorXd forward(const GruParams& p, const Sequence& seq, const Eigen::RowVectorXd* dropout_mask = nullptr);

struct GruBatch {
  std::vector<const Sequence*> sequences;
  std::vector<LabelId> labels;
};

/// Loss (1/B) sum_i w[y_i] CE_i and its exact gradient for a fixed dropout
/// mask (B x H; an empty matrix means no dropout).
double loss_gradients(const GruParams& p, const GruBatch& batch, std::span<const double> class_weights,
                      const Eigen::MatrixXd& dropout_mask, GruParams* grad);

Eigen::MatrixXd dropout_mask(std::size_t batch, std::size_t hidden, double rate, Rng& rng);

struct GruTrainConfig {
  std::size_t embedding_dim = 200;
  std::size_t hidden_dim = 256;
  double learning_rate = 5e-4;
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double dropout = 0.2;
  ClassWeightMode class_weight = ClassWeightMode::balanced;
  std::uint64_t seed = 0;
};

struct GruModel {
  SeqVocabulary vocab;
  GruParams params;
  std::size_t best_epoch = 0;  // 1-based
};

struct GruTrainTrace {
  std::vector<double> train_loss;   // mean batch loss per epoch
  std::vector<double> val_weighted_f1;
};

/// Mini-batch Adam (0.9, 0.999, 1e-8). Returns the epoch whose validation
/// weighted F1 is highest (earliest on ties). Streams: init child_seed(seed, 0),
/// batch order child_seed(seed, 1), dropout child_seed(seed, 2).
GruModel train_gru(const SeqVocabulary& vocab, std::span<const Sequence> train, std::span<const LabelId> y_train,
                   std::span<const Sequence> val, std::span<const LabelId> y_val, std::size_t num_classes,
                   const GruTrainConfig& config, GruTrainTrace* trace = nullptr);

std::vector<double> predict_proba(const GruModel& model, const Sequence& seq);
LabelId predict(const GruModel& model, const Sequence& seq);

nlohmann::json to_json(const GruModel& model);
GruModel gru_from_json(const nlohmann::json& j);

}  // namespace mhc
