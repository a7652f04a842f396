#include "mhc/gru.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mhc/metrics.hpp"

namespace mhc {
namespace {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;

MatrixXd sigmoid(const MatrixXd& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

struct StepCache {
  MatrixXd x, h_prev, z, r, c;
  Eigen::VectorXd active;  // 1 where the token is not PAD
};

std::size_t steps_needed(const std::vector<const Sequence*>& seqs) {
  std::size_t t = 0;
  for (const auto* s : seqs) {
    for (std::size_t i = s->size(); i > t; --i) {
      if ((*s)[i - 1] != kPad) {
        t = i;
        break;
      }
    }
  }
  return t;
}

void check_indices(const GruParams& p, const std::vector<const Sequence*>& seqs) {
  const auto v = p.vocab_size();
  for (const auto* s : seqs) {
    for (auto idx : *s) {
      if (idx >= v) throw std::invalid_argument("gru: token index outside the vocabulary");
    }
  }
}

// Runs the recurrence over a batch; fills `cache` when given. Returns the final states (B x H).
MatrixXd run_batch(const GruParams& p, const std::vector<const Sequence*>& seqs, std::vector<StepCache>* cache) {
  check_indices(p, seqs);
  const auto b = static_cast<Eigen::Index>(seqs.size());
  const auto e = static_cast<Eigen::Index>(p.embedding_dim());
  const auto hd = static_cast<Eigen::Index>(p.hidden_dim());
  MatrixXd h = MatrixXd::Zero(b, hd);
  const std::size_t steps = steps_needed(seqs);
  if (cache) cache->resize(steps);
  MatrixXd x(b, e);
  Eigen::VectorXd active(b);
  for (std::size_t t = 0; t < steps; ++t) {
    for (Eigen::Index i = 0; i < b; ++i) {
      const auto& s = *seqs[static_cast<std::size_t>(i)];
      const std::uint32_t idx = t < s.size() ? s[t] : kPad;
      active(i) = idx == kPad ? 0.0 : 1.0;
      if (idx == kPad) {
        x.row(i).setZero();
      } else {
        x.row(i) = p.embedding.row(idx);
      }
    }
    MatrixXd z = sigmoid((x * p.wz + h * p.uz).rowwise() + p.bz);
    MatrixXd r = sigmoid((x * p.wr + h * p.ur).rowwise() + p.br);
    MatrixXd c = ((x * p.wh + (r.array() * h.array()).matrix() * p.uh).rowwise() + p.bh).array().tanh().matrix();
    MatrixXd next = ((1.0 - z.array()) * h.array() + z.array() * c.array()).matrix();
    for (Eigen::Index i = 0; i < b; ++i) {
      if (active(i) == 0.0) next.row(i) = h.row(i);
    }
    if (cache) {
      StepCache& sc = (*cache)[t];
      sc.x = x;
      sc.h_prev = h;
      sc.z = std::move(z);
      sc.r = std::move(r);
      sc.c = std::move(c);
      sc.active = active;
    }
    h = std::move(next);
  }
  return h;
}

MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-0.08, 0.08);
  }
  return m;
}

RowVectorXd uniform_row(Eigen::Index cols, Rng& rng) {
  RowVectorXd v(cols);
  for (Eigen::Index j = 0; j < cols; ++j) v(j) = rng.uniform(-0.08, 0.08);
  return v;
}

MatrixXd batch_logits(const GruParams& p, const std::vector<const Sequence*>& seqs) {
  const MatrixXd h = run_batch(p, seqs, nullptr);
  return (h * p.wo).rowwise() + p.bo;
}

std::vector<LabelId> predict_all(const GruParams& p, std::span<const Sequence> seqs, std::size_t batch) {
  std::vector<LabelId> out;
  out.reserve(seqs.size());
  for (std::size_t start = 0; start < seqs.size(); start += batch) {
    std::vector<const Sequence*> chunk;
    for (std::size_t i = start; i < std::min(seqs.size(), start + batch); ++i) chunk.push_back(&seqs[i]);
    const MatrixXd logits = batch_logits(p, chunk);
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      Eigen::Index best;
      logits.row(i).maxCoeff(&best);
      out.push_back(static_cast<LabelId>(best));
    }
  }
  return out;
}

template <typename M>
nlohmann::json tensor_json(const M& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  }
  return {{"shape", {m.rows(), m.cols()}}, {"data", flat}};
}

template <typename M>
void tensor_from_json(const nlohmann::json& j, M& m) {
  const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
  const auto flat = j.at("data").get<std::vector<double>>();
  if (shape.size() != 2 || static_cast<std::size_t>(shape[0] * shape[1]) != flat.size()) {
    throw DataError("gru json: tensor shape does not match its data");
  }
  m.resize(shape[0], shape[1]);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < shape[0]; ++i) {
    for (Eigen::Index jj = 0; jj < shape[1]; ++jj) m(i, jj) = flat[k++];
  }
}

}  // namespace

SeqVocabulary SeqVocabulary::build(std::span<const TokenList> docs, std::size_t min_freq, std::size_t max_len) {
  if (max_len == 0) throw UsageError("max_len must be positive");
  std::map<std::string, std::size_t> freq;
  for (const auto& doc : docs) {
    for (const auto& tok : doc) ++freq[tok];
  }
  SeqVocabulary v;
  v.max_len_ = max_len;
  v.min_freq_ = min_freq;
  for (const auto& [tok, n] : freq) {
    if (n >= std::max<std::size_t>(min_freq, 1)) {
      v.index_.emplace(tok, static_cast<std::uint32_t>(v.tokens_.size() + 2));
      v.tokens_.push_back(tok);
    }
  }
  return v;
}

std::uint32_t SeqVocabulary::index_of(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kOov : it->second;
}

Sequence SeqVocabulary::encode(std::span<const std::string> tokens) const {
  Sequence s(max_len_, kPad);
  for (std::size_t i = 0; i < std::min(max_len_, tokens.size()); ++i) s[i] = index_of(tokens[i]);
  return s;
}

nlohmann::json SeqVocabulary::to_json() const {
  return {{"max_len", max_len_}, {"min_freq", min_freq_}, {"tokens", tokens_}};
}

SeqVocabulary SeqVocabulary::from_json(const nlohmann::json& j) {
  SeqVocabulary v;
  v.max_len_ = j.at("max_len").get<std::size_t>();
  v.min_freq_ = j.at("min_freq").get<std::size_t>();
  v.tokens_ = j.at("tokens").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], static_cast<std::uint32_t>(i + 2)).second) {
      throw DataError("vocabulary json: duplicate token " + v.tokens_[i]);
    }
  }
  return v;
}

GruParams GruParams::zeros(std::size_t vocab, std::size_t emb, std::size_t hidden, std::size_t classes) {
  const auto v = static_cast<Eigen::Index>(vocab), e = static_cast<Eigen::Index>(emb),
             h = static_cast<Eigen::Index>(hidden), k = static_cast<Eigen::Index>(classes);
  GruParams p;
  p.embedding = MatrixXd::Zero(v, e);
  p.wz = MatrixXd::Zero(e, h);
  p.wr = MatrixXd::Zero(e, h);
  p.wh = MatrixXd::Zero(e, h);
  p.uz = MatrixXd::Zero(h, h);
  p.ur = MatrixXd::Zero(h, h);
  p.uh = MatrixXd::Zero(h, h);
  p.bz = RowVectorXd::Zero(h);
  p.br = RowVectorXd::Zero(h);
  p.bh = RowVectorXd::Zero(h);
  p.wo = MatrixXd::Zero(h, k);
  p.bo = RowVectorXd::Zero(k);
  return p;
}

GruParams GruParams::random(std::size_t vocab, std::size_t emb, std::size_t hidden, std::size_t classes,
                            std::uint64_t seed) {
  GruParams p = zeros(vocab, emb, hidden, classes);
  Rng rng(seed);
  p.for_each([&](auto& m) {
    using M = std::decay_t<decltype(m)>;
    if constexpr (std::is_same_v<M, RowVectorXd>) {
      m = uniform_row(m.cols(), rng);
    } else {
      m = uniform_matrix(m.rows(), m.cols(), rng);
    }
  });
  return p;
}

RowVectorXd gru_cell(const RowVectorXd& x, const RowVectorXd& h, const GruParams& p) {
  const RowVectorXd z = sigmoid(x * p.wz + h * p.uz + p.bz);
  const RowVectorXd r = sigmoid(x * p.wr + h * p.ur + p.br);
  const RowVectorXd c = (x * p.wh + (r.array() * h.array()).matrix() * p.uh + p.bh).array().tanh().matrix();
  return ((1.0 - z.array()) * h.array() + z.array() * c.array()).matrix();
}

RowVectorXd forward(const GruParams& p, const Sequence& seq, const RowVectorXd* mask) {
  MatrixXd h = run_batch(p, {&seq}, nullptr);
  if (mask) h.array() *= mask->array();
  return h * p.wo + p.bo;
}

Eigen::MatrixXd dropout_mask(std::size_t batch, std::size_t hidden, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw UsageError("dropout must be in [0, 1)");
  MatrixXd m = MatrixXd::Ones(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(hidden));
  if (rate == 0.0) return m;
  const double keep = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.bernoulli(rate) ? 0.0 : keep;
  }
  return m;
}

double loss_gradients(const GruParams& p, const GruBatch& batch, std::span<const double> class_weights,
                      const MatrixXd& mask, GruParams* grad) {
  const auto b = static_cast<Eigen::Index>(batch.sequences.size());
  if (b == 0) throw std::invalid_argument("loss_gradients: empty batch");
  if (batch.labels.size() != batch.sequences.size()) throw std::invalid_argument("loss_gradients: label count");
  const bool use_mask = mask.size() > 0;
  if (use_mask && (mask.rows() != b || mask.cols() != static_cast<Eigen::Index>(p.hidden_dim()))) {
    throw std::invalid_argument("loss_gradients: dropout mask shape");
  }
  std::vector<StepCache> cache;
  const MatrixXd h_final = run_batch(p, batch.sequences, grad ? &cache : nullptr);
  const MatrixXd d = use_mask ? MatrixXd(h_final.array() * mask.array()) : h_final;
  const MatrixXd logits = (d * p.wo).rowwise() + p.bo;

  const double inv_b = 1.0 / static_cast<double>(b);
  double loss = 0.0;
  MatrixXd dlogits(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < b; ++i) {
    const LabelId y = batch.labels[static_cast<std::size_t>(i)];
    if (y >= static_cast<LabelId>(logits.cols())) throw std::invalid_argument("loss_gradients: label out of range");
    const double w = class_weights[y];
    const double m = logits.row(i).maxCoeff();
    const RowVectorXd e = (logits.row(i).array() - m).exp().matrix();
    const double s = e.sum();
    loss += w * (m + std::log(s) - logits(i, y));
    dlogits.row(i) = e / s;
    dlogits(i, y) -= 1.0;
    dlogits.row(i) *= w * inv_b;
  }
  loss *= inv_b;
  if (!grad) return loss;

  *grad = GruParams::zeros(p.vocab_size(), p.embedding_dim(), p.hidden_dim(), p.num_classes());
  grad->dropout = p.dropout;
  grad->wo = d.transpose() * dlogits;
  grad->bo = dlogits.colwise().sum();
  MatrixXd dh = dlogits * p.wo.transpose();
  if (use_mask) dh.array() *= mask.array();

  for (std::size_t t = cache.size(); t-- > 0;) {
    const StepCache& sc = cache[t];
    MatrixXd dnew = dh;
    MatrixXd dprev = dh;
    for (Eigen::Index i = 0; i < b; ++i) {
      if (sc.active(i) == 0.0) {
        dnew.row(i).setZero();
      } else {
        dprev.row(i).setZero();
      }
    }
    const auto z = sc.z.array();
    const auto r = sc.r.array();
    const auto c = sc.c.array();
    const auto hp = sc.h_prev.array();
    const MatrixXd dz = (dnew.array() * (c - hp)).matrix();
    const MatrixXd dah = (dnew.array() * z * (1.0 - c * c)).matrix();
    dprev.array() += dnew.array() * (1.0 - z);

    const MatrixXd rh = (r * hp).matrix();
    grad->wh.noalias() += sc.x.transpose() * dah;
    grad->uh.noalias() += rh.transpose() * dah;
    grad->bh += dah.colwise().sum();
    const MatrixXd drh = dah * p.uh.transpose();
    dprev.array() += drh.array() * r;
    const MatrixXd dar = (drh.array() * hp * r * (1.0 - r)).matrix();
    const MatrixXd daz = (dz.array() * z * (1.0 - z)).matrix();

    grad->wr.noalias() += sc.x.transpose() * dar;
    grad->ur.noalias() += sc.h_prev.transpose() * dar;
    grad->br += dar.colwise().sum();
    grad->wz.noalias() += sc.x.transpose() * daz;
    grad->uz.noalias() += sc.h_prev.transpose() * daz;
    grad->bz += daz.colwise().sum();
    dprev.noalias() += dar * p.ur.transpose();
    dprev.noalias() += daz * p.uz.transpose();

    const MatrixXd dx = daz * p.wz.transpose() + dar * p.wr.transpose() + dah * p.wh.transpose();
    for (Eigen::Index i = 0; i < b; ++i) {
      if (sc.active(i) == 0.0) continue;
      const auto idx = (*batch.sequences[static_cast<std::size_t>(i)])[t];
      grad->embedding.row(idx) += dx.row(i);
    }
    dh = std::move(dprev);
  }
  return loss;
}

GruModel train_gru(const SeqVocabulary& vocab, std::span<const Sequence> train, std::span<const LabelId> y_train,
                   std::span<const Sequence> val, std::span<const LabelId> y_val, std::size_t num_classes,
                   const GruTrainConfig& config, GruTrainTrace* trace) {
  if (train.empty()) throw DataError("train_gru: empty training set");
  if (train.size() != y_train.size() || val.size() != y_val.size()) {
    throw std::invalid_argument("train_gru: sequences and labels differ in length");
  }
  if (config.embedding_dim == 0 || config.hidden_dim == 0 || config.batch_size == 0 || config.epochs == 0) {
    throw UsageError("GRU dimensions, batch size and epochs must be positive");
  }
  if (config.learning_rate < 0) throw UsageError("learning rate must be non-negative");

  const auto weights = class_weights(y_train, num_classes, config.class_weight);
  GruModel model;
  model.vocab = vocab;
  GruParams params = GruParams::random(vocab.size(), config.embedding_dim, config.hidden_dim, num_classes,
                                       child_seed(config.seed, 0));
  params.dropout = config.dropout;
  Rng order_rng(child_seed(config.seed, 1));
  Rng drop_rng(child_seed(config.seed, 2));

  GruParams m = GruParams::zeros(vocab.size(), config.embedding_dim, config.hidden_dim, num_classes);
  GruParams v = m;
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double beta1_t = 1.0, beta2_t = 1.0;

  GruTrainTrace local;
  double best_f1 = -1.0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  GruParams grad;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      GruBatch batch;
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
        batch.sequences.push_back(&train[order[i]]);
        batch.labels.push_back(y_train[order[i]]);
      }
      const MatrixXd mask = dropout_mask(batch.sequences.size(), config.hidden_dim, config.dropout, drop_rng);
      loss_sum += loss_gradients(params, batch, weights, mask, &grad);
      ++batches;

      beta1_t *= beta1;
      beta2_t *= beta2;
      const double lr = config.learning_rate;
      auto step = [&](auto& theta, auto& g, auto& mm, auto& vv) {
        mm = beta1 * mm + (1.0 - beta1) * g;
        vv = (beta2 * vv.array() + (1.0 - beta2) * g.array().square()).matrix();
        theta.array() -= lr * (mm.array() / (1.0 - beta1_t)) / ((vv.array() / (1.0 - beta2_t)).sqrt() + eps);
      };
      step(params.embedding, grad.embedding, m.embedding, v.embedding);
      step(params.wz, grad.wz, m.wz, v.wz);
      step(params.uz, grad.uz, m.uz, v.uz);
      step(params.wr, grad.wr, m.wr, v.wr);
      step(params.ur, grad.ur, m.ur, v.ur);
      step(params.wh, grad.wh, m.wh, v.wh);
      step(params.uh, grad.uh, m.uh, v.uh);
      step(params.bz, grad.bz, m.bz, v.bz);
      step(params.br, grad.br, m.br, v.br);
      step(params.bh, grad.bh, m.bh, v.bh);
      step(params.wo, grad.wo, m.wo, v.wo);
      step(params.bo, grad.bo, m.bo, v.bo);
    }
    local.train_loss.push_back(loss_sum / static_cast<double>(batches));

    double f1 = 0.0;
    if (!val.empty()) {
      const auto pred = predict_all(params, val, 256);
      f1 = weighted_f1(y_val, pred, num_classes);
    }
    local.val_weighted_f1.push_back(f1);
    if (f1 > best_f1 || val.empty()) {
      best_f1 = f1;
      model.params = params;
      model.best_epoch = epoch;
    }
  }
  if (trace) *trace = std::move(local);
  return model;
}

std::vector<double> predict_proba(const GruModel& model, const Sequence& seq) {
  const RowVectorXd z = forward(model.params, seq);
  const RowVectorXd e = (z.array() - z.maxCoeff()).exp().matrix();
  const RowVectorXd p = e / e.sum();
  return std::vector<double>(p.data(), p.data() + p.size());
}

LabelId predict(const GruModel& model, const Sequence& seq) {
  return static_cast<LabelId>(argmax(predict_proba(model, seq)));
}

nlohmann::json to_json(const GruModel& model) {
  const GruParams& p = model.params;
  return {{"dims",
           {{"vocab", p.vocab_size()},
            {"embedding", p.embedding_dim()},
            {"hidden", p.hidden_dim()},
            {"classes", p.num_classes()}}},
          {"dropout", p.dropout},
          {"best_epoch", model.best_epoch},
          {"vocabulary", model.vocab.to_json()},
          {"tensors",
           {{"embedding", tensor_json(p.embedding)},
            {"wz", tensor_json(p.wz)},
            {"uz", tensor_json(p.uz)},
            {"bz", tensor_json(p.bz)},
            {"wr", tensor_json(p.wr)},
            {"ur", tensor_json(p.ur)},
            {"br", tensor_json(p.br)},
            {"wh", tensor_json(p.wh)},
            {"uh", tensor_json(p.uh)},
            {"bh", tensor_json(p.bh)},
            {"wo", tensor_json(p.wo)},
            {"bo", tensor_json(p.bo)}}}};
}

GruModel gru_from_json(const nlohmann::json& j) {
  GruModel model;
  model.vocab = SeqVocabulary::from_json(j.at("vocabulary"));
  model.best_epoch = j.at("best_epoch").get<std::size_t>();
  const auto& dims = j.at("dims");
  GruParams& p = model.params;
  p = GruParams::zeros(dims.at("vocab").get<std::size_t>(), dims.at("embedding").get<std::size_t>(),
                       dims.at("hidden").get<std::size_t>(), dims.at("classes").get<std::size_t>());
  GruParams expected = p;
  p.dropout = j.at("dropout").get<double>();
  const auto& t = j.at("tensors");
  tensor_from_json(t.at("embedding"), p.embedding);
  tensor_from_json(t.at("wz"), p.wz);
  tensor_from_json(t.at("uz"), p.uz);
  tensor_from_json(t.at("bz"), p.bz);
  tensor_from_json(t.at("wr"), p.wr);
  tensor_from_json(t.at("ur"), p.ur);
  tensor_from_json(t.at("br"), p.br);
  tensor_from_json(t.at("wh"), p.wh);
  tensor_from_json(t.at("uh"), p.uh);
  tensor_from_json(t.at("bh"), p.bh);
  tensor_from_json(t.at("wo"), p.wo);
  tensor_from_json(t.at("bo"), p.bo);
  p.for_each_pair(expected, [](const auto& a, const auto& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DataError("gru json: tensor dims disagree with header");
  });
  if (model.vocab.size() != p.vocab_size()) throw DataError("gru json: vocabulary size disagrees with embedding");
  return model;
}

}  // namespace mhc
