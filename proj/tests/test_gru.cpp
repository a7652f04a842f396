#include <cmath>

#include "doctest.h"
#include "mhc/gru.hpp"
#include "mhc/metrics.hpp"
#include "support.hpp"

using namespace mhc;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;

namespace {

double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Sequence random_sequence(std::size_t len, std::size_t vocab, Rng& rng) {
  Sequence s(len, kPad);
  const std::size_t used = 1 + rng.uniform_index(len);
  for (std::size_t t = 0; t < used; ++t) s[t] = static_cast<std::uint32_t>(1 + rng.uniform_index(vocab - 1));
  // An interior PAD must also be skipped.
  if (used > 2 && rng.bernoulli(0.3)) s[1] = kPad;
  return s;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-4 * std::max(std::abs(a), std::abs(b)) + 1e-8; }

}  // namespace

TEST_CASE("sequence vocabulary") {
  std::vector<TokenList> docs = {{"sad", "low", "sad"}, {"low", "fine"}, {"zebra"}};
  const auto v = SeqVocabulary::build(docs, 2, 5);
  CHECK(v.tokens() == std::vector<std::string>{"low", "sad"});
  CHECK(v.size() == 4);
  CHECK(v.index_of("low") == 2);
  CHECK(v.index_of("zebra") == kOov);
  CHECK(v.encode(TokenList{"sad", "low", "sad"}) == Sequence{3, 2, 3, kPad, kPad});
  CHECK(v.encode(TokenList{"unseen"}) == Sequence{kOov, kPad, kPad, kPad, kPad});
  CHECK(v.encode(TokenList{}) == Sequence(5, kPad));
  CHECK(v.encode(TokenList{"sad", "sad", "sad", "sad", "sad", "low"}) == Sequence(5, 3));
  const auto back = SeqVocabulary::from_json(v.to_json());
  CHECK(back.tokens() == v.tokens());
  CHECK(back.max_len() == 5);
}

TEST_CASE("gru cell") {
  auto zero = GruParams::zeros(5, 3, 4, 2);
  RowVectorXd x = RowVectorXd::Constant(3, 0.7), h = RowVectorXd::Zero(4);
  CHECK(gru_cell(x, h, zero).isZero(0.0));

  auto closed = GruParams::random(5, 3, 4, 2, 3);
  closed.bz.setConstant(-50.0);
  RowVectorXd prev(4);
  prev << 0.3, -0.2, 0.5, 0.1;
  CHECK((gru_cell(x, prev, closed) - prev).cwiseAbs().maxCoeff() < 1e-12);

  // Scalar re-computation of the four equations.
  const auto p = GruParams::random(5, 3, 4, 2, 11);
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    RowVectorXd xi(3), hi(4);
    for (int k = 0; k < 3; ++k) xi(k) = rng.uniform(-1, 1);
    for (int k = 0; k < 4; ++k) hi(k) = rng.uniform(-0.9, 0.9);
    const auto got = gru_cell(xi, hi, p);
    std::vector<double> r(4);
    for (int j = 0; j < 4; ++j) {
      double a = p.br(j);
      for (int k = 0; k < 3; ++k) a += xi(k) * p.wr(k, j);
      for (int k = 0; k < 4; ++k) a += hi(k) * p.ur(k, j);
      r[static_cast<std::size_t>(j)] = sig(a);
    }
    for (int j = 0; j < 4; ++j) {
      double az = p.bz(j), ah = p.bh(j);
      for (int k = 0; k < 3; ++k) {
        az += xi(k) * p.wz(k, j);
        ah += xi(k) * p.wh(k, j);
      }
      for (int k = 0; k < 4; ++k) {
        az += hi(k) * p.uz(k, j);
        ah += r[static_cast<std::size_t>(k)] * hi(k) * p.uh(k, j);
      }
      const double z = sig(az);
      const double want = (1 - z) * hi(j) + z * std::tanh(ah);
      CHECK(got(j) == doctest::Approx(want).epsilon(1e-13));
      CHECK(std::abs(got(j)) < 1.0);
    }
  }
}

TEST_CASE("forward contracts") {
  const auto p = GruParams::random(10, 4, 5, 3, 7);
  const Sequence pads(6, kPad);
  CHECK((forward(p, pads) - p.bo).cwiseAbs().maxCoeff() == 0.0);
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_sequence(6, 10, rng);
    const auto a = forward(p, s), b = forward(p, s);
    CHECK(a.size() == 3);
    CHECK(a == b);
    auto longer = s;
    longer.insert(longer.end(), 4, kPad);
    CHECK((forward(p, longer) - a).cwiseAbs().maxCoeff() == 0.0);
  }
  Sequence bad{99};
  CHECK_THROWS(forward(p, bad));
}

TEST_CASE("loss values") {
  const auto zero = GruParams::zeros(10, 4, 5, 3);
  Rng rng(1);
  std::vector<Sequence> seqs;
  for (int i = 0; i < 4; ++i) seqs.push_back(random_sequence(6, 10, rng));
  GruBatch batch;
  for (auto& s : seqs) batch.sequences.push_back(&s);
  batch.labels = {0, 1, 2, 1};
  GruParams grad;
  const std::vector<double> ones{1, 1, 1}, twos{2, 2, 2};
  CHECK(loss_gradients(zero, batch, ones, MatrixXd(), &grad) == doctest::Approx(std::log(3.0)));
  const auto p = GruParams::random(10, 4, 5, 3, 5);
  const double l1 = loss_gradients(p, batch, ones, MatrixXd(), &grad);
  CHECK(loss_gradients(p, batch, twos, MatrixXd(), &grad) == doctest::Approx(2 * l1));
}

TEST_CASE("BPTT gradients match central differences with a frozen dropout mask") {
  Rng rng(2024);
  std::size_t checked = 0, bad = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto p = GruParams::random(10, 4, 5, 3, rng.next());
    // Larger weights than the init range so gates leave their linear regime.
    p.for_each([&](auto& t) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] *= 6.0;
    });
    std::vector<Sequence> seqs;
    for (int i = 0; i < 3; ++i) seqs.push_back(random_sequence(6, 10, rng));
    GruBatch batch;
    for (auto& s : seqs) batch.sequences.push_back(&s);
    batch.labels = {static_cast<LabelId>(rng.uniform_index(3)), static_cast<LabelId>(rng.uniform_index(3)),
                    static_cast<LabelId>(rng.uniform_index(3))};
    const std::vector<double> w{0.5, 1.0, 2.0};
    const MatrixXd mask = dropout_mask(3, 5, 0.3, rng);
    GruParams grad;
    loss_gradients(p, batch, w, mask, &grad);
    GruParams probe = p;
    probe.for_each_pair(grad, [&](auto& theta, auto& g) {
      for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const double keep = theta.data()[i];
        const double h = 1e-5;
        theta.data()[i] = keep + h;
        const double up = loss_gradients(probe, batch, w, mask, nullptr);
        theta.data()[i] = keep - h;
        const double down = loss_gradients(probe, batch, w, mask, nullptr);
        theta.data()[i] = keep;
        const double fd = (up - down) / (2 * h);
        ++checked;
        if (!close(fd, g.data()[i])) ++bad;
      }
    });
  }
  CHECK(checked > 20 * 150);
  CHECK(bad == 0);
}

TEST_CASE("dropout mask entries") {
  Rng rng(3);
  const auto m = dropout_mask(50, 40, 0.2, rng);
  std::size_t zeros = 0;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    CHECK((v == 0.0 || v == doctest::Approx(1.25)));
    zeros += v == 0.0;
  }
  CHECK(zeros > 300);
  CHECK(zeros < 500);
  CHECK(dropout_mask(2, 3, 0.0, rng).isOnes());
}

TEST_CASE("training determinism, zero learning rate and a separable corpus") {
  const auto data = test::synthetic_data(400);
  const auto vocab = SeqVocabulary::build(data.train.tokens, 2, 32);
  std::vector<Sequence> tr, va;
  for (const auto& t : data.train.tokens) tr.push_back(vocab.encode(t));
  for (const auto& t : data.validation.tokens) va.push_back(vocab.encode(t));
  GruTrainConfig cfg;
  cfg.embedding_dim = 16;
  cfg.hidden_dim = 16;
  cfg.learning_rate = 5e-3;
  cfg.epochs = 4;
  cfg.seed = 99;
  GruTrainTrace trace;
  const auto a = train_gru(vocab, tr, data.train.y, va, data.validation.y, 2, cfg, &trace);
  const auto b = train_gru(vocab, tr, data.train.y, va, data.validation.y, 2, cfg);
  CHECK(to_json(a) == to_json(b));
  CHECK(trace.val_weighted_f1.size() == 4);
  CHECK(*std::max_element(trace.val_weighted_f1.begin(), trace.val_weighted_f1.end()) >= 0.95);
  CHECK(trace.val_weighted_f1[a.best_epoch - 1] ==
        *std::max_element(trace.val_weighted_f1.begin(), trace.val_weighted_f1.end()));

  cfg.learning_rate = 0.0;
  cfg.epochs = 1;
  const auto frozen = train_gru(vocab, tr, data.train.y, va, data.validation.y, 2, cfg);
  const auto init = GruParams::random(vocab.size(), 16, 16, 2, child_seed(99, 0));
  CHECK(frozen.params.embedding == init.embedding);
  CHECK(frozen.params.uh == init.uh);
  CHECK(frozen.params.bo == init.bo);

  const auto back = gru_from_json(to_json(a));
  for (const auto& s : va) CHECK(predict_proba(back, s) == predict_proba(a, s));
  CHECK_THROWS_AS(train_gru(vocab, {}, {}, va, data.validation.y, 2, cfg), DataError);
}
