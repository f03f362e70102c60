#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "hebrain/errors.hpp"
#include "hebrain/prediction.hpp"

using namespace hebrain;

namespace {

// O(n^2) AUC in half units.
std::uint64_t pairwise_half_units(const std::vector<double>& s, const std::vector<int>& y) {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) total += s[i] > s[j] ? 2 : (s[i] == s[j] ? 1 : 0);
  return total;
}

NodeEmbeddings embeddings(ad::Tape& tape, const Matrix& z, const Matrix& h) {
  return {tape.constant(z), tape.constant(h)};
}

}  // namespace

TEST_CASE("readout examples") {
  ad::Tape tape;
  const NodeEmbeddings emb = embeddings(tape, Matrix{{2}, {3}}, Matrix{{4}, {5}});
  CHECK(readout(emb, tape.constant(Matrix{{1}}), tape.constant(Matrix{{0}}), {}).value() ==
        Matrix{{2, 3, 4, 5}});
  CHECK(readout(emb, tape.constant(Matrix{{0}}), tape.constant(Matrix{{1.5}}), {}).value() ==
        Matrix{{1.5, 1.5, 1.5, 1.5}});

  Rng rng(1);
  const Matrix z = testutil::random_matrix(5, 3, rng), h = testutil::random_matrix(5, 3, rng);
  const Matrix w = testutil::random_matrix(3, 1, rng);
  const NodeEmbeddings r = embeddings(tape, z, h);
  const Matrix gh = readout(r, tape.constant(w), tape.constant(Matrix{{0.25}}), {}).value();
  for (std::size_t i = 0; i < 10; ++i) {
    const Matrix& src = i < 5 ? z : h;
    double dot = 0.25;
    for (std::size_t c = 0; c < 3; ++c) dot += src(i % 5, c) * w(c, 0);
    CHECK(std::abs(gh(0, i) - dot) < 1e-14);
  }
  CHECK_THROWS_AS(readout(r, tape.constant(Matrix(2, 1)), tape.constant(Matrix{{0}}), {}),
                  ShapeError);
}

TEST_CASE("prediction examples") {
  MLPParams mlp;
  mlp.weights.emplace_back("w", Matrix(4, 2));
  mlp.biases.emplace_back("b", Matrix(1, 2));
  ad::Tape tape;
  ParamBinder binder(tape, {});
  const Matrix p0 = predict(tape.constant(Matrix{{1, 2, 3, 4}}), mlp, binder).value();
  CHECK(p0 == Matrix{{0.5, 0.5}});

  mlp.biases[0].value = Matrix{{7.5, 7.5}};
  const Matrix p1 = predict(tape.constant(Matrix{{0, 0, 0, 0}}), mlp, binder).value();
  CHECK(p1 == Matrix{{0.5, 0.5}});

  Rng rng(2);
  mlp.weights[0].value = testutil::random_matrix(4, 2, rng);
  mlp.biases[0].value = testutil::random_matrix(1, 2, rng);
  const Matrix x = testutil::random_matrix(1, 4, rng);
  const Matrix p = predict(tape.constant(x), mlp, binder).value();
  double logit[2];
  for (std::size_t c = 0; c < 2; ++c) {
    logit[c] = mlp.biases[0].value(0, c);
    for (std::size_t i = 0; i < 4; ++i) logit[c] += x(0, i) * mlp.weights[0].value(i, c);
  }
  const double p1_oracle = 1.0 / (1.0 + std::exp(logit[0] - logit[1]));
  CHECK(std::abs(p(0, 1) - p1_oracle) < 1e-12);
  CHECK(std::abs(p(0, 0) + p(0, 1) - 1.0) < 1e-15);
  CHECK_THROWS_AS(predict(tape.constant(Matrix(1, 3)), mlp, binder), ShapeError);
}

TEST_CASE("cross-entropy examples") {
  const std::vector<double> half{0.5};
  const std::vector<int> one{1};
  CHECK(ce_loss(half, one) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const std::vector<double> perfect{1.0, 0.0};
  const std::vector<int> labels{1, 0};
  CHECK(ce_loss(perfect, labels) < 1e-12);
  const std::vector<double> p3{0.8, 0.3, 0.6};
  const std::vector<int> y3{1, 0, 0};
  const double oracle = -(std::log(0.8) + std::log(0.7) + std::log(0.4)) / 3.0;
  CHECK(std::abs(ce_loss(p3, y3) - oracle) < 1e-14);
  const std::vector<int> bad{2};
  CHECK_THROWS_AS(ce_loss(half, bad), ValidationError);

  ad::Tape tape;
  const double l = subject_ce_loss(tape.constant(Matrix{{0.2, 0.8}}), 1).value()(0, 0);
  CHECK(std::abs(l + std::log(0.8)) < 1e-15);
  CHECK_THROWS_AS(subject_ce_loss(tape.constant(Matrix{{0.2, 0.8}}), -1), ValidationError);
}

TEST_CASE("metric examples") {
  const std::vector<double> s{0.9, 0.1};
  const std::vector<int> y{1, 0};
  const Metrics m = compute_metrics(s, y);
  CHECK(m.accuracy == 1.0);
  CHECK(m.f1 == 1.0);
  CHECK(m.auc == 1.0);
  CHECK(m.sensitivity == 1.0);

  // TP, FP, FN, TN once each.
  const std::vector<double> s2{0.9, 0.8, 0.2, 0.1};
  const std::vector<int> y2{1, 0, 1, 0};
  const Metrics m2 = compute_metrics(s2, y2);
  CHECK(m2.f1 == 0.5);
  CHECK(m2.accuracy == 0.5);
  CHECK(m2.sensitivity == 0.5);

  const std::vector<double> exactly_half{0.5, 0.4};
  const Metrics m3 = compute_metrics(exactly_half, y);
  CHECK(m3.sensitivity == 0.0);

  const std::vector<int> single{1, 1};
  CHECK_THROWS_AS(compute_metrics(s, single), ValidationError);
  CHECK_THROWS_AS(compute_metrics(std::vector<double>{}, std::vector<int>{}), ValidationError);
}

TEST_CASE("AUC equals the pairwise oracle on 200 random cases") {
  Rng rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng.uniform_index(60);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::round(rng.uniform() * 10.0) / 10.0;  // plenty of ties
      y[i] = static_cast<int>(rng.uniform_index(2));
    }
    y[0] = 0;
    y[1] = 1;
    CHECK(mann_whitney_half_units(s, y) == pairwise_half_units(s, y));
    std::uint64_t pos = std::count(y.begin(), y.end(), 1), neg = n - pos;
    CHECK(compute_metrics(s, y).auc ==
          static_cast<double>(pairwise_half_units(s, y)) / static_cast<double>(2 * pos * neg));
  }
}

TEST_CASE("AUC is invariant under monotone transforms") {
  Rng rng(4);
  std::vector<double> s(40), t(40);
  std::vector<int> y(40);
  for (std::size_t i = 0; i < 40; ++i) {
    s[i] = rng.uniform();
    t[i] = std::exp(3.0 * s[i]) - 7.0;
    y[i] = static_cast<int>(i % 2);
  }
  CHECK(compute_metrics(s, y).auc == compute_metrics(t, y).auc);
}

TEST_CASE("confusion counts on constructed cases") {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t tp = 1 + rng.uniform_index(5), fp = rng.uniform_index(5),
                      fn = rng.uniform_index(5), tn = 1 + rng.uniform_index(5);
    std::vector<double> s;
    std::vector<int> y;
    auto push = [&](std::size_t count, double score, int label) {
      for (std::size_t i = 0; i < count; ++i) {
        s.push_back(score);
        y.push_back(label);
      }
    };
    push(tp, 0.9, 1);
    push(fp, 0.7, 0);
    push(fn, 0.3, 1);
    push(tn, 0.1, 0);
    const Metrics m = compute_metrics(s, y);
    const double total = static_cast<double>(tp + fp + fn + tn);
    CHECK(m.accuracy == static_cast<double>(tp + tn) / total);
    CHECK(m.sensitivity == static_cast<double>(tp) / static_cast<double>(tp + fn));
    CHECK(m.f1 == static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn));
  }
}

TEST_CASE("learning-rate schedule") {
  FinetuneConfig cfg;
  cfg.lr = 1.0;
  CHECK(scheduled_lr(cfg, 0) == 1.0);
  CHECK(scheduled_lr(cfg, 34) == 1.0);
  CHECK(scheduled_lr(cfg, 35) == 0.25);
  CHECK(scheduled_lr(cfg, 39) == 0.25);
  CHECK(scheduled_lr(cfg, 40) == 0.0625);
}

namespace {

std::vector<PreparedSubject> toy_subjects(std::size_t count, Rng& rng) {
  // Linearly separable through the features: label 1 shifts every feature.
  std::vector<PreparedSubject> out;
  for (std::size_t s = 0; s < count; ++s) {
    HeteroBrainGraph g = testutil::random_graph(8, 3, rng, 0.5);
    const int label = static_cast<int>(s % 2);
    for (double& v : g.features.data()) v += label == 1 ? 1.0 : -1.0;
    out.push_back(prepare_subject(g, label, "t" + std::to_string(s), AblationMode::Hetero, 2));
  }
  return out;
}

ModelConfig toy_config() {
  ModelConfig c;
  c.n_nodes = 8;
  c.feature_dim = 3;
  c.hidden_dim = 4;
  return c;
}

}  // namespace

TEST_CASE("fine-tuning: lr 0 is constant, runs reproduce, separable loss decreases") {
  Rng rng(6);
  const auto train = toy_subjects(12, rng);
  const auto test = toy_subjects(6, rng);
  FinetuneConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 4;
  cfg.lr = 0.0;
  ModelParams frozen = init_model(toy_config(), 1);
  const FinetuneResult r0 = finetune(train, test, frozen, cfg, 3);
  REQUIRE(r0.trace.size() == 10);
  for (const auto& e : r0.trace) {
    const auto& first = e.split == "train" ? r0.trace[0] : r0.trace[1];
    CHECK(e.ce_loss == first.ce_loss);
    CHECK(e.metrics.accuracy == first.metrics.accuracy);
  }
  CHECK(r0.ems_trace.size() == 10);

  cfg.lr = 1e-3;
  cfg.dropout = 0.0;
  cfg.batch_size = 12;
  cfg.epochs = 15;
  ModelParams a = init_model(toy_config(), 1);
  ModelParams b = init_model(toy_config(), 1);
  const FinetuneResult ra = finetune(train, test, a, cfg, 4);
  const FinetuneResult rb = finetune(train, test, b, cfg, 4);
  double prev = 1e9;
  for (std::size_t i = 0; i < ra.trace.size(); ++i) {
    CHECK(ra.trace[i].ce_loss == rb.trace[i].ce_loss);
    if (ra.trace[i].split == "train") {
      CHECK(ra.trace[i].ce_loss <= prev + 1e-6);
      prev = ra.trace[i].ce_loss;
    }
  }
  CHECK(prev < ra.trace[0].ce_loss);
  CHECK_THROWS_AS(finetune({}, test, a, cfg, 1), ContractError);
}

TEST_CASE("fine-tuning gradients match central differences") {
  Rng rng(7);
  const auto subjects = toy_subjects(1, rng);
  ModelConfig cfg = toy_config();
  ModelParams model = init_model(cfg, 8);
  const GradCheckResult res = gradient_check(model.finetune_params(), [&](ParamBinder& b) {
    const NodeEmbeddings emb = encode(subjects[0].ops, model, b, {});
    return subject_ce_loss(predict(readout(emb, model.readout, b, {}), model.mlp, b), 1);
  });
  CAPTURE(res.worst_param);
  CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("an MLP with a hidden layer trains and checks") {
  Rng rng(9);
  const auto subjects = toy_subjects(1, rng);
  ModelConfig cfg = toy_config();
  cfg.mlp_hidden = {5};
  ModelParams model = init_model(cfg, 10);
  CHECK(model.mlp.weights.size() == 2);
  const GradCheckResult res = gradient_check(model.finetune_params(), [&](ParamBinder& b) {
    const NodeEmbeddings emb = encode(subjects[0].ops, model, b, {});
    return subject_ce_loss(predict(readout(emb, model.readout, b, {}), model.mlp, b), 0);
  });
  CHECK(res.max_rel_error < 1e-4);
}
