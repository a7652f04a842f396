#include "mhc/experiment.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <set>

namespace mhc {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 5> kFamilyNames = {"logistic", "svm", "rf", "gbdt", "gru"};

// Parameter access with strict key checking.
class Params {
 public:
  Params(const json& j, std::string_view family, std::set<std::string> allowed) : j_(j) {
    if (!j.is_object()) throw UsageError(std::string(family) + " params must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (!allowed.count(key)) throw UsageError("unknown " + std::string(family) + " parameter: " + key);
    }
  }

  double num(const char* key, double fallback) const {
    if (!j_.contains(key) || j_.at(key).is_null()) return fallback;
    if (!j_.at(key).is_number()) throw UsageError(std::string(key) + " must be a number");
    return j_.at(key).get<double>();
  }

  std::size_t count(const char* key, std::size_t fallback) const {
    const double v = num(key, static_cast<double>(fallback));
    if (v < 0 || v != std::floor(v)) throw UsageError(std::string(key) + " must be a non-negative integer");
    return static_cast<std::size_t>(v);
  }

  // null and negative values both mean unbounded.
  int depth(const char* key) const {
    if (!j_.contains(key) || j_.at(key).is_null()) return -1;
    const double v = num(key, -1);
    if (v != std::floor(v)) throw UsageError(std::string(key) + " must be an integer");
    return v < 0 ? -1 : static_cast<int>(v);
  }

  std::string str(const char* key, const std::string& fallback) const {
    if (!j_.contains(key) || j_.at(key).is_null()) return fallback;
    if (!j_.at(key).is_string()) throw UsageError(std::string(key) + " must be a string");
    return j_.at(key).get<std::string>();
  }

  ClassWeightMode class_weight(ClassWeightMode fallback) const {
    if (!j_.contains("class_weight")) return fallback;
    if (j_.at("class_weight").is_null()) return ClassWeightMode::none;
    return parse_class_weight(j_.at("class_weight").get<std::string>());
  }

  const json& raw(const char* key) const { return j_.at(key); }
  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

 private:
  const json& j_;
};

LogisticConfig logistic_config(const json& params) {
  Params p(params, "logistic", {"C", "class_weight", "max_iter", "tol"});
  LogisticConfig c;
  c.C = p.num("C", 1.0);
  c.class_weight = p.class_weight(ClassWeightMode::none);
  c.max_iter = static_cast<int>(p.count("max_iter", 1000));
  c.tol = p.num("tol", 1e-6);
  return c;
}

SvmConfig svm_config(const json& params, std::uint64_t seed) {
  Params p(params, "svm", {"C", "kernel", "class_weight", "gamma", "degree", "coef0", "alpha", "epochs"});
  SvmConfig c;
  c.C = p.num("C", 1.0);
  c.class_weight = p.class_weight(ClassWeightMode::none);
  c.kernel.kind = parse_kernel_kind(p.str("kernel", "rbf"));
  if (p.has("gamma") && p.raw("gamma").is_number()) {
    c.kernel.gamma_mode = GammaMode::value;
    c.kernel.gamma = p.num("gamma", 0.0);
  } else {
    const auto g = p.str("gamma", "scale");
    if (g == "scale") {
      c.kernel.gamma_mode = GammaMode::scale;
    } else if (g == "auto") {
      c.kernel.gamma_mode = GammaMode::auto_;
    } else {
      throw UsageError("gamma must be scale, auto or a positive number");
    }
  }
  c.kernel.degree = static_cast<int>(p.count("degree", 3));
  c.kernel.coef0 = p.num("coef0", 0.0);
  c.kernel.alpha = p.num("alpha", 1.0);
  c.epochs = static_cast<int>(p.count("epochs", 0));
  c.seed = seed;
  return c;
}

TreeConfig forest_config(const json& params) {
  Params p(params, "rf", {"n_estimators", "max_depth", "min_samples_split", "min_samples_leaf", "class_weight",
                          "criterion", "max_features", "bootstrap"});
  TreeConfig c;
  c.n_estimators = p.count("n_estimators", 100);
  c.max_depth = p.depth("max_depth");
  c.min_samples_split = p.count("min_samples_split", 2);
  c.min_samples_leaf = p.count("min_samples_leaf", 1);
  c.class_weight = p.class_weight(ClassWeightMode::none);
  c.criterion = parse_criterion(p.str("criterion", "gini"));
  c.max_features = p.count("max_features", 0);
  if (p.has("bootstrap")) c.bootstrap = p.raw("bootstrap").get<bool>();
  return c;
}

TreeConfig gbdt_config(const json& params) {
  Params p(params, "gbdt", {"n_estimators", "learning_rate", "max_depth", "num_leaves", "min_child_samples",
                            "class_weight", "max_bins"});
  TreeConfig c;
  c.n_estimators = p.count("n_estimators", 100);
  c.learning_rate = p.num("learning_rate", 0.1);
  c.max_depth = p.depth("max_depth");
  c.num_leaves = p.count("num_leaves", 31);
  c.min_child_samples = p.count("min_child_samples", 20);
  c.class_weight = p.class_weight(ClassWeightMode::none);
  c.max_bins = p.count("max_bins", 255);
  return c;
}

GruTrainConfig gru_config(const json& params, std::uint64_t seed) {
  Params p(params, "gru", {"embedding_dim", "hidden_dim", "learning_rate", "epochs", "batch_size", "dropout",
                           "class_weight"});
  GruTrainConfig c;
  c.embedding_dim = p.count("embedding_dim", 200);
  c.hidden_dim = p.count("hidden_dim", 256);
  c.learning_rate = p.num("learning_rate", 5e-4);
  c.epochs = p.count("epochs", 5);
  c.batch_size = p.count("batch_size", 32);
  c.dropout = p.num("dropout", 0.2);
  c.class_weight = p.class_weight(ClassWeightMode::balanced);
  c.seed = seed;
  return c;
}

std::vector<Sequence> encode_all(const SeqVocabulary& vocab, const std::vector<TokenList>& docs) {
  std::vector<Sequence> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(vocab.encode(d));
  return out;
}

DataPart make_part(const std::vector<Document>& docs, const std::vector<std::size_t>& idx) {
  DataPart p;
  for (auto i : idx) {
    p.ids.push_back(docs[i].id);
    p.tokens.push_back(docs[i].tokens);
    p.y.push_back(docs[i].label);
  }
  return p;
}

json plan_to_json(const SearchPlan& plan) {
  json spaces = json::array();
  for (const auto& s : plan.spaces) spaces.push_back(to_json(s));
  json j = {{"mode", plan.mode == SearchPlan::Mode::grid ? "grid" : "random"}, {"spaces", spaces}};
  if (plan.mode == SearchPlan::Mode::random) j["n_trials"] = plan.n_trials;
  return j;
}

SearchPlan plan_from_json(const std::string& family, const json& j) {
  SearchPlan plan;
  const auto mode = j.value("mode", std::string("grid"));
  if (mode == "grid") {
    plan.mode = SearchPlan::Mode::grid;
  } else if (mode == "random") {
    plan.mode = SearchPlan::Mode::random;
  } else {
    throw UsageError("search mode must be grid or random");
  }
  plan.n_trials = j.value("n_trials", std::size_t{10});
  for (const auto& s : j.at("spaces")) plan.spaces.push_back(space_from_json(family, s));
  if (plan.spaces.empty()) throw UsageError("search plan for " + family + " has no spaces");
  return plan;
}

json class_weight_values() { return json::array({"balanced", "none"}); }

}  // namespace

Family parse_family(std::string_view s) {
  for (std::size_t i = 0; i < kFamilyNames.size(); ++i) {
    if (s == kFamilyNames[i]) return static_cast<Family>(i);
  }
  throw UsageError("unknown model family: " + std::string(s));
}

std::string_view to_string(Family f) { return kFamilyNames[static_cast<std::size_t>(f)]; }

std::string_view display_name(Family f) {
  switch (f) {
    case Family::logistic: return "Logistic Regression";
    case Family::svm: return "SVM";
    case Family::rf: return "Random Forest";
    case Family::gbdt: return "LightGBM-style GBDT";
    case Family::gru: return "GRU";
  }
  return "?";
}

const std::vector<Family>& all_families() {
  static const std::vector<Family> f = {Family::logistic, Family::svm, Family::rf, Family::gbdt, Family::gru};
  return f;
}

SearchPlan default_plan(Family f) {
  SearchPlan plan;
  const json c_values = json::array({0.1, 1, 10});
  switch (f) {
    case Family::logistic:
      plan.spaces.push_back({"logistic", {Axis::list("C", c_values), Axis::list("class_weight", class_weight_values())}});
      break;
    case Family::svm:
      plan.spaces.push_back({"svm",
                             {Axis::list("kernel", {"linear"}), Axis::list("C", c_values),
                              Axis::list("class_weight", class_weight_values())}});
      plan.spaces.push_back({"svm",
                             {Axis::list("kernel", {"rbf"}), Axis::list("C", c_values),
                              Axis::list("class_weight", class_weight_values()),
                              Axis::list("gamma", {"scale", "auto"})}});
      break;
    case Family::rf:
      plan.spaces.push_back({"rf",
                             {Axis::list("n_estimators", {50, 100, 200}), Axis::list("max_depth", {10, 20, nullptr}),
                              Axis::list("min_samples_split", {2, 5}), Axis::list("min_samples_leaf", {1, 2}),
                              Axis::list("class_weight", class_weight_values())}});
      break;
    case Family::gbdt:
      plan.spaces.push_back({"gbdt",
                             {Axis::list("n_estimators", {100}), Axis::list("learning_rate", {0.05, 0.1}),
                              Axis::list("max_depth", {-1}), Axis::list("num_leaves", {31, 50, 63}),
                              Axis::list("min_child_samples", {10, 20}),
                              Axis::list("class_weight", class_weight_values())}});
      break;
    case Family::gru:
      plan.mode = SearchPlan::Mode::random;
      plan.n_trials = 10;
      plan.spaces.push_back({"gru",
                             {Axis::range("embedding_dim", Axis::Kind::integer, 150, 250),
                              Axis::range("hidden_dim", Axis::Kind::integer, 256, 768),
                              Axis::range("learning_rate", Axis::Kind::log_uniform, 1e-4, 1e-3),
                              Axis::range("epochs", Axis::Kind::integer, 5, 10), Axis::list("dropout", {0.2})}});
      break;
  }
  return plan;
}

const SearchPlan& ExperimentConfig::plan(Family f) const {
  const auto it = search.find(std::string(to_string(f)));
  if (it == search.end()) throw UsageError("experiment has no search plan for " + std::string(to_string(f)));
  return it->second;
}

ExperimentConfig default_experiment() {
  ExperimentConfig c;
  for (Family f : all_families()) c.search[std::string(to_string(f))] = default_plan(f);
  return c;
}

json to_json(const ExperimentConfig& c) {
  json search = json::object();
  for (const auto& [family, plan] : c.search) search[family] = plan_to_json(plan);
  return {{"schema_version", ExperimentConfig::kSchemaVersion},
          {"corpus", c.corpus_path},
          {"scheme", to_string(c.scheme)},
          {"seed", c.seed},
          {"split", {{"stratified", c.stratified}}},
          {"preprocess", {{"drop_hashtags", c.clean.drop_hashtags}}},
          {"vectorizer", {{"max_features", c.max_features}, {"ngram_range", {c.ngrams.min_n, c.ngrams.max_n}}}},
          {"sequence", {{"max_len", c.seq_max_len}, {"min_freq", c.seq_min_freq}}},
          {"search", search},
          {"overrides", c.overrides}};
}

ExperimentConfig experiment_from_json(const json& j) {
  try {
    const int version = j.value("schema_version", ExperimentConfig::kSchemaVersion);
    if (version != ExperimentConfig::kSchemaVersion) {
      throw UsageError("unsupported experiment schema_version " + std::to_string(version));
    }
    ExperimentConfig c = default_experiment();
    c.corpus_path = j.value("corpus", std::string());
    c.scheme = parse_scheme_kind(j.value("scheme", std::string("binary")));
    if (!j.contains("seed")) throw UsageError("experiment config needs a seed");
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("split")) c.stratified = j.at("split").value("stratified", false);
    if (j.contains("preprocess")) c.clean.drop_hashtags = j.at("preprocess").value("drop_hashtags", false);
    if (j.contains("vectorizer")) {
      const auto& v = j.at("vectorizer");
      c.max_features = v.value("max_features", c.max_features);
      if (v.contains("ngram_range")) {
        const auto r = v.at("ngram_range").get<std::vector<std::size_t>>();
        if (r.size() != 2 || r[0] < 1 || r[0] > r[1]) throw UsageError("ngram_range must be [min, max] with 1 <= min <= max");
        c.ngrams = {r[0], r[1]};
      }
    }
    if (j.contains("sequence")) {
      c.seq_max_len = j.at("sequence").value("max_len", c.seq_max_len);
      c.seq_min_freq = j.at("sequence").value("min_freq", c.seq_min_freq);
    }
    if (j.contains("search")) {
      for (const auto& [family, plan] : j.at("search").items()) {
        parse_family(family);
        c.search[family] = plan_from_json(family, plan);
      }
    }
    if (j.contains("overrides")) c.overrides = j.at("overrides");
    return c;
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed experiment config: ") + e.what());
  }
}

std::uint64_t family_seed(std::uint64_t experiment_seed, Family f) {
  return child_seed(experiment_seed, 16 + static_cast<std::uint64_t>(f));
}

SplitName parse_split_name(std::string_view s) {
  if (s == "train") return SplitName::train;
  if (s == "validation" || s == "val") return SplitName::validation;
  if (s == "test") return SplitName::test;
  throw UsageError("split must be train, validation or test");
}

const DataPart& PreparedData::part(SplitName s) const {
  switch (s) {
    case SplitName::train: return train;
    case SplitName::validation: return validation;
    case SplitName::test: return test;
  }
  return test;
}

PreparedData prepare_records(const std::vector<RawRecord>& records, const ExperimentConfig& config,
                             std::size_t dropped_empty) {
  PreparedData d;
  d.scheme = config.scheme == SchemeKind::binary ? LabelScheme::binary() : LabelScheme::multiclass_from(records);
  d.dropped_empty = dropped_empty;
  const auto docs = prepare_documents(records, d.scheme, config.clean);
  for (const auto& doc : docs) d.all_labels.push_back(doc.label);
  d.split = config.stratified ? split_dataset_stratified(d.all_labels, d.num_classes(), config.seed)
                              : split_dataset(docs.size(), config.seed);
  d.train = make_part(docs, d.split.train);
  d.validation = make_part(docs, d.split.validation);
  d.test = make_part(docs, d.split.test);
  d.tfidf = fit_tfidf(d.train.tokens, config.max_features, config.ngrams);
  d.train.x = transform_batch(d.tfidf, d.train.tokens);
  d.validation.x = transform_batch(d.tfidf, d.validation.tokens);
  d.test.x = transform_batch(d.tfidf, d.test.tokens);
  return d;
}

PreparedData prepare_experiment(const ExperimentConfig& config) {
  if (config.corpus_path.empty()) throw UsageError("experiment config has no corpus path");
  const auto loaded = load_csv(config.corpus_path);
  return prepare_records(loaded.records, config, loaded.dropped_empty);
}

TrainedModel train_model(Family family, const json& params, const PreparedData& data, std::uint64_t seed,
                         std::size_t seq_max_len, std::size_t seq_min_freq) {
  TrainedModel m;
  m.family = family;
  m.params = params;
  const auto k = data.num_classes();
  const auto& tr = data.train;
  switch (family) {
    case Family::logistic:
      m.model = fit_logistic(tr.x, tr.y, k, logistic_config(params));
      break;
    case Family::svm:
      m.model = fit_svm(tr.x, tr.y, k, svm_config(params, seed));
      break;
    case Family::rf:
      m.model = fit_forest(FeatureColumns(tr.x), tr.y, k, forest_config(params), seed);
      break;
    case Family::gbdt:
      m.model = fit_gbdt(FeatureColumns(tr.x), tr.y, k, gbdt_config(params));
      break;
    case Family::gru: {
      const auto cfg = gru_config(params, seed);
      const auto vocab = SeqVocabulary::build(tr.tokens, seq_min_freq, seq_max_len);
      const auto train_seq = encode_all(vocab, tr.tokens);
      const auto val_seq = encode_all(vocab, data.validation.tokens);
      m.model = train_gru(vocab, train_seq, tr.y, val_seq, data.validation.y, k, cfg);
      break;
    }
  }
  return m;
}

Predictions predict(const TrainedModel& model, const DataPart& part) {
  const std::size_t n = part.y.size();
  Predictions out;
  std::size_t k = 0;
  std::visit([&](const auto& m) {
    using M = std::decay_t<decltype(m)>;
    if constexpr (std::is_same_v<M, GruModel>) {
      k = m.params.num_classes();
    } else {
      k = m.num_classes;
    }
  }, model.model);
  out.labels.resize(n);
  out.scores = DenseMatrix(n, k);
  std::visit([&](const auto& m) {
    using M = std::decay_t<decltype(m)>;
#pragma omp parallel for schedule(dynamic, 32)
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> s;
      LabelId label;
      if constexpr (std::is_same_v<M, GruModel>) {
        const auto seq = m.vocab.encode(part.tokens[i]);
        s = predict_proba(m, seq);
        label = static_cast<LabelId>(argmax(s));
      } else if constexpr (std::is_same_v<M, SvmModel>) {
        s = class_scores(m, part.x.rows[i]);
        label = mhc::predict(m, part.x.rows[i]);
      } else if constexpr (std::is_same_v<M, ForestModel>) {
        s = predict_proba(m, part.x.rows[i]);
        label = mhc::predict(m, part.x.rows[i]);
      } else {
        s = predict_proba(m, part.x.rows[i]);
        label = static_cast<LabelId>(argmax(s));
      }
      out.labels[i] = label;
      for (std::size_t c = 0; c < k; ++c) out.scores(i, c) = s[c];
    }
  }, model.model);
  return out;
}

EvaluationReport evaluate(const Predictions& pred, std::span<const LabelId> y_true, std::size_t num_classes) {
  EvaluationReport r;
  r.n = y_true.size();
  r.confusion = confusion_matrix(y_true, pred.labels, num_classes);
  r.prf = precision_recall_f1(r.confusion);
  r.weighted_f1 = r.prf.weighted.f1;
  if (y_true.empty()) return r;
  if (num_classes == 2) {
    std::vector<std::uint8_t> yb(y_true.size());
    std::vector<double> s(y_true.size());
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      yb[i] = y_true[i] == 1 ? 1 : 0;
      s[i] = pred.scores(i, 1);
    }
    const bool both = std::find(yb.begin(), yb.end(), 0) != yb.end() && std::find(yb.begin(), yb.end(), 1) != yb.end();
    if (both) {
      r.roc = roc_curve(yb, s);
      r.auroc = r.roc->auc;
    }
  } else {
    r.roc = micro_ovr_roc(y_true, pred.scores);
    r.auroc = r.roc->auc;
  }
  r.per_class_auroc = per_class_ovr_auroc(y_true, pred.scores);
  const double macro = macro_ovr_auroc(y_true, pred.scores);
  if (!std::isnan(macro)) r.macro_auroc = macro;
  return r;
}

json to_json(const EvaluationReport& r, const LabelScheme& scheme) {
  json per_class = json::array();
  for (std::size_t k = 0; k < r.prf.per_class.size(); ++k) {
    const auto& c = r.prf.per_class[k];
    json row = {{"class", k < scheme.names().size() ? scheme.names()[k] : std::to_string(k)},
                {"precision", c.precision},
                {"recall", c.recall},
                {"f1", c.f1},
                {"support", c.support}};
    if (c.precision_undefined) row["precision_undefined"] = true;
    if (c.recall_undefined) row["recall_undefined"] = true;
    if (k < r.per_class_auroc.size() && !std::isnan(r.per_class_auroc[k])) row["auroc_ovr"] = r.per_class_auroc[k];
    per_class.push_back(std::move(row));
  }
  json cm = json::array();
  for (std::size_t t = 0; t < r.confusion.num_classes; ++t) {
    json row = json::array();
    for (std::size_t p = 0; p < r.confusion.num_classes; ++p) row.push_back(r.confusion(t, p));
    cm.push_back(std::move(row));
  }
  auto avg = [](const Averages& a) { return json{{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}}; };
  json j = {{"n", r.n},
            {"accuracy", r.prf.accuracy},
            {"weighted_f1", r.weighted_f1},
            {"macro", avg(r.prf.macro)},
            {"micro", avg(r.prf.micro)},
            {"weighted", avg(r.prf.weighted)},
            {"per_class", per_class},
            {"confusion_matrix", cm}};
  j["auroc"] = r.auroc ? json(*r.auroc) : json(nullptr);
  j["auroc_kind"] = scheme.num_classes() == 2 ? "binary" : "micro_ovr";
  if (r.macro_auroc) j["macro_ovr_auroc"] = *r.macro_auroc;
  if (r.roc) {
    json thresholds = json::array();
    for (double t : r.roc->thresholds) thresholds.push_back(std::isinf(t) ? json("inf") : json(t));
    j["roc"] = {{"fpr", r.roc->fpr}, {"tpr", r.roc->tpr}, {"thresholds", thresholds}, {"auc", r.roc->auc}};
  }
  return j;
}

Clock system_clock() {
  return {[] {
            using namespace std::chrono;
            return duration<double>(steady_clock::now().time_since_epoch()).count();
          },
          [] {
            const std::time_t t = std::time(nullptr);
            std::tm tm{};
            gmtime_r(&t, &tm);
            char buf[32];
            std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
            return std::string(buf);
          }};
}

Clock fixed_clock() {
  return {[] { return 0.0; }, [] { return std::string("1970-01-01T00:00:00Z"); }};
}

std::vector<std::pair<std::size_t, json>> plan_trials(const SearchPlan& plan, std::uint64_t fam_seed) {
  std::vector<std::pair<std::size_t, json>> out;
  for (std::size_t s = 0; s < plan.spaces.size(); ++s) {
    const auto configs = plan.mode == SearchPlan::Mode::grid
                             ? expand_grid(plan.spaces[s])
                             : sample_random(plan.spaces[s], plan.n_trials, child_seed(fam_seed, 1000 + s));
    for (const auto& c : configs) out.emplace_back(s, c);
  }
  return out;
}

SearchResult run_search(const ExperimentConfig& config, const PreparedData& data, Family family, const Clock& clock,
                        const std::function<void(const TrialRecord&)>& on_trial) {
  SearchResult result;
  result.family = family;
  const std::uint64_t fs = family_seed(config.seed, family);
  const std::uint64_t train_seed = child_seed(fs, 0);
  const auto trials = plan_trials(config.plan(family), fs);
  double best_f1 = 0.0;
  for (std::size_t t = 0; t < trials.size(); ++t) {
    TrialRecord rec;
    rec.index = t;
    rec.space = trials[t].first;
    rec.params = trials[t].second;
    rec.seed = train_seed;
    const double start = clock.seconds();
    try {
      TrainedModel model = train_model(family, rec.params, data, train_seed, config.seq_max_len, config.seq_min_freq);
      const auto pred = predict(model, data.validation);
      const double f1 = weighted_f1(data.validation.y, pred.labels, data.num_classes());
      rec.validation_weighted_f1 = f1;
      if (!result.best || f1 > best_f1) {
        result.best = t;
        best_f1 = f1;
        result.best_model = std::move(model);
      }
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
    rec.seconds = clock.seconds() - start;
    if (on_trial) on_trial(rec);
    result.trials.push_back(std::move(rec));
  }
  if (result.best_model) {
    const auto pred = predict(*result.best_model, data.test);
    result.test_report = evaluate(pred, data.test.y, data.num_classes());
  }
  return result;
}

json preset(Family family, SchemeKind scheme, std::string_view name) {
  const bool binary = scheme == SchemeKind::binary;
  if (name != "tuned" && name != "tuned-balanced") throw UsageError("unknown preset: " + std::string(name));
  if (name == "tuned-balanced" && !(family == Family::logistic && binary)) {
    throw UsageError("preset tuned-balanced exists only for binary logistic regression");
  }
  switch (family) {
    case Family::logistic:
      if (binary) return {{"C", 10}, {"class_weight", name == "tuned" ? "none" : "balanced"}};
      return {{"C", 10}, {"class_weight", "balanced"}};
    case Family::svm:
      return {{"C", 1}, {"kernel", "rbf"}, {"class_weight", "balanced"}, {"gamma", "scale"}};
    case Family::rf:
      if (binary) {
        return {{"n_estimators", 100}, {"max_depth", nullptr}, {"min_samples_split", 5}, {"min_samples_leaf", 1},
                {"class_weight", "balanced"}};
      }
      return {{"n_estimators", 200}, {"max_depth", nullptr}, {"min_samples_split", 2}, {"min_samples_leaf", 2},
              {"class_weight", "balanced"}};
    case Family::gbdt:
      if (binary) {
        return {{"n_estimators", 100}, {"learning_rate", 0.1}, {"max_depth", -1}, {"num_leaves", 50},
                {"min_child_samples", 10}, {"class_weight", "none"}};
      }
      return {{"n_estimators", 100}, {"learning_rate", 0.1}, {"max_depth", nullptr}, {"num_leaves", 63},
              {"class_weight", "balanced"}};
    case Family::gru:
      if (binary) return {{"embedding_dim", 156}, {"hidden_dim", 467}, {"learning_rate", 0.0004}, {"epochs", 5}};
      return {{"embedding_dim", 236}, {"hidden_dim", 730}, {"learning_rate", 0.0003}, {"epochs", 6}};
  }
  return json::object();
}

json model_to_json(const TrainedModel& model) {
  json body = std::visit([](const auto& m) -> json {
    using M = std::decay_t<decltype(m)>;
    if constexpr (std::is_same_v<M, LinearModel>) {
      return to_json(m);
    } else if constexpr (std::is_same_v<M, SvmModel>) {
      return to_json(m);
    } else if constexpr (std::is_same_v<M, ForestModel>) {
      return to_json(m);
    } else if constexpr (std::is_same_v<M, GbdtModel>) {
      return to_json(m);
    } else {
      return to_json(m);
    }
  }, model.model);
  return {{"family", to_string(model.family)}, {"params", model.params}, {"model", body}};
}

TrainedModel model_from_json(const json& j) {
  try {
    TrainedModel m;
    m.family = parse_family(j.at("family").get<std::string>());
    m.params = j.at("params");
    const auto& body = j.at("model");
    switch (m.family) {
      case Family::logistic: m.model = linear_from_json(body); break;
      case Family::svm: m.model = svm_from_json(body); break;
      case Family::rf: m.model = forest_from_json(body); break;
      case Family::gbdt: m.model = gbdt_from_json(body); break;
      case Family::gru: m.model = gru_from_json(body); break;
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

json model_file(const TrainedModel& model, const PreparedData& data, const ExperimentConfig& config) {
  json j = model_to_json(model);
  j["format"] = "mhc-model";
  j["version"] = 1;
  j["classes"] = data.scheme.names();
  j["tfidf"] = to_json(data.tfidf);
  j["experiment"] = to_json(config);
  return j;
}

}  // namespace mhc
