// mhc: command-line front end for corpus preparation, search, training,
// evaluation and report emission.

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "mhc/experiment.hpp"
#include "mhc/report.hpp"
#include "mhc/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Relative output paths land under $MHC_OUTPUT_ROOT when it is set.
fs::path output_path(const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) {
    if (const char* root = std::getenv("MHC_OUTPUT_ROOT"); root && *root) return fs::path(root) / path;
  }
  return path;
}

mhc::Clock pick_clock(bool fixed) {
  const char* env = std::getenv("MHC_FIXED_CLOCK");
  if (fixed || (env && std::string(env) == "1")) return mhc::fixed_clock();
  return mhc::system_clock();
}

mhc::ExperimentConfig load_config(const std::string& path) {
  auto config = mhc::experiment_from_json(mhc::read_json_file(path));
  fs::path corpus(config.corpus_path);
  if (!config.corpus_path.empty() && corpus.is_relative()) {
    config.corpus_path = (fs::path(path).parent_path() / corpus).lexically_normal().string();
  }
  return config;
}

void apply_seed_override(mhc::ExperimentConfig& config, const std::optional<std::uint64_t>& seed) {
  if (!seed) return;
  config.seed = *seed;
  config.overrides["seed"] = *seed;
}

void write_search_outputs(const fs::path& dir, const std::string& stem, const json& report) {
  mhc::write_text_file(dir / (stem + "_result.json"), mhc::dump_json(report));
  mhc::write_text_file(dir / (stem + "_roc.csv"), mhc::roc_csv(report));
}

struct PrepareArgs {
  std::string input, scheme = "binary", out = "mhc-out";
  std::uint64_t seed = 42;
  bool stratified = false, fixed_clock = false;
  std::size_t max_features = 1000;
};

int run_prepare(const PrepareArgs& a) {
  mhc::ExperimentConfig config = mhc::default_experiment();
  config.corpus_path = fs::absolute(a.input).lexically_normal().string();
  config.scheme = mhc::parse_scheme_kind(a.scheme);
  config.seed = a.seed;
  config.stratified = a.stratified;
  config.max_features = a.max_features;
  const auto data = mhc::prepare_experiment(config);
  const auto dir = output_path(a.out);
  const auto dist = mhc::class_distribution(data.all_labels, data.scheme);
  mhc::write_text_file(dir / "experiment.json", mhc::dump_json(mhc::to_json(config)));
  mhc::write_text_file(dir / "corpus_report.json",
                       mhc::dump_json(mhc::corpus_report(data, config, pick_clock(a.fixed_clock))));
  mhc::write_text_file(dir / "class_distribution.csv", mhc::distribution_csv(dist));
  mhc::write_text_file(dir / "class_distribution.svg",
                       mhc::distribution_svg(dist, "Class distribution (" + a.scheme + ")"));
  json split = {{"seed", config.seed},
                {"train", data.train.ids},
                {"validation", data.validation.ids},
                {"test", data.test.ids}};
  mhc::write_text_file(dir / "split.json", mhc::dump_json(split));
  std::cout << "prepared " << data.all_labels.size() << " documents (" << data.train.y.size() << '/'
            << data.validation.y.size() << '/' << data.test.y.size() << ") into " << dir.string() << '\n';
  return 0;
}

struct TuneArgs {
  std::string config, model, out = "mhc-out";
  std::optional<std::uint64_t> seed;
  bool fixed_clock = false, quiet = false;
};

int run_tune(const TuneArgs& a) {
  auto config = load_config(a.config);
  apply_seed_override(config, a.seed);
  const auto family = mhc::parse_family(a.model);
  const auto data = mhc::prepare_experiment(config);
  const auto clock = pick_clock(a.fixed_clock);
  const auto result = mhc::run_search(config, data, family, clock, [&](const mhc::TrialRecord& t) {
    if (a.quiet) return;
    std::cerr << "trial " << t.index << ' ' << t.params.dump() << " -> ";
    if (t.validation_weighted_f1) {
      std::cerr << "val weighted F1 " << *t.validation_weighted_f1 << '\n';
    } else {
      std::cerr << "failed: " << t.error << '\n';
    }
  });
  const auto dir = output_path(a.out);
  const std::string stem(mhc::to_string(family));
  const auto report = mhc::search_report(result, config, data, clock);
  write_search_outputs(dir, stem, report);
  if (!result.ok()) throw mhc::AllTrialsFailed("no successful trials for " + stem);
  const auto& best = result.trials[*result.best];
  mhc::write_text_file(dir / (stem + "_best.json"),
                       mhc::dump_json({{"family", stem}, {"params", best.params}}));
  mhc::write_text_file(dir / (stem + "_model.json"),
                       mhc::model_file(*result.best_model, data, config).dump() + "\n");
  std::cout << stem << ": best trial " << best.index << " val weighted F1 " << *best.validation_weighted_f1
            << ", test weighted F1 " << result.test_report->weighted_f1 << '\n';
  return 0;
}

struct TrainArgs {
  std::string config, model, params, preset, out = "mhc-out";
  std::optional<std::uint64_t> seed;
  bool fixed_clock = false;
};

int run_train(const TrainArgs& a) {
  auto config = load_config(a.config);
  apply_seed_override(config, a.seed);
  json params;
  std::string family_name = a.model;
  if (!a.params.empty()) {
    const auto file = mhc::read_json_file(a.params);
    if (file.contains("params")) {
      params = file.at("params");
      if (file.contains("family")) {
        const auto f = file.at("family").get<std::string>();
        if (!family_name.empty() && family_name != f) {
          throw mhc::UsageError("--model " + family_name + " conflicts with params file family " + f);
        }
        family_name = f;
      }
    } else {
      params = file;
    }
  }
  if (family_name.empty()) throw mhc::UsageError("train needs --model or a params file naming its family");
  const auto family = mhc::parse_family(family_name);
  if (!a.preset.empty()) params = mhc::preset(family, config.scheme, a.preset);
  if (params.is_null()) throw mhc::UsageError("train needs --params or --preset");

  const auto data = mhc::prepare_experiment(config);
  const auto fs_seed = mhc::child_seed(mhc::family_seed(config.seed, family), 0);
  const auto model = mhc::train_model(family, params, data, fs_seed, config.seq_max_len, config.seq_min_freq);

  // A one-trial search result so the report has the same shape as tune's.
  mhc::SearchResult result;
  result.family = family;
  mhc::TrialRecord trial;
  trial.params = params;
  trial.seed = fs_seed;
  trial.validation_weighted_f1 = mhc::weighted_f1(
      data.validation.y, mhc::predict(model, data.validation).labels, data.num_classes());
  result.trials.push_back(trial);
  result.best = 0;
  result.test_report = mhc::evaluate(mhc::predict(model, data.test), data.test.y, data.num_classes());
  const auto report = mhc::search_report(result, config, data, pick_clock(a.fixed_clock));

  const auto dir = output_path(a.out);
  const std::string stem = std::string(mhc::to_string(family)) + "_train";
  write_search_outputs(dir, stem, report);
  mhc::write_text_file(dir / (stem + "_model.json"), mhc::model_file(model, data, config).dump() + "\n");
  std::cout << family_name << ": val weighted F1 " << *trial.validation_weighted_f1 << ", test weighted F1 "
            << result.test_report->weighted_f1 << '\n';
  return 0;
}

struct EvaluateArgs {
  std::string model, split = "test", out;
};

int run_evaluate(const EvaluateArgs& a) {
  const auto file = mhc::read_json_file(a.model);
  if (file.value("format", std::string()) != "mhc-model") throw mhc::DataError(a.model + " is not an mhc model file");
  const auto config = mhc::experiment_from_json(file.at("experiment"));
  const auto model = mhc::model_from_json(file);
  const auto data = mhc::prepare_experiment(config);
  if (mhc::to_json(data.tfidf) != file.at("tfidf")) {
    throw mhc::DataError("corpus no longer reproduces the model's TF-IDF vocabulary");
  }
  const auto& part = data.part(mhc::parse_split_name(a.split));
  const auto report = mhc::evaluate(mhc::predict(model, part), part.y, data.num_classes());
  json j = mhc::to_json(report, data.scheme);
  j["split"] = a.split;
  j["family"] = file.at("family");
  if (a.out.empty()) {
    std::cout << mhc::dump_json(j);
  } else {
    mhc::write_text_file(output_path(a.out), mhc::dump_json(j));
  }
  return 0;
}

struct ReportArgs {
  std::string result, format = "json", what = "roc", out;
};

int run_report(const ReportArgs& a) {
  const auto report = mhc::read_json_file(a.result);
  std::string text;
  if (a.format == "json") {
    json summary = {{"kind", report.value("kind", std::string("search"))},
                    {"status", report.value("status", std::string("ok"))}};
    if (report.contains("table")) summary["table"] = report.at("table");
    if (report.contains("best")) summary["best"] = report.at("best");
    if (report.contains("class_distribution")) summary["class_distribution"] = report.at("class_distribution");
    text = mhc::dump_json(summary);
  } else if (a.format == "csv") {
    if (a.what == "roc") {
      text = mhc::roc_csv(report);
    } else {
      text = mhc::distribution_csv(mhc::distribution_from_json(report.at("class_distribution")));
    }
  } else {
    const auto scheme = report.value("scheme", std::string());
    text = mhc::distribution_svg(mhc::distribution_from_json(report.at("class_distribution")),
                                 "Class distribution (" + scheme + ")");
  }
  if (a.out.empty()) {
    std::cout << text;
  } else {
    mhc::write_text_file(output_path(a.out), text);
  }
  return 0;
}

struct SynthArgs {
  std::size_t n = 2000;
  std::string scheme = "binary", out;
  std::uint64_t seed = 7;
};

int run_synth(const SynthArgs& a) {
  const auto kind = mhc::parse_scheme_kind(a.scheme);
  const auto spec = kind == mhc::SchemeKind::binary ? mhc::binary_synthetic_spec(a.n, a.seed)
                                                    : mhc::multiclass_synthetic_spec(a.n, a.seed);
  const auto csv = mhc::to_csv(mhc::generate_corpus(spec));
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    mhc::write_text_file(output_path(a.out), csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mental-health text classification toolkit"};
  app.require_subcommand(1);

  PrepareArgs prepare;
  auto* p = app.add_subcommand("prepare", "Clean, split and featurize a corpus; emit the class distribution");
  p->add_option("--input", prepare.input, "CSV with id,statement,status")->required();
  p->add_option("--scheme", prepare.scheme)->check(CLI::IsMember({"binary", "multiclass"}));
  p->add_option("--seed", prepare.seed);
  p->add_option("--out", prepare.out, "Output directory");
  p->add_option("--max-features", prepare.max_features);
  p->add_flag("--stratified", prepare.stratified);
  p->add_flag("--fixed-clock", prepare.fixed_clock);

  TuneArgs tune;
  auto* t = app.add_subcommand("tune", "Grid or random search for one model family");
  t->add_option("--config", tune.config, "Experiment JSON")->required();
  t->add_option("--model", tune.model)->required()->check(CLI::IsMember({"logistic", "svm", "rf", "gbdt", "gru"}));
  t->add_option("--out", tune.out);
  t->add_option("--seed", tune.seed, "Override the experiment seed");
  t->add_flag("--fixed-clock", tune.fixed_clock);
  t->add_flag("--quiet", tune.quiet);

  TrainArgs train;
  auto* tr = app.add_subcommand("train", "Fit one configuration and report on test");
  tr->add_option("--config", train.config)->required();
  tr->add_option("--model", train.model)->check(CLI::IsMember({"logistic", "svm", "rf", "gbdt", "gru"}));
  auto* params_opt = tr->add_option("--params", train.params, "JSON params, or a *_best.json from tune");
  tr->add_option("--preset", train.preset, "tuned or tuned-balanced")->excludes(params_opt);
  tr->add_option("--out", train.out);
  tr->add_option("--seed", train.seed);
  tr->add_flag("--fixed-clock", train.fixed_clock);

  EvaluateArgs evaluate;
  auto* e = app.add_subcommand("evaluate", "Score a saved model on one split");
  e->add_option("--model", evaluate.model)->required();
  e->add_option("--split", evaluate.split)->check(CLI::IsMember({"train", "validation", "test"}));
  e->add_option("--out", evaluate.out, "Write the JSON here instead of stdout");

  ReportArgs report;
  auto* r = app.add_subcommand("report", "Render a result or corpus report");
  r->add_option("--result", report.result)->required();
  r->add_option("--format", report.format)->check(CLI::IsMember({"json", "csv", "svg"}));
  r->add_option("--what", report.what, "csv content: roc or distribution")
      ->check(CLI::IsMember({"roc", "distribution"}));
  r->add_option("--out", report.out);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a keyword-separable synthetic corpus");
  s->add_option("--n", synth.n);
  s->add_option("--scheme", synth.scheme)->check(CLI::IsMember({"binary", "multiclass"}));
  s->add_option("--seed", synth.seed);
  s->add_option("--out", synth.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 1;
  }

  try {
    if (p->parsed()) return run_prepare(prepare);
    if (t->parsed()) return run_tune(tune);
    if (tr->parsed()) return run_train(train);
    if (e->parsed()) return run_evaluate(evaluate);
    if (r->parsed()) return run_report(report);
    if (s->parsed()) return run_synth(synth);
  } catch (const mhc::UsageError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  } catch (const mhc::DataError& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return 2;
  } catch (const mhc::AllTrialsFailed& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  return 1;
}
