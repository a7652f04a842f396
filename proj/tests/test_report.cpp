#include <algorithm>
#include <filesystem>

#include "doctest.h"
#include "mhc/report.hpp"
#include "support.hpp"

using namespace mhc;
using nlohmann::json;

TEST_CASE("class distribution outputs") {
  const auto scheme = LabelScheme::binary();
  const std::vector<LabelId> y{0, 0, 0, 1};
  const auto d = class_distribution(y, scheme);
  CHECK(d.total() == 4);
  CHECK(d.percent(0) == 75.0);
  const auto csv = distribution_csv(d);
  CHECK(csv.rfind("status,count,percent\n", 0) == 0);
  CHECK(csv.find(",3,75.00\n") != std::string::npos);
  CHECK(csv.find(",1,25.00\n") != std::string::npos);
  const auto svg = distribution_svg(d, "Posts & labels");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("Posts &amp; labels") != std::string::npos);
  CHECK(svg.find("75.0%") != std::string::npos);
  const auto back = distribution_from_json(to_json(d));
  CHECK(back.counts == d.counts);
  CHECK(back.names == d.names);
  CHECK(ClassDistribution{}.percent(0) == 0.0);
}

TEST_CASE("search reports") {
  const auto data = test::synthetic_data(200);
  auto config = test::synthetic_config(5);
  const auto r1 = run_search(config, data, Family::logistic, fixed_clock());
  const auto r2 = run_search(config, data, Family::logistic, fixed_clock());
  const auto j1 = search_report(r1, config, data, fixed_clock());
  CHECK(dump_json(j1) == dump_json(search_report(r2, config, data, fixed_clock())));
  CHECK(j1.at("status") == "ok");
  CHECK(j1.at("generated_at") == "1970-01-01T00:00:00Z");
  CHECK(j1.at("table").at("model") == "Logistic Regression");
  CHECK(j1.at("split_sizes").at("train") == data.train.y.size());
  CHECK(j1.at("test").at("roc").at("thresholds")[0] == "inf");

  const auto csv = roc_csv(j1);
  CHECK(csv.rfind("curve,fpr,tpr,threshold\n", 0) == 0);
  CHECK(csv.find("binary,0.0,0.0,inf\n") != std::string::npos);
  const auto rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
  CHECK(rows == 1 + j1["test"]["roc"]["fpr"].size());

  SearchPlan plan;
  plan.spaces.push_back({"logistic", {Axis::list("C", {-1.0})}});
  config.search["logistic"] = plan;
  const auto failed = run_search(config, data, Family::logistic, fixed_clock());
  const auto jf = search_report(failed, config, data, fixed_clock());
  CHECK(jf.at("status") == "no successful trials");
  CHECK(jf.at("best").is_null());
  CHECK(jf.at("trials")[0].at("validation_weighted_f1").is_null());
  CHECK(jf.at("trials")[0].contains("error"));
  CHECK(roc_csv(jf) == "curve,fpr,tpr,threshold\n");
}

TEST_CASE("corpus report and files") {
  const auto data = test::synthetic_data(150, SchemeKind::multiclass);
  const auto j = corpus_report(data, test::synthetic_config(), fixed_clock());
  CHECK(j.at("documents") == data.all_labels.size());
  CHECK(j.at("class_distribution").at("total") == data.all_labels.size());

  const auto dir = std::filesystem::temp_directory_path() / "mhc_report_test";
  std::filesystem::remove_all(dir);
  write_text_file(dir / "a" / "b.json", dump_json(j));
  CHECK(read_json_file(dir / "a" / "b.json") == j);
  write_text_file(dir / "bad.json", "{not json");
  CHECK_THROWS_AS(read_json_file(dir / "bad.json"), DataError);
  CHECK_THROWS_AS(read_text_file(dir / "missing.txt"), DataError);
  // A regular file where a directory is needed.
  CHECK_THROWS_AS(write_text_file(dir / "bad.json" / "x.csv", "x"), DataError);
  std::filesystem::remove_all(dir);
}
