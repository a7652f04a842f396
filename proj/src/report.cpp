#include "mhc/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

namespace mhc {
namespace {

using nlohmann::json;

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json trial_json(const TrialRecord& t) {
  json j = {{"index", t.index}, {"space", t.space}, {"params", t.params}, {"seed", t.seed}, {"seconds", t.seconds}};
  j["validation_weighted_f1"] = t.validation_weighted_f1 ? json(*t.validation_weighted_f1) : json(nullptr);
  if (!t.error.empty()) j["error"] = t.error;
  return j;
}

json split_sizes_json(const PreparedData& data) {
  return {{"train", data.train.y.size()}, {"validation", data.validation.y.size()}, {"test", data.test.y.size()}};
}

}  // namespace

std::size_t ClassDistribution::total() const {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

double ClassDistribution::percent(std::size_t k) const {
  const auto n = total();
  return n == 0 ? 0.0 : 100.0 * static_cast<double>(counts.at(k)) / static_cast<double>(n);
}

ClassDistribution class_distribution(std::span<const LabelId> labels, const LabelScheme& scheme) {
  ClassDistribution d;
  d.names = scheme.names();
  d.counts = class_counts(labels, scheme.num_classes());
  return d;
}

json to_json(const ClassDistribution& d) {
  json classes = json::array();
  for (std::size_t k = 0; k < d.names.size(); ++k) {
    classes.push_back({{"status", d.names[k]}, {"count", d.counts[k]}, {"percent", d.percent(k)}});
  }
  return {{"total", d.total()}, {"classes", classes}};
}

ClassDistribution distribution_from_json(const json& j) {
  ClassDistribution d;
  for (const auto& c : j.at("classes")) {
    d.names.push_back(c.at("status").get<std::string>());
    d.counts.push_back(c.at("count").get<std::size_t>());
  }
  return d;
}

std::string distribution_csv(const ClassDistribution& d) {
  std::string out = "status,count,percent\n";
  for (std::size_t k = 0; k < d.names.size(); ++k) {
    out += csv_field(d.names[k]) + ',' + std::to_string(d.counts[k]) + ',' + fixed(d.percent(k), 2) + '\n';
  }
  return out;
}

std::string distribution_svg(const ClassDistribution& d, const std::string& title) {
  const int bar_w = 70, gap = 20, left = 60, top = 50, plot_h = 260, label_h = 90;
  const int n = static_cast<int>(d.names.size());
  const int width = std::max(320, left + n * (bar_w + gap) + gap);
  const int height = top + plot_h + label_h;
  std::size_t max_count = 1;
  for (auto c : d.counts) max_count = std::max(max_count, c);

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
    << "</text>\n";
  const int base = top + plot_h;
  s << "<line x1=\"" << left << "\" y1=\"" << base << "\" x2=\"" << width - gap / 2 << "\" y2=\"" << base
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << base
    << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = static_cast<double>(max_count) * tick / 4.0;
    const int y = base - plot_h * tick / 4;
    s << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fixed(v, 0) << "</text>\n";
  }
  for (int k = 0; k < n; ++k) {
    const int h = static_cast<int>(std::lround(static_cast<double>(plot_h) * static_cast<double>(d.counts[k]) /
                                               static_cast<double>(max_count)));
    const int x = left + gap + k * (bar_w + gap);
    s << "<rect x=\"" << x << "\" y=\"" << base - h << "\" width=\"" << bar_w << "\" height=\"" << h
      << "\" fill=\"#4c72b0\"/>\n";
    s << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << base - h - 4 << "\" text-anchor=\"middle\">"
      << fixed(d.percent(k), 1) << "%</text>\n";
    s << "<text transform=\"translate(" << x + bar_w / 2 << ',' << base + 14 << ") rotate(30)\">"
      << xml_escape(d.names[k]) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

json search_report(const SearchResult& result, const ExperimentConfig& config, const PreparedData& data,
                   const Clock& clock) {
  json trials = json::array();
  for (const auto& t : result.trials) trials.push_back(trial_json(t));
  json j = {{"schema_version", 1},
            {"kind", "search"},
            {"generated_at", clock.timestamp()},
            {"family", to_string(result.family)},
            {"scheme", to_string(data.scheme.kind())},
            {"status", result.ok() ? "ok" : "no successful trials"},
            {"config", to_json(config)},
            {"split_sizes", split_sizes_json(data)},
            {"trials", trials},
            {"class_distribution", to_json(class_distribution(data.all_labels, data.scheme))}};
  if (!result.ok()) {
    j["best"] = nullptr;
    j["test"] = nullptr;
    return j;
  }
  const auto& best = result.trials[*result.best];
  j["best"] = {{"index", best.index},
               {"params", best.params},
               {"validation_weighted_f1", *best.validation_weighted_f1}};
  j["test"] = to_json(*result.test_report, data.scheme);
  const auto& r = *result.test_report;
  j["table"] = {{"model", display_name(result.family)},
                {"scheme", to_string(data.scheme.kind())},
                {"weighted_f1", r.weighted_f1},
                {"auroc", r.auroc ? json(*r.auroc) : json(nullptr)}};
  return j;
}

json corpus_report(const PreparedData& data, const ExperimentConfig& config, const Clock& clock) {
  return {{"schema_version", 1},
          {"kind", "corpus"},
          {"generated_at", clock.timestamp()},
          {"scheme", to_string(data.scheme.kind())},
          {"config", to_json(config)},
          {"documents", data.all_labels.size()},
          {"dropped_empty", data.dropped_empty},
          {"split_sizes", split_sizes_json(data)},
          {"vocabulary_size", data.tfidf.vocabulary.size()},
          {"class_distribution", to_json(class_distribution(data.all_labels, data.scheme))}};
}

std::string roc_csv(const json& report) {
  std::string out = "curve,fpr,tpr,threshold\n";
  if (!report.contains("test") || report.at("test").is_null() || !report.at("test").contains("roc")) return out;
  const auto& test = report.at("test");
  const auto& roc = test.at("roc");
  const std::string curve = test.value("auroc_kind", std::string("binary"));
  const auto& fpr = roc.at("fpr");
  const auto& tpr = roc.at("tpr");
  const auto& thr = roc.at("thresholds");
  for (std::size_t i = 0; i < fpr.size(); ++i) {
    std::string t = thr[i].is_string() ? thr[i].get<std::string>() : json(thr[i].get<double>()).dump();
    out += curve + ',' + json(fpr[i].get<double>()).dump() + ',' + json(tpr[i].get<double>()).dump() + ',' + t + '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw DataError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  out.close();
  if (!out) throw DataError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json_file(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

}  // namespace mhc
