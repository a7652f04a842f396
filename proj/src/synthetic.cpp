#include "mhc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace mhc {
namespace {

const std::map<std::string, std::vector<std::string>>& keyword_table() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"Normal",
       {"sunny", "picnic", "garden", "coffee", "hike", "beach", "guitar", "movie", "dinner", "puppy", "bake",
        "museum", "concert", "vacation", "football", "recipe", "bicycle", "festival", "weekend", "breakfast",
        "camera", "library", "poem"}},
      {"Depression",
       {"hopeless", "empty", "numb", "worthless", "tearful", "gloomy", "despair", "bleak", "sorrow", "grief",
        "void", "misery", "lethargy", "apathy", "sullen", "forlorn", "dismal", "melancholy", "bleary", "heavy"}},
      {"Suicidal",
       {"overdose", "noose", "farewell", "goodbye", "rope", "bridge", "pill", "ledge", "final", "vanish", "grave",
        "funeral", "razor", "blade", "cliff", "poison", "letter", "testament", "burial", "coffin"}},
      {"Anxiety",
       {"panic", "nervous", "jittery", "restless", "worry", "sweaty", "tremble", "dizzy", "uneasy", "tense",
        "phobia", "heartbeat", "choke", "shaky", "jumpy", "fidget", "alarm", "tremor", "apprehension", "twitch"}},
      {"Bipolar",
       {"manic", "mania", "euphoric", "impulsive", "grandiose", "lithium", "hypomania", "spree", "sleepless",
        "elated", "erratic", "reckless", "mood", "swing", "rapid", "energetic", "frenzy", "splurge", "hyper",
        "crash"}},
      {"Stress",
       {"deadline", "workload", "overtime", "exam", "pressure", "burnout", "boss", "commute", "bill", "rent",
        "schedule", "meeting", "overwork", "hectic", "tight", "quota", "paperwork", "audit", "invoice", "budget"}},
      {"Personality disorder",
       {"identity", "abandonment", "unstable", "impulsivity", "mirror", "mask", "chameleon", "idealize", "devalue",
        "attachment", "clingy", "volatile", "persona", "fragment", "mimic", "borderline", "facade", "intensity",
        "rage", "hollow"}},
  };
  return table;
}

std::string noisy(std::string word, Rng& rng) {
  const double u = rng.uniform01();
  if (u < 0.1) {
    word[0] = static_cast<char>(word[0] - 'a' + 'A');
  } else if (u < 0.13) {
    for (char& c : word) c = static_cast<char>(c - 'a' + 'A');
  }
  return word;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

SyntheticSpec binary_synthetic_spec(std::size_t n, std::uint64_t seed) {
  SyntheticSpec s;
  s.n = n;
  s.seed = seed;
  s.classes = {{"Normal", 0.35}, {"Depression", 0.65}};
  return s;
}

SyntheticSpec multiclass_synthetic_spec(std::size_t n, std::uint64_t seed) {
  SyntheticSpec s;
  s.n = n;
  s.seed = seed;
  s.classes = {{"Normal", 0.31},  {"Depression", 0.29}, {"Suicidal", 0.20},           {"Anxiety", 0.07},
               {"Bipolar", 0.05}, {"Stress", 0.05},     {"Personality disorder", 0.03}};
  return s;
}

std::vector<std::size_t> exact_counts(const std::vector<double>& proportions, std::size_t n) {
  const double total = std::accumulate(proportions.begin(), proportions.end(), 0.0);
  if (proportions.empty() || !(total > 0.0)) throw UsageError("class proportions must be positive");
  std::vector<std::size_t> counts(proportions.size());
  std::vector<double> remainder(proportions.size());
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < proportions.size(); ++k) {
    if (proportions[k] < 0) throw UsageError("class proportions must be non-negative");
    const double exact = proportions[k] / total * static_cast<double>(n);
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    remainder[k] = exact - static_cast<double>(counts[k]);
    assigned += counts[k];
  }
  std::vector<std::size_t> order(proportions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[order[i % order.size()]];
  return counts;
}

const std::vector<std::string>& synthetic_keywords(const std::string& status) {
  static const std::vector<std::string> none;
  const auto& t = keyword_table();
  const auto it = t.find(status);
  return it == t.end() ? none : it->second;
}

const std::vector<std::string>& synthetic_filler() {
  static const std::vector<std::string> words = {
      "today", "life",  "people", "time",  "year",  "week",  "night",  "home",   "work",  "family", "mom",
      "dad",   "school", "phone", "talk",  "know",  "want",  "need",   "maybe",  "around", "back",  "little",
      "much",  "good",  "bad",    "new",   "old",   "long",  "lot",    "often",  "never", "house",  "car",
      "city",  "road",  "friend", "think", "feel",  "really", "keep",  "try",    "start", "stop",   "help",
      "look",  "come",  "make",   "take",  "give",  "tell",  "ask",    "call",   "leave", "stay",   "wait",
      "sleep"};
  return words;
}

std::vector<RawRecord> generate_corpus(const SyntheticSpec& spec) {
  if (spec.classes.empty()) throw UsageError("synthetic corpus needs at least one class");
  if (spec.min_tokens == 0 || spec.max_tokens < spec.min_tokens) throw UsageError("bad synthetic token range");
  std::vector<double> proportions;
  for (const auto& [status, p] : spec.classes) {
    if (synthetic_keywords(status).empty()) throw UsageError("no synthetic keywords for status " + status);
    proportions.push_back(p);
  }
  const auto counts = exact_counts(proportions, spec.n);
  std::vector<std::size_t> labels;
  for (std::size_t k = 0; k < counts.size(); ++k) labels.insert(labels.end(), counts[k], k);
  Rng rng(spec.seed);
  rng.shuffle(labels);

  const auto& filler = synthetic_filler();
  std::vector<RawRecord> out;
  out.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto& status = spec.classes[labels[i]].first;
    const auto& keywords = synthetic_keywords(status);
    const std::size_t len = spec.min_tokens + rng.uniform_index(spec.max_tokens - spec.min_tokens + 1);
    const std::size_t anchor = rng.uniform_index(len);
    std::string text;
    for (std::size_t t = 0; t < len; ++t) {
      const bool keyword = t == anchor || rng.bernoulli(spec.keyword_rate);
      std::string word = keyword ? keywords[rng.uniform_index(keywords.size())]
                                 : filler[rng.uniform_index(filler.size())];
      if (spec.noise) word = noisy(std::move(word), rng);
      if (!text.empty()) text += ' ';
      text += word;
      if (spec.noise && rng.bernoulli(0.08)) text += rng.bernoulli(0.5) ? "," : "...";
    }
    if (spec.noise) {
      if (rng.bernoulli(0.1)) text += " https://example.com/p/" + std::to_string(rng.uniform_index(10000));
      if (rng.bernoulli(0.1)) text = "@user" + std::to_string(rng.uniform_index(1000)) + " " + text;
      if (rng.bernoulli(0.2)) text += rng.bernoulli(0.5) ? "!" : "?";
    }
    out.push_back({std::to_string(i), std::move(text), status});
  }
  return out;
}

std::string to_csv(const std::vector<RawRecord>& records) {
  std::string out = "id,statement,status\n";
  for (const auto& r : records) {
    out += csv_field(r.id) + ',' + csv_field(r.statement) + ',' + csv_field(r.status) + '\n';
  }
  return out;
}

}  // namespace mhc
