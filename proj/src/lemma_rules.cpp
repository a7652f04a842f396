// Lemmatizer rule tables. Bump kVersion whenever an entry changes; fitted
// vocabularies depend on these tables.

#include <string_view>

#include "mhc/text.hpp"

namespace mhc {
namespace {

constexpr std::string_view kVersion = "1";

// First match wins, so longer suffixes come first.
constexpr SuffixRule kSuffixes[] = {
    {"sses", "ss", 1, false},  // stresses -> stress
    {"ches", "ch", 2, false},  // watches -> watch
    {"shes", "sh", 2, false},  // wishes -> wish
    {"xes", "x", 2, false},    // boxes -> box
    {"ies", "y", 2, false},    // cries -> cry
    {"ied", "y", 2, false},    // cried -> cry
    {"ing", "", 3, true},      // running -> run, crying -> cry, hoping -> hope
    {"ed", "", 3, true},       // stopped -> stop, hated -> hate
    {"s", "", 3, false},       // feels -> feel
};

constexpr std::string_view kKeepS[] = {"ss", "us", "is", "'s"};

constexpr ExceptionEntry kExceptions[] = {
    {"ran", "run"},          {"went", "go"},          {"gone", "go"},
    {"goes", "go"},          {"felt", "feel"},        {"thought", "think"},
    {"made", "make"},        {"said", "say"},         {"says", "say"},
    {"told", "tell"},        {"took", "take"},        {"taken", "take"},
    {"came", "come"},        {"got", "get"},          {"gotten", "get"},
    {"saw", "see"},          {"seen", "see"},         {"knew", "know"},
    {"known", "know"},       {"left", "leave"},       {"lost", "lose"},
    {"kept", "keep"},        {"slept", "sleep"},      {"better", "good"},
    {"best", "good"},        {"worse", "bad"},        {"worst", "bad"},
    {"children", "child"},   {"men", "man"},          {"women", "woman"},
    {"feet", "foot"},        {"teeth", "tooth"},      {"mice", "mouse"},
    {"lives", "life"},       {"wives", "wife"},       {"knives", "knife"},
    {"died", "die"},         {"dying", "die"},        {"lying", "lie"},
    {"lied", "lie"},         {"ate", "eat"},          {"eaten", "eat"},
    {"began", "begin"},      {"begun", "begin"},      {"gave", "give"},
    {"given", "give"},       {"wrote", "write"},      {"written", "write"},
    {"broke", "break"},      {"broken", "break"},     {"hurt", "hurt"},
    {"cried", "cry"},        {"tried", "try"},        {"paid", "pay"},
    {"nothing", "nothing"},  {"something", "something"}, {"anything", "anything"},
    {"everything", "everything"}, {"morning", "morning"}, {"evening", "evening"},
    {"thing", "thing"},      {"things", "thing"},     {"always", "always"},
    {"perhaps", "perhaps"},  {"news", "news"},        {"series", "series"},
    {"species", "species"},  {"indeed", "indeed"},    {"hundred", "hundred"},
    {"ceiling", "ceiling"},  {"wedding", "wedding"},  {"king", "king"},
    {"ring", "ring"},        {"bring", "bring"},      {"sing", "sing"},
    {"spring", "spring"},    {"string", "string"},    {"during", "during"},
};

}  // namespace

const LemmaRules& lemma_rules() {
  static const LemmaRules rules{kVersion, kSuffixes, kKeepS, kExceptions};
  return rules;
}

}  // namespace mhc
