#include "dnnc/synthetic.hpp"

#include <map>
#include <set>
#include <sstream>

namespace dnnc {

namespace {

using SlotTable = std::map<std::string, std::vector<std::string>>;

struct IntentTemplate {
  std::string intent;
  std::string domain;
  std::vector<std::string> templates;
};

const SlotTable& slots() {
  static const SlotTable table = {
      {"pre", {"", "please", "hey"}},
      {"when", {"", "today", "tomorrow", "tonight", "on monday"}},
      {"amount", {"50 dollars", "200 dollars", "a thousand dollars", "75 bucks", "300 euros", "20 dollars"}},
      {"account", {"savings", "checking", "joint", "business", "student"}},
      {"move", {"transfer", "send"}},
      {"city", {"paris", "tokyo", "boston", "denver", "madrid", "chicago", "seattle", "rome"}},
      {"time", {"6 am", "7 30", "noon", "9 pm", "five o clock", "8 15"}},
      {"genre", {"jazz", "rock", "classical", "hip hop", "country", "lofi"}},
      {"artist", {"adele", "the beatles", "miles davis", "taylor swift", "queen", "bach"}},
      // Out-of-scope material.
      {"thing", {"penguins", "lawyers", "cats", "pirates", "computers"}},
      {"sport", {"football", "baseball", "hockey", "soccer", "tennis"}},
      {"food", {"lasagna", "rice", "pancakes", "salmon", "dumplings", "risotto"}},
      {"country", {"peru", "kenya", "norway", "vietnam", "chile", "egypt"}},
      {"word", {"hello", "goodbye", "thank you", "library", "mountain"}},
      {"person", {"the president", "lebron james", "mount everest", "the eiffel tower"}},
      {"planet", {"mars", "jupiter", "venus", "saturn"}},
      {"number", {"seven", "twelve", "nineteen", "forty", "eighty"}},
  };
  return table;
}

const std::vector<IntentTemplate>& intent_templates() {
  static const std::vector<IntentTemplate> t = {
      {"transfer",
       "banking",
       {"{pre} {move} {amount} of money to my {account} account {when}",
        "{move} money from {account} to {account} {when}",
        "i need to {move} money into my {account} account",
        "{pre} {move} money from my {account} account {when}",
        "how do i {move} {amount} of money between accounts"}},
      {"balance",
       "banking",
       {"what is the balance in my {account} account",
        "{pre} show me my {account} balance {when}",
        "how much balance is left in {account}",
        "tell me the available balance on {account}",
        "{pre} check my {account} balance"}},
      {"book_flight",
       "assistant",
       {"{pre} book a flight to {city} {when}",
        "i want a flight from {city} to {city} {when}",
        "find me a flight ticket to {city}",
        "{pre} reserve a seat on a flight to {city} {when}",
        "are there any flights to {city} {when}"}},
      {"alarm",
       "assistant",
       {"{pre} set an alarm for {time} {when}",
        "wake me up with an alarm at {time} {when}",
        "i need an alarm at {time}",
        "{pre} create a wake up alarm for {time}",
        "make an alarm that rings at {time} {when}"}},
      {"play_music",
       "assistant",
       {"{pre} play some {genre} music",
        "play a music track by {artist}",
        "{pre} play my {genre} music playlist {when}",
        "play {artist} music for me",
        "play music by {artist} {when}"}},
  };
  return t;
}

const std::vector<std::string>& oos_templates() {
  static const std::vector<std::string> t = {
      "will it rain in {country}",
      "say a joke about {thing}",
      "who won the last {sport} game",
      "best way to cook {food}",
      "which city is the capital of {country}",
      "translate {word} into spanish",
      "how tall is {person}",
      "recommend a recipe with {food}",
      "how far away is {planet}",
      "which language is spoken in {country}",
      "explain the rules of {sport}",
      "why do {thing} like the cold",
      "how many calories are in {food}",
      "share a fun fact about {thing}",
      "current local time in {country}",
      "multiply {number} by {number}",
      "which words rhyme with {word}",
      "spell {word} backwards",
      "how old is {person}",
      "do {thing} eat vegetables",
      "is {planet} bigger than {planet}",
  };
  return t;
}

std::string expand(const std::string& tmpl, Rng& rng) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      out += tmpl.substr(pos);
      break;
    }
    const std::size_t close = tmpl.find('}', open);
    out += tmpl.substr(pos, open - pos);
    const auto& options = slots().at(tmpl.substr(open + 1, close - open - 1));
    out += options[rng.index(options.size())];
    pos = close + 1;
  }
  // Collapse the gaps left by empty fillers.
  std::istringstream words(out);
  std::string w;
  std::string joined;
  while (words >> w) {
    if (!joined.empty()) joined += ' ';
    joined += w;
  }
  return joined;
}

std::vector<std::string> draw_unique(const std::vector<std::string>& templates, std::size_t count,
                                     std::set<std::string>& used, Rng& rng) {
  std::vector<std::string> out;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > 1000 * (count + 1)) throw Error("synthetic corpus: template space exhausted");
    std::string s = expand(templates[rng.index(templates.size())], rng);
    if (used.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

Corpus make_synthetic_corpus(const SyntheticSpec& spec) {
  Rng rng(spec.seed);
  std::set<std::string> used;
  Corpus c;
  std::map<std::string, std::string> domains;

  for (const auto& it : intent_templates()) {
    c.intents.push_back(it.intent);
    domains[it.intent] = it.domain;
    auto texts = draw_unique(it.templates, spec.train_per_intent + spec.dev_per_intent + spec.test_per_intent,
                             used, rng);
    std::size_t i = 0;
    for (; i < spec.train_per_intent; ++i) c.train.push_back({texts[i], it.intent});
    for (; i < spec.train_per_intent + spec.dev_per_intent; ++i) c.dev.push_back({texts[i], it.intent});
    for (; i < texts.size(); ++i) c.test.push_back({texts[i], it.intent});
  }
  c.oos_dev = draw_unique(oos_templates(), spec.oos_dev, used, rng);
  c.oos_test = draw_unique(oos_templates(), spec.oos_test, used, rng);
  c.domain_map = std::move(domains);
  return c;
}

}  // namespace dnnc
