#include "dnnc/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace dnnc {

using nlohmann::json;

namespace {

LabeledExample parse_entry(const json& entry, const std::string& path) {
  if (!entry.is_array() || entry.size() != 2) {
    throw ParseError(path + ": expected a 2-element [text, label] array");
  }
  if (!entry[0].is_string() || !entry[1].is_string()) {
    throw ParseError(path + ": text and label must be strings");
  }
  LabeledExample ex{trim(entry[0].get<std::string>()), trim(entry[1].get<std::string>())};
  if (ex.text.empty()) throw ParseError(path + ": empty utterance");
  if (ex.intent.empty()) throw ParseError(path + ": empty intent label");
  return ex;
}

std::vector<LabeledExample> parse_split(const json& doc, const std::string& key) {
  if (!doc.contains(key)) throw ParseError("missing key '" + key + "'");
  const json& arr = doc.at(key);
  if (!arr.is_array()) throw ParseError(key + ": expected an array");
  std::vector<LabeledExample> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(parse_entry(arr[i], key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<std::string> texts_only(std::vector<LabeledExample> v) {
  std::vector<std::string> out;
  out.reserve(v.size());
  for (auto& ex : v) out.push_back(std::move(ex.text));
  return out;
}

}  // namespace

json Corpus::summary() const {
  return json{{"intents", intents.size()},
              {"train", train.size()},
              {"dev", dev.size()},
              {"test", test.size()},
              {"oos_dev", oos_dev.size()},
              {"oos_test", oos_test.size()}};
}

Corpus load_clinc_json(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("top level must be a JSON object");

  Corpus c;
  c.train = parse_split(doc, "train");
  c.dev = parse_split(doc, "val");
  c.test = parse_split(doc, "test");
  c.oos_dev = texts_only(parse_split(doc, "oos_val"));
  c.oos_test = texts_only(parse_split(doc, "oos_test"));

  std::unordered_set<std::string> seen;
  for (const auto& ex : c.train) {
    if (seen.insert(ex.intent).second) c.intents.push_back(ex.intent);
  }
  auto check = [&](const std::vector<LabeledExample>& split, const char* name) {
    for (std::size_t i = 0; i < split.size(); ++i) {
      if (!seen.count(split[i].intent)) {
        throw ParseError(std::string(name) + "[" + std::to_string(i) + "]: intent '" +
                         split[i].intent + "' does not occur in train");
      }
    }
  };
  check(c.dev, "val");
  check(c.test, "test");
  return c;
}

Corpus load_clinc_file(const std::string& path) { return load_clinc_json(read_file(path)); }

std::map<std::string, std::string> parse_domain_map(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed domain map: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("domain map must be a JSON object");
  std::map<std::string, std::string> out;
  for (const auto& [key, value] : doc.items()) {
    if (value.is_string()) {
      out[key] = value.get<std::string>();
    } else if (value.is_array()) {
      for (const auto& intent : value) {
        if (!intent.is_string()) throw ParseError("domain map: '" + key + "' lists a non-string intent");
        out[intent.get<std::string>()] = key;
      }
    } else {
      throw ParseError("domain map: value for '" + key + "' must be a string or array");
    }
  }
  return out;
}

std::map<std::string, std::string> load_domain_map_file(const std::string& path) {
  return parse_domain_map(read_file(path));
}

Corpus filter_domain(const Corpus& corpus, const std::string& domain) {
  if (!corpus.domain_map) throw ConfigError("filter_domain: corpus has no domain map");
  const auto& dm = *corpus.domain_map;
  std::unordered_set<std::string> keep;
  for (const auto& intent : corpus.intents) {
    auto it = dm.find(intent);
    if (it == dm.end()) throw ConfigError("filter_domain: domain map does not cover intent '" + intent + "'");
    if (it->second == domain) keep.insert(intent);
  }
  if (keep.empty()) throw ConfigError("filter_domain: unknown domain '" + domain + "'");

  Corpus out;
  out.domain_map = corpus.domain_map;
  for (const auto& intent : corpus.intents) {
    if (keep.count(intent)) out.intents.push_back(intent);
  }
  auto select = [&](const std::vector<LabeledExample>& split) {
    std::vector<LabeledExample> v;
    std::copy_if(split.begin(), split.end(), std::back_inserter(v),
                 [&](const LabeledExample& ex) { return keep.count(ex.intent) > 0; });
    return v;
  };
  out.train = select(corpus.train);
  out.dev = select(corpus.dev);
  out.test = select(corpus.test);
  out.oos_dev = corpus.oos_dev;
  out.oos_test = corpus.oos_test;
  return out;
}

FewShotTrainSet sample_kshot(const Corpus& corpus, std::size_t K, std::uint64_t seed) {
  if (K == 0) throw ConfigError("sample_kshot: K must be at least 1");
  if (corpus.intents.empty()) throw ConfigError("sample_kshot: corpus has no intents");

  std::unordered_map<std::string, std::vector<std::size_t>> by_intent;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < corpus.train.size(); ++i) {
    const auto& ex = corpus.train[i];
    if (seen.emplace(ex.intent, ex.text).second) by_intent[ex.intent].push_back(i);
  }

  FewShotTrainSet out;
  out.intents = corpus.intents;
  out.K = K;
  out.seed = seed;
  out.examples.reserve(K * corpus.intents.size());

  Rng rng(seed);
  for (const auto& intent : corpus.intents) {
    auto pool = by_intent[intent];
    if (pool.size() < K) {
      throw ConfigError("sample_kshot: intent '" + intent + "' has " + std::to_string(pool.size()) +
                        " distinct training examples, fewer than K=" + std::to_string(K));
    }
    // Partial Fisher-Yates: the first K slots become a uniform K-subset.
    for (std::size_t i = 0; i < K; ++i) {
      std::size_t j = i + rng.index(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(K));
    for (std::size_t i = 0; i < K; ++i) out.examples.push_back(corpus.train[pool[i]]);
  }
  return out;
}

std::vector<PairExample> synth_pairs(const FewShotTrainSet& trainset, bool symmetric_halving) {
  const std::size_t n = trainset.N();
  const std::size_t k = trainset.K;
  std::vector<PairExample> out;
  const std::size_t total = n * k * (n * k - (n * k > 0 ? 1 : 0));
  out.reserve(symmetric_halving ? total / 2 : total);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t a = j * k + i;
      for (std::size_t o = 0; o < n; ++o) {
        for (std::size_t l = 0; l < k; ++l) {
          const std::size_t b = o * k + l;
          if (a == b || (symmetric_halving && b < a)) continue;
          out.push_back({trainset.examples[a].text, trainset.examples[b].text,
                         j == o ? PairLabel::Positive : PairLabel::Negative});
        }
      }
    }
  }
  return out;
}

NliLabel parse_nli_label(std::string_view label) {
  const std::string l = to_lower(trim(label));
  if (l == "entailment") return NliLabel::Entailment;
  if (l == "neutral") return NliLabel::Neutral;
  if (l == "contradiction") return NliLabel::Contradiction;
  throw ParseError("unknown NLI label '" + std::string(label) + "'");
}

std::vector<PairExample> nli_to_binary(const std::vector<NliRecord>& records) {
  std::vector<PairExample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back({r.premise, r.hypothesis,
                   r.label == NliLabel::Entailment ? PairLabel::Positive : PairLabel::Negative});
  }
  return out;
}

std::vector<NliRecord> parse_nli_jsonl(std::string_view bytes) {
  std::vector<NliRecord> out;
  std::istringstream in{std::string(bytes)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": malformed JSON: " + e.what());
    }
    for (const char* key : {"premise", "hypothesis", "label"}) {
      if (!rec.contains(key) || !rec[key].is_string()) {
        throw ParseError(where + ": missing string field '" + key + "'");
      }
    }
    NliRecord r;
    r.premise = trim(rec["premise"].get<std::string>());
    r.hypothesis = trim(rec["hypothesis"].get<std::string>());
    if (r.premise.empty() || r.hypothesis.empty()) throw ParseError(where + ": empty sentence");
    try {
      r.label = parse_nli_label(rec["label"].get<std::string>());
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<NliRecord> load_nli_file(const std::string& path) { return parse_nli_jsonl(read_file(path)); }

json to_json(const FewShotTrainSet& trainset) {
  json examples = json::array();
  for (const auto& ex : trainset.examples) examples.push_back({ex.text, ex.intent});
  return json{{"intents", trainset.intents},
              {"K", trainset.K},
              {"seed", trainset.seed},
              {"examples", std::move(examples)}};
}

FewShotTrainSet trainset_from_json(const json& j) {
  FewShotTrainSet t;
  try {
    t.intents = j.at("intents").get<std::vector<std::string>>();
    t.K = j.at("K").get<std::size_t>();
    t.seed = j.at("seed").get<std::uint64_t>();
    const auto& arr = j.at("examples");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      t.examples.push_back(parse_entry(arr[i], "examples[" + std::to_string(i) + "]"));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("trainset: ") + e.what());
  }
  if (t.examples.size() != t.N() * t.K) throw ParseError("trainset: example count is not N*K");
  for (std::size_t c = 0; c < t.N(); ++c) {
    for (std::size_t i = 0; i < t.K; ++i) {
      if (t.at(c, i).intent != t.intents[c]) {
        throw ParseError("trainset: examples must be grouped by intent in intent order");
      }
    }
  }
  return t;
}

json to_json(const PairExample& pair) {
  return json{{"u", pair.u_text}, {"e", pair.e_text}, {"label", pair.positive() ? 1 : 0}};
}

json to_clinc_json(const Corpus& corpus) {
  auto split = [](const std::vector<LabeledExample>& v) {
    json arr = json::array();
    for (const auto& ex : v) arr.push_back({ex.text, ex.intent});
    return arr;
  };
  auto pool = [](const std::vector<std::string>& v) {
    json arr = json::array();
    for (const auto& t : v) arr.push_back({t, kOosLabel});
    return arr;
  };
  return json{{"train", split(corpus.train)},  {"val", split(corpus.dev)},
              {"test", split(corpus.test)},    {"oos_val", pool(corpus.oos_dev)},
              {"oos_test", pool(corpus.oos_test)}};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace dnnc
