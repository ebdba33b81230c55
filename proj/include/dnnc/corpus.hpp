#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dnnc/common.hpp"

namespace dnnc {

struct LabeledExample {
  std::string text;
  std::string intent;

  bool operator==(const LabeledExample&) const = default;
};

/// Intent classification data with separate out-of-scope evaluation pools.
struct Corpus {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> dev;
  std::vector<LabeledExample> test;
  std::vector<std::string> oos_dev;
  std::vector<std::string> oos_test;
  std::vector<std::string> intents;  // first-appearance order in train
  std::optional<std::map<std::string, std::string>> domain_map;  // intent -> domain

  std::size_t num_intents() const { return intents.size(); }
  nlohmann::json summary() const;
};

/// Balanced K-shot sample: examples[j * K + i] is the i-th example of intents[j].
struct FewShotTrainSet {
  std::vector<std::string> intents;
  std::vector<LabeledExample> examples;
  std::size_t K = 0;
  std::uint64_t seed = 0;

  std::size_t N() const { return intents.size(); }
  std::size_t size() const { return examples.size(); }
  const LabeledExample& at(std::size_t cls, std::size_t i) const { return examples[cls * K + i]; }
};

enum class PairLabel { Negative = 0, Positive = 1 };

/// Ordered pair: u_text sits in the input-utterance slot, e_text in the
/// compared-example slot.
struct PairExample {
  std::string u_text;
  std::string e_text;
  PairLabel label = PairLabel::Negative;

  bool positive() const { return label == PairLabel::Positive; }
  bool operator==(const PairExample&) const = default;
};

enum class NliLabel { Entailment, Neutral, Contradiction };

struct NliRecord {
  std::string premise;
  std::string hypothesis;
  NliLabel label = NliLabel::Neutral;
};

/// Parses a CLINC150-style JSON document (keys train, val, test, oos_val,
/// oos_test; oos_train is ignored). Throws ParseError naming the bad path.
Corpus load_clinc_json(std::string_view bytes);
Corpus load_clinc_file(const std::string& path);

/// Accepts {intent: domain} or the CLINC {domain: [intents]} layout.
std::map<std::string, std::string> parse_domain_map(std::string_view bytes);
std::map<std::string, std::string> load_domain_map_file(const std::string& path);

Corpus filter_domain(const Corpus& corpus, const std::string& domain);

FewShotTrainSet sample_kshot(const Corpus& corpus, std::size_t K, std::uint64_t seed);

/// All ordered same-intent (positive) and cross-intent (negative) pairs,
/// class-major then example-major. With symmetric_halving each unordered pair
/// is emitted once, lower (class, index) in the u slot.
std::vector<PairExample> synth_pairs(const FewShotTrainSet& trainset, bool symmetric_halving = false);

NliLabel parse_nli_label(std::string_view label);
std::vector<PairExample> nli_to_binary(const std::vector<NliRecord>& records);

/// One JSON object per line: {"premise", "hypothesis", "label"}. Blank lines are skipped.
std::vector<NliRecord> parse_nli_jsonl(std::string_view bytes);
std::vector<NliRecord> load_nli_file(const std::string& path);

nlohmann::json to_json(const FewShotTrainSet& trainset);
FewShotTrainSet trainset_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PairExample& pair);

/// Inverse of load_clinc_json (OOS pools are written with the "oos" label).
nlohmann::json to_clinc_json(const Corpus& corpus);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace dnnc
