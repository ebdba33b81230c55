#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dnnc/common.hpp"
#include "dnnc/corpus.hpp"
#include "dnnc/encoders.hpp"

namespace dnnc {

class PairScorer;

/// Best candidate before the OOS threshold is applied. Sweeps cache these.
struct ScoredDecision {
  std::string label;  // intent of the best candidate
  double score = 0.0;
  std::optional<std::size_t> example_id;
  std::size_t scored_pair_count = 0;

  bool operator==(const ScoredDecision&) const = default;
};

struct Prediction {
  std::string label;  // intent, or kOosLabel
  double confidence = 0.0;
  std::optional<std::size_t> matched_example_id;
  std::size_t scored_pair_count = 0;

  bool is_oos() const { return label == kOosLabel; }
  bool operator==(const Prediction&) const = default;
};

/// Keeps the decision's label iff score > T. Confidence is the best score
/// clamped to [0, 1], also for OOS outputs.
Prediction apply_threshold(const ScoredDecision& decision, double T);

struct IndexEntry {
  std::size_t id = 0;
  std::string intent;
  std::string text;
  DenseVector vector;
};

/// Training examples with their embeddings computed once at build time.
struct ExampleIndex {
  std::vector<IndexEntry> entries;
  nlohmann::json encoder_config;
  std::string metric = "cosine";

  std::size_t size() const { return entries.size(); }

  /// {entries: [{id, intent, text, vector}], encoder_config, metric}.
  nlohmann::json to_json() const;
  static ExampleIndex from_json(const nlohmann::json& j);
};

inline constexpr std::size_t kDefaultJointK = 20;

ExampleIndex build_index(const FewShotTrainSet& trainset, const Embedder& encoder);

/// Scores the utterance (u slot) against all N*K examples; argmax with the
/// lowest example id winning ties.
ScoredDecision decide_dnnc(const PairScorer& matcher, const FewShotTrainSet& trainset, std::string_view utterance);
Prediction dnnc_predict(const PairScorer& matcher, const FewShotTrainSet& trainset, std::string_view utterance,
                        double T);

/// 1-nearest neighbour by cosine; no pairwise matcher calls.
ScoredDecision decide_knn(const ExampleIndex& index, const DenseVector& query);
ScoredDecision decide_knn(const ExampleIndex& index, const Embedder& encoder, std::string_view utterance);
Prediction knn_predict(const ExampleIndex& index, const Embedder& encoder, std::string_view utterance, double T);

struct RankedEntry {
  std::size_t position = 0;  // into index.entries
  std::size_t id = 0;
  double score = 0.0;

  bool operator==(const RankedEntry&) const = default;
};

/// The k highest-cosine entries, descending, ties broken by lower id.
std::vector<RankedEntry> retrieve_topk(const ExampleIndex& index, const DenseVector& query, std::size_t k);
std::vector<RankedEntry> retrieve_topk(const ExampleIndex& index, const Embedder& encoder, std::string_view utterance,
                                       std::size_t k);

/// Matcher reranking restricted to the top-k retrieved entries.
ScoredDecision decide_joint(const ExampleIndex& index, const Embedder& encoder, const PairScorer& matcher,
                            std::string_view utterance, std::size_t k = kDefaultJointK);
Prediction joint_predict(const ExampleIndex& index, const Embedder& encoder, const PairScorer& matcher,
                         std::string_view utterance, std::size_t k, double T);

}  // namespace dnnc
