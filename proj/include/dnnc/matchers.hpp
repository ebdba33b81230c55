#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dnnc/common.hpp"
#include "dnnc/corpus.hpp"
#include "dnnc/encoders.hpp"

namespace dnnc {

/// Relevance function S(u, e) used by nearest-neighbour inference. The input
/// utterance always goes in the u slot.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual double score(std::string_view u, std::string_view e) const = 0;
  /// Scores u against every candidate, in order.
  virtual std::vector<double> score_many(std::string_view u, std::span<const std::string> candidates) const;
};

/// S(u, e) = cosine of the two embeddings.
class CosineScorer final : public PairScorer {
 public:
  explicit CosineScorer(std::shared_ptr<const Embedder> embedder) : embedder_(std::move(embedder)) {}
  double score(std::string_view u, std::string_view e) const override;
  std::vector<double> score_many(std::string_view u, std::span<const std::string> candidates) const override;

 private:
  std::shared_ptr<const Embedder> embedder_;
};

// ---------------------------------------------------------------------------
// Pair features

inline constexpr std::size_t kPairFeatureCount = 5;

/// [cosine of hashed embeddings, cosine of tf-idf vectors, token Jaccard,
///  token-length ratio min/max, constant 1].
using PairFeatures = std::array<double, kPairFeatureCount>;

struct FeatureConfig {
  std::size_t hashed_dim = 256;
  std::uint64_t hashed_seed = 0;
  TfidfModel tfidf;
};

PairFeatures pair_features(std::string_view u, std::string_view e, const FeatureConfig& config);

// ---------------------------------------------------------------------------
// Models

enum class MatcherKind { FeatureLinear, RelationMlp, Remote };

std::string_view to_string(MatcherKind kind);
MatcherKind matcher_kind_from_string(std::string_view name);

/// sigmoid(w . features + b).
struct FeatureLinearParams {
  FeatureConfig features;
  DenseVector weights = DenseVector::Zero(kPairFeatureCount);
  double bias = 0.0;
};

/// Relation network: sigmoid(w2 . tanh(W1 [vu; ve; |vu - ve|; vu * ve] + b1) + b2)
/// over hashed embeddings vu, ve.
struct RelationMlpParams {
  std::size_t embed_dim = 64;
  std::uint64_t embed_seed = 0;
  Matrix w1;  // hidden x 4*embed_dim
  DenseVector b1;
  DenseVector w2;
  double b2 = 0.0;

  std::size_t hidden() const { return static_cast<std::size_t>(w1.rows()); }
};

/// Cross-encoder behind POST {endpoint}/score_pairs.
struct RemoteParams {
  std::string endpoint;
};

class MatcherModel final : public PairScorer {
 public:
  using Params = std::variant<FeatureLinearParams, RelationMlpParams, RemoteParams>;

  explicit MatcherModel(Params params, double label_smoothing = 0.0, std::uint64_t seed = 0);

  MatcherKind kind() const;
  const Params& params() const { return params_; }
  Params& params() { return params_; }
  double label_smoothing() const { return label_smoothing_; }
  std::uint64_t seed() const { return seed_; }

  /// Probability in (0, 1) for local kinds; remote scores are in [0, 1].
  double score(std::string_view u, std::string_view e) const override;
  std::vector<double> score_many(std::string_view u, std::span<const std::string> candidates) const override;

  /// {kind, weights, bias, feature_config, label_smoothing, seed, version}.
  nlohmann::json to_json() const;
  static MatcherModel from_json(const nlohmann::json& j);

 private:
  Params params_;
  double label_smoothing_;
  std::uint64_t seed_;
};

double score_pair(const MatcherModel& model, std::string_view u, std::string_view e);

// ---------------------------------------------------------------------------
// Training

struct MatcherArch {
  MatcherKind kind = MatcherKind::FeatureLinear;
  std::size_t hashed_dim = 256;  // feature-linear
  std::uint64_t hashed_seed = 0;
  std::size_t relation_dim = 64;  // relation-mlp
  std::size_t hidden = 32;
};

struct TrainConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 300;
  double label_smoothing = 0.1;
  std::uint64_t seed = 0;
  MatcherArch arch;
  std::optional<MatcherModel> warm_start;
};

/// t = y (1 - eps) + eps / 2.
double smoothed_target(bool positive, double eps);

/// Pairs turned into model inputs (one row per pair) with smoothed targets.
struct EncodedPairs {
  Matrix inputs;
  DenseVector targets;
};

EncodedPairs encode_pairs(const MatcherModel& model, std::span<const PairExample> pairs, double label_smoothing);

/// Flat parameter vector. Feature-linear: [w, b]; relation-mlp: [W1 row-major, b1, w2, b2].
DenseVector matcher_parameters(const MatcherModel& model);
void set_matcher_parameters(MatcherModel& model, const DenseVector& flat);

/// Mean binary cross-entropy against data.targets; gradient w.r.t. matcher_parameters.
double matcher_loss(const MatcherModel& model, const EncodedPairs& data, DenseVector* grad = nullptr);

/// Untrained model of the given architecture. Feature-linear fits its tf-idf
/// table on the distinct texts of `pairs`.
MatcherModel init_matcher(const MatcherArch& arch, std::span<const PairExample> pairs, std::uint64_t seed);

/// Full-batch gradient descent on smoothed BCE. A warm start supplies the
/// initial weights (shape-checked); feature-linear tf-idf statistics are
/// always refitted on `pairs`.
MatcherModel train_matcher(std::span<const PairExample> pairs, const TrainConfig& config,
                           std::vector<double>* loss_history = nullptr);

/// Pre-trains on NLI pairs, then fine-tunes on intent pairs from the result.
/// Empty nli_pairs degrades to cold-start training.
MatcherModel pretrain_then_finetune(std::span<const PairExample> nli_pairs, std::span<const PairExample> intent_pairs,
                                    const TrainConfig& pretrain, const TrainConfig& finetune);
MatcherModel pretrain_then_finetune(std::span<const PairExample> nli_pairs, std::span<const PairExample> intent_pairs,
                                    const TrainConfig& config);

std::vector<double> remote_score_pairs(const std::string& endpoint,
                                       std::span<const std::pair<std::string, std::string>> pairs);

}  // namespace dnnc
