#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dnnc/augment.hpp"
#include "dnnc/classify.hpp"
#include "dnnc/corpus.hpp"
#include "dnnc/encoders.hpp"
#include "dnnc/evalharness.hpp"
#include "dnnc/matchers.hpp"
#include "dnnc/nnengine.hpp"
#include "dnnc/synthetic.hpp"

namespace dnnc {

enum class Method { Classifier, ClassifierEda, TfidfKnn, EmbKnn, EmbKnnVanilla, RnKnn, Dnnc, DnncScratch, DnncJoint };

std::string_view to_string(Method method);
Method method_from_string(std::string_view name);
bool uses_matcher(Method method);

inline constexpr std::size_t kDefaultSingleDomainRuns = 10;
inline constexpr std::size_t kDefaultAllDomainRuns = 5;

TrainConfig default_relation_train();

struct RunConfig {
  std::string dataset;     // CLINC-format JSON; empty selects the built-in synthetic corpus
  std::string domain_map;  // sidecar {intent: domain}
  std::string domain;      // empty = all intents
  SyntheticSpec synthetic;
  std::size_t K = 5;
  std::vector<std::uint64_t> seeds;
  Method method = Method::Dnnc;
  std::optional<std::size_t> joint_k;
  std::vector<double> grid = default_threshold_grid();

  /// Embedder for classifier and kNN methods; {"type": "tfidf"} without a
  /// vocabulary is fitted on each run's training sample.
  nlohmann::json encoder = {{"type", "hashed"}, {"dim", 256}, {"seed", 0}};
  std::string matcher = "feature-linear";  // feature-linear | remote
  std::string encoder_url;                 // falls back to $ENCODER_URL
  std::string scorer_url;                  // falls back to $SCORER_URL
  std::string nli_path;
  std::string lexicon_path;

  TrainConfig matcher_train;
  TrainConfig nli_pretrain;
  TrainConfig relation_train = default_relation_train();
  SoftmaxConfig softmax;
  ProjectionHyper projection;
  EdaParams eda;

  std::string output_dir;

  /// Missing fields keep their defaults. Seeds default to 0..R-1 with R by domain scope.
  static RunConfig from_json(const nlohmann::json& j);
  /// Everything except output_dir.
  nlohmann::json to_json() const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Utterance -> best in-domain candidate, before thresholding.
class IntentPredictor {
 public:
  virtual ~IntentPredictor() = default;
  virtual ScoredDecision decide(std::string_view utterance) const = 0;
  /// Self-contained bundle accepted by load_predictor.
  virtual nlohmann::json to_json() const = 0;

  Prediction predict(std::string_view utterance, double T) const { return apply_threshold(decide(utterance), T); }
  DecideFn decide_fn() const {
    return [this](std::string_view u) { return decide(u); };
  }
};

class ClassifierPredictor final : public IntentPredictor {
 public:
  explicit ClassifierPredictor(ClassifierModel model) : model_(std::move(model)) {}
  ScoredDecision decide(std::string_view utterance) const override { return decide_softmax(model_, utterance); }
  nlohmann::json to_json() const override;
  const ClassifierModel& model() const { return model_; }

 private:
  ClassifierModel model_;
};

class KnnPredictor final : public IntentPredictor {
 public:
  KnnPredictor(ExampleIndex index, std::shared_ptr<const Embedder> encoder);
  ScoredDecision decide(std::string_view utterance) const override { return decide_knn(index_, *encoder_, utterance); }
  nlohmann::json to_json() const override;
  const ExampleIndex& index() const { return index_; }
  const Embedder& encoder() const { return *encoder_; }

 private:
  ExampleIndex index_;
  std::shared_ptr<const Embedder> encoder_;
};

class MatcherPredictor final : public IntentPredictor {
 public:
  MatcherPredictor(MatcherModel matcher, FewShotTrainSet trainset)
      : matcher_(std::move(matcher)), trainset_(std::move(trainset)) {}
  ScoredDecision decide(std::string_view utterance) const override {
    return decide_dnnc(matcher_, trainset_, utterance);
  }
  nlohmann::json to_json() const override;
  const MatcherModel& matcher() const { return matcher_; }

 private:
  MatcherModel matcher_;
  FewShotTrainSet trainset_;
};

class JointPredictor final : public IntentPredictor {
 public:
  JointPredictor(MatcherModel matcher, ExampleIndex index, std::shared_ptr<const Embedder> encoder, std::size_t k);
  ScoredDecision decide(std::string_view utterance) const override {
    return decide_joint(index_, *encoder_, matcher_, utterance, k_);
  }
  nlohmann::json to_json() const override;
  const MatcherModel& matcher() const { return matcher_; }
  const ExampleIndex& index() const { return index_; }
  const Embedder& encoder() const { return *encoder_; }

 private:
  MatcherModel matcher_;
  ExampleIndex index_;
  std::shared_ptr<const Embedder> encoder_;
  std::size_t k_;
};

std::unique_ptr<IntentPredictor> load_predictor(const nlohmann::json& bundle);

/// Inputs shared by every run of an experiment, loaded once.
struct ExperimentResources {
  Corpus corpus;
  std::vector<PairExample> nli_pairs;
  SynonymLexicon lexicon;
};

ExperimentResources load_resources(const RunConfig& config);

/// Embedder from the config, fitting tf-idf statistics on the sample when needed.
std::shared_ptr<const Embedder> build_encoder(const RunConfig& config, const FewShotTrainSet& trainset);

/// Trains the configured method on one K-shot sample.
std::unique_ptr<IntentPredictor> train_predictor(const RunConfig& config, const ExperimentResources& resources,
                                                 const FewShotTrainSet& trainset);

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<MetricsReport> dev_sweep;
  MetricsReport test;
  std::vector<Prediction> test_predictions;
};

struct ExperimentResult {
  SweepResult sweep;
  std::vector<RunResult> runs;
  std::map<std::string, MetricSummary> aggregate;
  double joint_r = 0.0;  // N_oos / N_in of the test set
  double joint_accuracy_mean = 0.0;

  /// Deterministic report: no timings, no paths.
  nlohmann::json metrics_json(const RunConfig& config) const;
};

/// Per seed: sample, (augment), train, dev sweep; then threshold selection and
/// test evaluation at T*. Writes artifacts when config.output_dir is set.
/// Errors are rethrown as StageError.
ExperimentResult run_experiment(const RunConfig& config);

/// Error tagged with the pipeline stage and run index (-1 outside runs).
class StageError : public Error {
 public:
  StageError(std::string stage, int run, const std::string& what);
  const std::string& stage() const { return stage_; }
  int run() const { return run_; }

 private:
  std::string stage_;
  int run_;
};

}  // namespace dnnc
