#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dnnc/common.hpp"
#include "dnnc/corpus.hpp"
#include "dnnc/encoders.hpp"
#include "dnnc/nnengine.hpp"

namespace dnnc {

/// softmax(W h + b) over a fixed text encoder h.
struct ClassifierModel {
  std::vector<std::string> intents;
  Matrix W;  // N x d
  DenseVector b;
  std::shared_ptr<const Embedder> encoder;

  DenseVector logits(const DenseVector& h) const { return W * h + b; }
  DenseVector probabilities(std::string_view utterance) const;

  /// {kind: "softmax", weights, bias, feature_config, label_smoothing, seed, version}.
  nlohmann::json to_json() const;
  static ClassifierModel from_json(const nlohmann::json& j);

  double label_smoothing = 0.0;
  std::uint64_t seed = 0;
};

struct SoftmaxConfig {
  double learning_rate = 1.0;
  std::size_t epochs = 300;
  double label_smoothing = 0.1;
  std::uint64_t seed = 0;
};

DenseVector softmax(const DenseVector& logits);

/// Mean cross-entropy of row-wise encodings H (n x d) against smoothed one-hot
/// targets (on-class 1 - eps + eps/N, off-class eps/N). Gradients are filled
/// when the pointers are non-null.
double softmax_loss(const Matrix& W, const DenseVector& b, const Matrix& H, std::span<const std::size_t> labels,
                    double label_smoothing, Matrix* grad_W = nullptr, DenseVector* grad_b = nullptr);

/// Full-batch gradient descent. `examples` may be any labelled set whose intents
/// are all listed in `intents` (e.g. an EDA-augmented K-shot sample).
ClassifierModel train_softmax(std::span<const LabeledExample> examples, const std::vector<std::string>& intents,
                              std::shared_ptr<const Embedder> encoder, const SoftmaxConfig& config,
                              std::vector<double>* loss_history = nullptr);
ClassifierModel train_softmax(const FewShotTrainSet& trainset, std::shared_ptr<const Embedder> encoder,
                              const SoftmaxConfig& config, std::vector<double>* loss_history = nullptr);

/// Threshold-free decision: the argmax class (lowest index on ties) and its probability.
ScoredDecision decide_softmax(const ClassifierModel& model, std::string_view utterance);

/// In-domain iff the max probability is strictly greater than T.
Prediction predict_softmax(const ClassifierModel& model, std::string_view utterance, double T);

}  // namespace dnnc
