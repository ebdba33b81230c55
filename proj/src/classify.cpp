#include "dnnc/classify.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>

namespace dnnc {

using nlohmann::json;

DenseVector softmax(const DenseVector& logits) {
  const double m = logits.maxCoeff();
  DenseVector e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

DenseVector ClassifierModel::probabilities(std::string_view utterance) const {
  return softmax(logits(encoder->embed(utterance)));
}

json ClassifierModel::to_json() const {
  return json{{"kind", "softmax"},
              {"weights", matrix_to_json(W)},
              {"bias", vector_to_json(b)},
              {"feature_config", json{{"intents", intents}, {"encoder", encoder->config()}}},
              {"label_smoothing", label_smoothing},
              {"seed", seed},
              {"version", kModelFormatVersion}};
}

ClassifierModel ClassifierModel::from_json(const json& j) {
  ClassifierModel m;
  try {
    if (!j.contains("version") || j.at("version").get<int>() != kModelFormatVersion) {
      throw ModelFormatError("classifier: unsupported model format version");
    }
    if (j.at("kind").get<std::string>() != "softmax") {
      throw ModelFormatError("classifier: expected kind 'softmax', found '" + j.at("kind").get<std::string>() + "'");
    }
    m.W = matrix_from_json(j.at("weights"));
    m.b = vector_from_json(j.at("bias"));
    m.intents = j.at("feature_config").at("intents").get<std::vector<std::string>>();
    m.encoder = make_embedder(j.at("feature_config").at("encoder"));
    m.label_smoothing = j.at("label_smoothing").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("classifier: ") + e.what());
  }
  if (static_cast<std::size_t>(m.W.rows()) != m.intents.size() || m.b.size() != m.W.rows()) {
    throw ModelFormatError("classifier: weight rows do not match the intent count");
  }
  return m;
}

double softmax_loss(const Matrix& W, const DenseVector& b, const Matrix& H, std::span<const std::size_t> labels,
                    double label_smoothing, Matrix* grad_W, DenseVector* grad_b) {
  const Eigen::Index n = H.rows();
  const Eigen::Index classes = W.rows();
  if (n == 0) throw std::invalid_argument("softmax_loss: no examples");
  const double inv_n = 1.0 / static_cast<double>(n);
  const double off = label_smoothing / static_cast<double>(classes);
  const double on = 1.0 - label_smoothing + off;

  const Matrix Z = (H * W.transpose()).rowwise() + b.transpose();  // n x N
  Matrix dZ(n, classes);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = Z.row(i).maxCoeff();
    const double lse = m + std::log((Z.row(i).array() - m).exp().sum());
    for (Eigen::Index c = 0; c < classes; ++c) {
      const double t = static_cast<std::size_t>(c) == labels[static_cast<std::size_t>(i)] ? on : off;
      const double logp = Z(i, c) - lse;
      loss -= t * logp;
      dZ(i, c) = (std::exp(logp) - t) * inv_n;
    }
  }
  if (grad_W) *grad_W = dZ.transpose() * H;
  if (grad_b) *grad_b = dZ.colwise().sum().transpose();
  return loss * inv_n;
}

ClassifierModel train_softmax(std::span<const LabeledExample> examples, const std::vector<std::string>& intents,
                              std::shared_ptr<const Embedder> encoder, const SoftmaxConfig& config,
                              std::vector<double>* loss_history) {
  if (examples.empty()) throw std::invalid_argument("train_softmax: empty training set");
  if (intents.empty()) throw std::invalid_argument("train_softmax: no intents");
  if (!encoder) throw std::invalid_argument("train_softmax: null encoder");
  if (!(config.label_smoothing >= 0.0 && config.label_smoothing < 1.0)) {
    throw ConfigError("train_softmax: label smoothing must lie in [0, 1)");
  }

  std::unordered_map<std::string, std::size_t> class_of;
  for (std::size_t c = 0; c < intents.size(); ++c) class_of.emplace(intents[c], c);
  std::vector<std::string> texts;
  std::vector<std::size_t> labels;
  for (const auto& ex : examples) {
    auto it = class_of.find(ex.intent);
    if (it == class_of.end()) throw std::invalid_argument("train_softmax: unknown intent '" + ex.intent + "'");
    texts.push_back(ex.text);
    labels.push_back(it->second);
  }
  const auto vecs = encoder->embed_batch(texts);
  const auto d = vecs.front().size();
  Matrix H(static_cast<Eigen::Index>(vecs.size()), d);
  for (std::size_t i = 0; i < vecs.size(); ++i) H.row(static_cast<Eigen::Index>(i)) = vecs[i].transpose();

  ClassifierModel model;
  model.intents = intents;
  model.encoder = std::move(encoder);
  model.label_smoothing = config.label_smoothing;
  model.seed = config.seed;
  Rng rng(config.seed);
  model.W.resize(static_cast<Eigen::Index>(intents.size()), d);
  for (Eigen::Index r = 0; r < model.W.rows(); ++r) {
    for (Eigen::Index c = 0; c < d; ++c) model.W(r, c) = rng.uniform(-0.01, 0.01);
  }
  model.b = DenseVector::Zero(static_cast<Eigen::Index>(intents.size()));

  Matrix gW;
  DenseVector gb;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double loss = softmax_loss(model.W, model.b, H, labels, config.label_smoothing, &gW, &gb);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "train_softmax: non-finite loss at epoch " << epoch << " (lr=" << config.learning_rate << ")";
      throw TrainingError(msg.str());
    }
    if (loss_history) loss_history->push_back(loss);
    model.W -= config.learning_rate * gW;
    model.b -= config.learning_rate * gb;
  }
  if (loss_history) loss_history->push_back(softmax_loss(model.W, model.b, H, labels, config.label_smoothing));
  return model;
}

ClassifierModel train_softmax(const FewShotTrainSet& trainset, std::shared_ptr<const Embedder> encoder,
                              const SoftmaxConfig& config, std::vector<double>* loss_history) {
  return train_softmax(trainset.examples, trainset.intents, std::move(encoder), config, loss_history);
}

ScoredDecision decide_softmax(const ClassifierModel& model, std::string_view utterance) {
  const DenseVector p = model.probabilities(utterance);
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < p.size(); ++c) {
    if (p[c] > p[best]) best = c;
  }
  return ScoredDecision{model.intents[static_cast<std::size_t>(best)], p[best], std::nullopt, 0};
}

Prediction predict_softmax(const ClassifierModel& model, std::string_view utterance, double T) {
  return apply_threshold(decide_softmax(model, utterance), T);
}

}  // namespace dnnc
