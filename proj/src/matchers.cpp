#include "dnnc/matchers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "dnnc/remote.hpp"

namespace dnnc {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double ez = std::exp(z);
  return ez / (1.0 + ez);
}

// Keeps local scores strictly inside (0, 1) even when the logit saturates.
double open_unit(double p) {
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0 - std::numeric_limits<double>::epsilon() / 2);
}

/// Per-text quantities reused across every pair a text takes part in.
struct TextProfile {
  DenseVector hashed;
  DenseVector tfidf;
  std::vector<std::string> token_set;
  std::size_t token_count = 0;
};

TextProfile profile(std::string_view text, const FeatureConfig& cfg) {
  TextProfile p;
  p.hashed = hashed_embed(text, cfg.hashed_dim, cfg.hashed_seed);
  p.tfidf = cfg.tfidf.vectorize(text);
  auto toks = tokenize(text);
  p.token_count = toks.size();
  std::sort(toks.begin(), toks.end());
  toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
  p.token_set = std::move(toks);
  return p;
}

PairFeatures features_of(const TextProfile& u, const TextProfile& e) {
  std::size_t common = 0;
  auto a = u.token_set.begin();
  auto b = e.token_set.begin();
  while (a != u.token_set.end() && b != e.token_set.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++common;
      ++a;
      ++b;
    }
  }
  const std::size_t uni = u.token_set.size() + e.token_set.size() - common;
  const double jaccard = uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni);
  const std::size_t lo = std::min(u.token_count, e.token_count);
  const std::size_t hi = std::max(u.token_count, e.token_count);
  const double ratio = hi == 0 ? 0.0 : static_cast<double>(lo) / static_cast<double>(hi);
  return {cosine(u.hashed, e.hashed), cosine(u.tfidf, e.tfidf), jaccard, ratio, 1.0};
}

DenseVector relation_input(const DenseVector& vu, const DenseVector& ve) {
  const Eigen::Index d = vu.size();
  DenseVector x(4 * d);
  x.segment(0, d) = vu;
  x.segment(d, d) = ve;
  x.segment(2 * d, d) = (vu - ve).cwiseAbs();
  x.segment(3 * d, d) = vu.cwiseProduct(ve);
  return x;
}

double feature_logit(const FeatureLinearParams& p, const PairFeatures& f) {
  double z = p.bias;
  for (std::size_t i = 0; i < kPairFeatureCount; ++i) z += p.weights[static_cast<Eigen::Index>(i)] * f[i];
  return z;
}

double relation_logit(const RelationMlpParams& p, const DenseVector& x) {
  const DenseVector h = (p.w1 * x + p.b1).array().tanh().matrix();
  return p.w2.dot(h) + p.b2;
}

std::vector<double> remote_score_many(const std::string& endpoint, std::string_view u,
                                      std::span<const std::string> candidates) {
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(candidates.size());
  for (const auto& c : candidates) pairs.emplace_back(std::string(u), c);
  return remote_score_pairs(endpoint, pairs);
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<double> PairScorer::score_many(std::string_view u, std::span<const std::string> candidates) const {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(score(u, c));
  return out;
}

double CosineScorer::score(std::string_view u, std::string_view e) const {
  return cosine(embedder_->embed(u), embedder_->embed(e));
}

std::vector<double> CosineScorer::score_many(std::string_view u, std::span<const std::string> candidates) const {
  const DenseVector vu = embedder_->embed(u);
  const auto ve = embedder_->embed_batch(candidates);
  std::vector<double> out;
  out.reserve(ve.size());
  for (const auto& v : ve) out.push_back(cosine(vu, v));
  return out;
}

PairFeatures pair_features(std::string_view u, std::string_view e, const FeatureConfig& config) {
  return features_of(profile(u, config), profile(e, config));
}

std::string_view to_string(MatcherKind kind) {
  switch (kind) {
    case MatcherKind::FeatureLinear: return "feature-linear";
    case MatcherKind::RelationMlp: return "relation-mlp";
    case MatcherKind::Remote: return "remote";
  }
  return "unknown";
}

MatcherKind matcher_kind_from_string(std::string_view name) {
  if (name == "feature-linear") return MatcherKind::FeatureLinear;
  if (name == "relation-mlp") return MatcherKind::RelationMlp;
  if (name == "remote") return MatcherKind::Remote;
  throw ModelFormatError("unknown matcher kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// MatcherModel

MatcherModel::MatcherModel(Params params, double label_smoothing, std::uint64_t seed)
    : params_(std::move(params)), label_smoothing_(label_smoothing), seed_(seed) {}

MatcherKind MatcherModel::kind() const {
  return std::visit(overloaded{[](const FeatureLinearParams&) { return MatcherKind::FeatureLinear; },
                               [](const RelationMlpParams&) { return MatcherKind::RelationMlp; },
                               [](const RemoteParams&) { return MatcherKind::Remote; }},
                    params_);
}

double MatcherModel::score(std::string_view u, std::string_view e) const {
  const std::string cand(e);
  return score_many(u, std::span<const std::string>(&cand, 1)).front();
}

std::vector<double> MatcherModel::score_many(std::string_view u, std::span<const std::string> candidates) const {
  std::vector<double> out;
  out.reserve(candidates.size());
  std::visit(overloaded{[&](const FeatureLinearParams& p) {
                          const TextProfile pu = profile(u, p.features);
                          for (const auto& c : candidates) {
                            out.push_back(open_unit(sigmoid(feature_logit(p, features_of(pu, profile(c, p.features))))));
                          }
                        },
                        [&](const RelationMlpParams& p) {
                          const DenseVector vu = hashed_embed(u, p.embed_dim, p.embed_seed);
                          for (const auto& c : candidates) {
                            const DenseVector ve = hashed_embed(c, p.embed_dim, p.embed_seed);
                            out.push_back(open_unit(sigmoid(relation_logit(p, relation_input(vu, ve)))));
                          }
                        },
                        [&](const RemoteParams& p) { out = remote_score_many(p.endpoint, u, candidates); }},
             params_);
  return out;
}

double score_pair(const MatcherModel& model, std::string_view u, std::string_view e) { return model.score(u, e); }

json MatcherModel::to_json() const {
  json j{{"kind", std::string(to_string(kind()))},
         {"label_smoothing", label_smoothing_},
         {"seed", seed_},
         {"version", kModelFormatVersion}};
  std::visit(overloaded{[&](const FeatureLinearParams& p) {
                          j["weights"] = vector_to_json(p.weights);
                          j["bias"] = p.bias;
                          j["feature_config"] = json{{"hashed_dim", p.features.hashed_dim},
                                                     {"hashed_seed", p.features.hashed_seed},
                                                     {"tfidf", p.features.tfidf.to_json()}};
                        },
                        [&](const RelationMlpParams& p) {
                          j["weights"] = json{{"w1", matrix_to_json(p.w1)},
                                              {"b1", vector_to_json(p.b1)},
                                              {"w2", vector_to_json(p.w2)}};
                          j["bias"] = p.b2;
                          j["feature_config"] = json{{"embed_dim", p.embed_dim},
                                                     {"embed_seed", p.embed_seed},
                                                     {"hidden", p.hidden()}};
                        },
                        [&](const RemoteParams& p) {
                          j["weights"] = nullptr;
                          j["bias"] = nullptr;
                          j["feature_config"] = json{{"endpoint", p.endpoint}};
                        }},
             params_);
  return j;
}

MatcherModel MatcherModel::from_json(const json& j) {
  try {
    if (!j.contains("version") || j.at("version").get<int>() != kModelFormatVersion) {
      throw ModelFormatError("matcher: unsupported model format version");
    }
    const MatcherKind kind = matcher_kind_from_string(j.at("kind").get<std::string>());
    const double eps = j.at("label_smoothing").get<double>();
    const auto seed = j.at("seed").get<std::uint64_t>();
    const json& fc = j.at("feature_config");
    switch (kind) {
      case MatcherKind::FeatureLinear: {
        FeatureLinearParams p;
        p.features.hashed_dim = fc.at("hashed_dim").get<std::size_t>();
        p.features.hashed_seed = fc.at("hashed_seed").get<std::uint64_t>();
        p.features.tfidf = TfidfModel::from_json(fc.at("tfidf"));
        p.weights = vector_from_json(j.at("weights"));
        if (p.weights.size() != static_cast<Eigen::Index>(kPairFeatureCount)) {
          throw ModelFormatError("matcher: feature-linear weight length mismatch");
        }
        p.bias = j.at("bias").get<double>();
        return MatcherModel(std::move(p), eps, seed);
      }
      case MatcherKind::RelationMlp: {
        RelationMlpParams p;
        p.embed_dim = fc.at("embed_dim").get<std::size_t>();
        p.embed_seed = fc.at("embed_seed").get<std::uint64_t>();
        const json& w = j.at("weights");
        p.w1 = matrix_from_json(w.at("w1"));
        p.b1 = vector_from_json(w.at("b1"));
        p.w2 = vector_from_json(w.at("w2"));
        p.b2 = j.at("bias").get<double>();
        const auto hidden = fc.at("hidden").get<std::size_t>();
        if (p.hidden() != hidden || static_cast<std::size_t>(p.w1.cols()) != 4 * p.embed_dim ||
            static_cast<std::size_t>(p.b1.size()) != hidden || static_cast<std::size_t>(p.w2.size()) != hidden) {
          throw ModelFormatError("matcher: relation-mlp shape mismatch");
        }
        return MatcherModel(std::move(p), eps, seed);
      }
      case MatcherKind::Remote:
        return MatcherModel(RemoteParams{fc.at("endpoint").get<std::string>()}, eps, seed);
    }
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("matcher: ") + e.what());
  }
  throw ModelFormatError("matcher: unreachable kind");
}

// ---------------------------------------------------------------------------
// Training

double smoothed_target(bool positive, double eps) { return (positive ? 1.0 : 0.0) * (1.0 - eps) + eps / 2.0; }

EncodedPairs encode_pairs(const MatcherModel& model, std::span<const PairExample> pairs, double label_smoothing) {
  EncodedPairs out;
  const auto n = static_cast<Eigen::Index>(pairs.size());
  out.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.targets[i] = smoothed_target(pairs[static_cast<std::size_t>(i)].positive(), label_smoothing);

  std::visit(overloaded{[&](const FeatureLinearParams& p) {
                          out.inputs.resize(n, static_cast<Eigen::Index>(kPairFeatureCount));
                          std::map<std::string, TextProfile, std::less<>> cache;
                          auto get = [&](const std::string& t) -> const TextProfile& {
                            auto it = cache.find(t);
                            if (it == cache.end()) it = cache.emplace(t, profile(t, p.features)).first;
                            return it->second;
                          };
                          for (Eigen::Index i = 0; i < n; ++i) {
                            const auto& pr = pairs[static_cast<std::size_t>(i)];
                            const PairFeatures f = features_of(get(pr.u_text), get(pr.e_text));
                            for (std::size_t c = 0; c < kPairFeatureCount; ++c) {
                              out.inputs(i, static_cast<Eigen::Index>(c)) = f[c];
                            }
                          }
                        },
                        [&](const RelationMlpParams& p) {
                          out.inputs.resize(n, static_cast<Eigen::Index>(4 * p.embed_dim));
                          std::map<std::string, DenseVector, std::less<>> cache;
                          auto get = [&](const std::string& t) -> const DenseVector& {
                            auto it = cache.find(t);
                            if (it == cache.end()) it = cache.emplace(t, hashed_embed(t, p.embed_dim, p.embed_seed)).first;
                            return it->second;
                          };
                          for (Eigen::Index i = 0; i < n; ++i) {
                            const auto& pr = pairs[static_cast<std::size_t>(i)];
                            out.inputs.row(i) = relation_input(get(pr.u_text), get(pr.e_text)).transpose();
                          }
                        },
                        [&](const RemoteParams&) {
                          throw std::invalid_argument("encode_pairs: remote matchers are not trainable");
                        }},
             model.params());
  return out;
}

DenseVector matcher_parameters(const MatcherModel& model) {
  return std::visit(
      overloaded{[](const FeatureLinearParams& p) {
                   DenseVector v(p.weights.size() + 1);
                   v << p.weights, p.bias;
                   return v;
                 },
                 [](const RelationMlpParams& p) {
                   const Eigen::Index h = p.w1.rows();
                   const Eigen::Index in = p.w1.cols();
                   DenseVector v(h * in + 2 * h + 1);
                   Eigen::Index k = 0;
                   for (Eigen::Index r = 0; r < h; ++r) {
                     for (Eigen::Index c = 0; c < in; ++c) v[k++] = p.w1(r, c);
                   }
                   v.segment(k, h) = p.b1;
                   k += h;
                   v.segment(k, h) = p.w2;
                   k += h;
                   v[k] = p.b2;
                   return v;
                 },
                 [](const RemoteParams&) -> DenseVector {
                   throw std::invalid_argument("matcher_parameters: remote matchers have no local parameters");
                 }},
      model.params());
}

void set_matcher_parameters(MatcherModel& model, const DenseVector& flat) {
  std::visit(overloaded{[&](FeatureLinearParams& p) {
                          if (flat.size() != p.weights.size() + 1) throw std::invalid_argument("parameter length mismatch");
                          p.weights = flat.head(p.weights.size());
                          p.bias = flat[p.weights.size()];
                        },
                        [&](RelationMlpParams& p) {
                          const Eigen::Index h = p.w1.rows();
                          const Eigen::Index in = p.w1.cols();
                          if (flat.size() != h * in + 2 * h + 1) throw std::invalid_argument("parameter length mismatch");
                          Eigen::Index k = 0;
                          for (Eigen::Index r = 0; r < h; ++r) {
                            for (Eigen::Index c = 0; c < in; ++c) p.w1(r, c) = flat[k++];
                          }
                          p.b1 = flat.segment(k, h);
                          k += h;
                          p.w2 = flat.segment(k, h);
                          k += h;
                          p.b2 = flat[k];
                        },
                        [](RemoteParams&) {
                          throw std::invalid_argument("set_matcher_parameters: remote matchers have no local parameters");
                        }},
             model.params());
}

double matcher_loss(const MatcherModel& model, const EncodedPairs& data, DenseVector* grad) {
  const Eigen::Index n = data.inputs.rows();
  if (n == 0) throw std::invalid_argument("matcher_loss: no pairs");
  const double inv_n = 1.0 / static_cast<double>(n);

  auto bce = [&](const DenseVector& z, DenseVector& dz) {
    double loss = 0.0;
    dz.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = data.targets[i];
      loss += t * softplus(-z[i]) + (1.0 - t) * softplus(z[i]);
      dz[i] = (sigmoid(z[i]) - t) * inv_n;
    }
    return loss * inv_n;
  };

  return std::visit(
      overloaded{[&](const FeatureLinearParams& p) {
                   const DenseVector z = (data.inputs * p.weights).array() + p.bias;
                   DenseVector dz;
                   const double loss = bce(z, dz);
                   if (grad) {
                     grad->resize(p.weights.size() + 1);
                     grad->head(p.weights.size()) = data.inputs.transpose() * dz;
                     (*grad)[p.weights.size()] = dz.sum();
                   }
                   return loss;
                 },
                 [&](const RelationMlpParams& p) {
                   const Matrix a = (data.inputs * p.w1.transpose()).rowwise() + p.b1.transpose();
                   const Matrix h = a.array().tanh().matrix();
                   const DenseVector z = (h * p.w2).array() + p.b2;
                   DenseVector dz;
                   const double loss = bce(z, dz);
                   if (grad) {
                     const Matrix da = ((dz * p.w2.transpose()).array() * (1.0 - h.array().square())).matrix();
                     const Matrix gw1 = da.transpose() * data.inputs;
                     const Eigen::Index hid = p.w1.rows();
                     const Eigen::Index in = p.w1.cols();
                     grad->resize(hid * in + 2 * hid + 1);
                     Eigen::Index k = 0;
                     for (Eigen::Index r = 0; r < hid; ++r) {
                       for (Eigen::Index c = 0; c < in; ++c) (*grad)[k++] = gw1(r, c);
                     }
                     grad->segment(k, hid) = da.colwise().sum().transpose();
                     k += hid;
                     grad->segment(k, hid) = h.transpose() * dz;
                     k += hid;
                     (*grad)[k] = dz.sum();
                   }
                   return loss;
                 },
                 [](const RemoteParams&) -> double {
                   throw std::invalid_argument("matcher_loss: remote matchers are not trainable");
                 }},
      model.params());
}

MatcherModel init_matcher(const MatcherArch& arch, std::span<const PairExample> pairs, std::uint64_t seed) {
  Rng rng(seed);
  switch (arch.kind) {
    case MatcherKind::FeatureLinear: {
      std::vector<std::string> texts;
      std::set<std::string_view> seen;
      for (const auto& p : pairs) {
        for (const std::string* t : {&p.u_text, &p.e_text}) {
          if (seen.insert(*t).second) texts.push_back(*t);
        }
      }
      FeatureLinearParams p;
      p.features.hashed_dim = arch.hashed_dim;
      p.features.hashed_seed = arch.hashed_seed;
      if (!texts.empty()) p.features.tfidf = TfidfModel::fit(texts);
      for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights[i] = rng.uniform(-0.1, 0.1);
      return MatcherModel(std::move(p), 0.0, seed);
    }
    case MatcherKind::RelationMlp: {
      if (arch.relation_dim == 0 || arch.hidden == 0) throw ConfigError("relation-mlp: dimensions must be positive");
      RelationMlpParams p;
      p.embed_dim = arch.relation_dim;
      p.embed_seed = arch.hashed_seed;
      const auto h = static_cast<Eigen::Index>(arch.hidden);
      const auto in = static_cast<Eigen::Index>(4 * arch.relation_dim);
      const double a1 = 1.0 / std::sqrt(static_cast<double>(in));
      const double a2 = 1.0 / std::sqrt(static_cast<double>(h));
      p.w1.resize(h, in);
      for (Eigen::Index r = 0; r < h; ++r) {
        for (Eigen::Index c = 0; c < in; ++c) p.w1(r, c) = rng.uniform(-a1, a1);
      }
      p.b1 = DenseVector::Zero(h);
      p.w2.resize(h);
      for (Eigen::Index r = 0; r < h; ++r) p.w2[r] = rng.uniform(-a2, a2);
      p.b2 = 0.0;
      return MatcherModel(std::move(p), 0.0, seed);
    }
    case MatcherKind::Remote:
      break;
  }
  throw ConfigError("init_matcher: remote matchers cannot be trained locally");
}

MatcherModel train_matcher(std::span<const PairExample> pairs, const TrainConfig& config,
                           std::vector<double>* loss_history) {
  if (pairs.empty()) throw std::invalid_argument("train_matcher: empty pair list");
  if (!(config.label_smoothing >= 0.0 && config.label_smoothing < 1.0)) {
    throw ConfigError("train_matcher: label smoothing must lie in [0, 1)");
  }

  MatcherModel model = init_matcher(config.arch, pairs, config.seed);
  if (config.warm_start) {
    const MatcherModel& warm = *config.warm_start;
    if (warm.kind() != model.kind()) throw ConfigError("train_matcher: warm start has a different matcher kind");
    const DenseVector init = matcher_parameters(warm);
    if (init.size() != matcher_parameters(model).size()) {
      throw ConfigError("train_matcher: warm start parameter shape does not match the architecture");
    }
    if (model.kind() == MatcherKind::RelationMlp) {
      const auto& wp = std::get<RelationMlpParams>(warm.params());
      const auto& mp = std::get<RelationMlpParams>(model.params());
      if (wp.hidden() != mp.hidden() || wp.embed_dim != mp.embed_dim) {
        throw ConfigError("train_matcher: warm start relation shape mismatch");
      }
    }
    set_matcher_parameters(model, init);
  }
  model = MatcherModel(model.params(), config.label_smoothing, config.seed);

  const EncodedPairs data = encode_pairs(model, pairs, config.label_smoothing);
  DenseVector params = matcher_parameters(model);
  DenseVector grad;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double loss = matcher_loss(model, data, &grad);
    if (!std::isfinite(loss) || !grad.allFinite()) {
      std::ostringstream msg;
      msg << "train_matcher: non-finite loss at epoch " << epoch << " (loss=" << loss
          << ", lr=" << config.learning_rate << ", pairs=" << pairs.size() << ")";
      throw TrainingError(msg.str());
    }
    if (loss_history) loss_history->push_back(loss);
    params -= config.learning_rate * grad;
    set_matcher_parameters(model, params);
  }
  if (loss_history) loss_history->push_back(matcher_loss(model, data));
  return model;
}

MatcherModel pretrain_then_finetune(std::span<const PairExample> nli_pairs, std::span<const PairExample> intent_pairs,
                                    const TrainConfig& pretrain, const TrainConfig& finetune) {
  TrainConfig ft = finetune;
  if (!nli_pairs.empty()) {
    TrainConfig pt = pretrain;
    pt.warm_start.reset();
    ft.warm_start = train_matcher(nli_pairs, pt);
  }
  return train_matcher(intent_pairs, ft);
}

MatcherModel pretrain_then_finetune(std::span<const PairExample> nli_pairs, std::span<const PairExample> intent_pairs,
                                    const TrainConfig& config) {
  return pretrain_then_finetune(nli_pairs, intent_pairs, config, config);
}

std::vector<double> remote_score_pairs(const std::string& endpoint,
                                       std::span<const std::pair<std::string, std::string>> pairs) {
  if (pairs.empty()) return {};
  json arr = json::array();
  for (const auto& [u, e] : pairs) arr.push_back({u, e});
  const json resp = post_json(endpoint, "/score_pairs", json{{"pairs", std::move(arr)}});
  if (!resp.is_object() || !resp.contains("scores") || !resp["scores"].is_array()) {
    throw RemoteError(RemoteError::Kind::Protocol, "/score_pairs: response lacks a 'scores' array");
  }
  const auto& scores = resp["scores"];
  if (scores.size() != pairs.size()) {
    throw RemoteError(RemoteError::Kind::Protocol, "/score_pairs: expected " + std::to_string(pairs.size()) +
                                                       " scores, got " + std::to_string(scores.size()));
  }
  std::vector<double> out;
  out.reserve(scores.size());
  for (const auto& s : scores) {
    if (!s.is_number()) throw RemoteError(RemoteError::Kind::Protocol, "/score_pairs: non-numeric score");
    const double v = s.get<double>();
    if (!(v >= 0.0 && v <= 1.0)) {
      throw RemoteError(RemoteError::Kind::Range, "/score_pairs: score " + s.dump() + " outside [0, 1]");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace dnnc
