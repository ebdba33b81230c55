#include "dnnc/nnengine.hpp"

#include <algorithm>

#include "dnnc/matchers.hpp"

namespace dnnc {

using nlohmann::json;

namespace {

struct Candidate {
  std::size_t id;
  const std::string* intent;
  const std::string* text;
};

ScoredDecision decide_over(const PairScorer& matcher, std::string_view utterance, std::span<const Candidate> cands) {
  if (cands.empty()) throw std::invalid_argument("nearest-neighbour decision over an empty example set");
  std::vector<std::string> texts;
  texts.reserve(cands.size());
  for (const auto& c : cands) texts.push_back(*c.text);
  const std::vector<double> scores = matcher.score_many(utterance, texts);
  if (scores.size() != cands.size()) throw Error("matcher returned the wrong number of scores");

  std::size_t best = 0;
  for (std::size_t i = 1; i < cands.size(); ++i) {
    if (scores[i] > scores[best] || (scores[i] == scores[best] && cands[i].id < cands[best].id)) best = i;
  }
  return ScoredDecision{*cands[best].intent, scores[best], cands[best].id, cands.size()};
}

}  // namespace

Prediction apply_threshold(const ScoredDecision& decision, double T) {
  Prediction p;
  p.confidence = std::clamp(decision.score, 0.0, 1.0);
  p.scored_pair_count = decision.scored_pair_count;
  if (decision.score > T) {
    p.label = decision.label;
    p.matched_example_id = decision.example_id;
  } else {
    p.label = std::string(kOosLabel);
  }
  return p;
}

json ExampleIndex::to_json() const {
  json arr = json::array();
  for (const auto& e : entries) {
    arr.push_back(json{{"id", e.id}, {"intent", e.intent}, {"text", e.text}, {"vector", vector_to_json(e.vector)}});
  }
  return json{{"entries", std::move(arr)}, {"encoder_config", encoder_config}, {"metric", metric}};
}

ExampleIndex ExampleIndex::from_json(const json& j) {
  ExampleIndex idx;
  try {
    idx.encoder_config = j.at("encoder_config");
    idx.metric = j.at("metric").get<std::string>();
    for (const auto& e : j.at("entries")) {
      idx.entries.push_back(IndexEntry{e.at("id").get<std::size_t>(), e.at("intent").get<std::string>(),
                                       e.at("text").get<std::string>(), vector_from_json(e.at("vector"))});
    }
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("index: ") + e.what());
  }
  if (idx.metric != "cosine") throw ModelFormatError("index: unsupported metric '" + idx.metric + "'");
  for (const auto& e : idx.entries) {
    if (e.vector.size() != idx.entries.front().vector.size()) throw ModelFormatError("index: ragged vectors");
  }
  return idx;
}

ExampleIndex build_index(const FewShotTrainSet& trainset, const Embedder& encoder) {
  if (trainset.examples.empty()) throw std::invalid_argument("build_index: empty training set");
  std::vector<std::string> texts;
  texts.reserve(trainset.size());
  for (const auto& ex : trainset.examples) texts.push_back(ex.text);
  auto vectors = encoder.embed_batch(texts);
  if (vectors.size() != texts.size()) throw Error("build_index: encoder returned the wrong number of vectors");

  ExampleIndex idx;
  idx.encoder_config = encoder.config();
  idx.entries.reserve(texts.size());
  const auto dim = vectors.front().size();
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (vectors[i].size() != dim) throw Error("build_index: encoder dimension is not uniform");
    idx.entries.push_back(IndexEntry{i, trainset.examples[i].intent, trainset.examples[i].text, std::move(vectors[i])});
  }
  return idx;
}

ScoredDecision decide_dnnc(const PairScorer& matcher, const FewShotTrainSet& trainset, std::string_view utterance) {
  std::vector<Candidate> cands;
  cands.reserve(trainset.size());
  for (std::size_t i = 0; i < trainset.size(); ++i) {
    cands.push_back({i, &trainset.examples[i].intent, &trainset.examples[i].text});
  }
  return decide_over(matcher, utterance, cands);
}

Prediction dnnc_predict(const PairScorer& matcher, const FewShotTrainSet& trainset, std::string_view utterance,
                        double T) {
  return apply_threshold(decide_dnnc(matcher, trainset, utterance), T);
}

ScoredDecision decide_knn(const ExampleIndex& index, const DenseVector& query) {
  if (index.entries.empty()) throw std::invalid_argument("knn: empty index");
  std::size_t best = 0;
  double best_score = cosine(query, index.entries[0].vector);
  for (std::size_t i = 1; i < index.entries.size(); ++i) {
    const double s = cosine(query, index.entries[i].vector);
    if (s > best_score || (s == best_score && index.entries[i].id < index.entries[best].id)) {
      best = i;
      best_score = s;
    }
  }
  const auto& e = index.entries[best];
  return ScoredDecision{e.intent, best_score, e.id, 0};
}

ScoredDecision decide_knn(const ExampleIndex& index, const Embedder& encoder, std::string_view utterance) {
  return decide_knn(index, encoder.embed(utterance));
}

Prediction knn_predict(const ExampleIndex& index, const Embedder& encoder, std::string_view utterance, double T) {
  return apply_threshold(decide_knn(index, encoder, utterance), T);
}

std::vector<RankedEntry> retrieve_topk(const ExampleIndex& index, const DenseVector& query, std::size_t k) {
  if (k == 0) throw std::invalid_argument("retrieve_topk: k must be at least 1");
  std::vector<RankedEntry> ranked;
  ranked.reserve(index.entries.size());
  for (std::size_t i = 0; i < index.entries.size(); ++i) {
    ranked.push_back({i, index.entries[i].id, cosine(query, index.entries[i].vector)});
  }
  auto before = [](const RankedEntry& a, const RankedEntry& b) {
    return a.score > b.score || (a.score == b.score && a.id < b.id);
  };
  const std::size_t take = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end(), before);
  ranked.resize(take);
  return ranked;
}

std::vector<RankedEntry> retrieve_topk(const ExampleIndex& index, const Embedder& encoder, std::string_view utterance,
                                       std::size_t k) {
  return retrieve_topk(index, encoder.embed(utterance), k);
}

ScoredDecision decide_joint(const ExampleIndex& index, const Embedder& encoder, const PairScorer& matcher,
                            std::string_view utterance, std::size_t k) {
  const auto top = retrieve_topk(index, encoder, utterance, k);
  std::vector<Candidate> cands;
  cands.reserve(top.size());
  for (const auto& r : top) {
    const auto& e = index.entries[r.position];
    cands.push_back({e.id, &e.intent, &e.text});
  }
  return decide_over(matcher, utterance, cands);
}

Prediction joint_predict(const ExampleIndex& index, const Embedder& encoder, const PairScorer& matcher,
                         std::string_view utterance, std::size_t k, double T) {
  return apply_threshold(decide_joint(index, encoder, matcher, utterance, k), T);
}

}  // namespace dnnc
