#include "dnnc/encoders.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "dnnc/remote.hpp"

namespace dnnc {

using nlohmann::json;

TokenList tokenize(std::string_view text) {
  TokenList out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || std::ispunct(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// ---------------------------------------------------------------------------
// TF-IDF

TfidfModel::TfidfModel(std::vector<std::string> tokens, std::vector<double> idf, std::size_t doc_count)
    : tokens_(std::move(tokens)), idf_(std::move(idf)), doc_count_(doc_count) {
  if (tokens_.size() != idf_.size()) throw ModelFormatError("tfidf: vocabulary and idf lengths differ");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!(idf_[i] > 0.0)) throw ModelFormatError("tfidf: idf values must be positive");
    if (!index_.emplace(tokens_[i], i).second) throw ModelFormatError("tfidf: duplicate token '" + tokens_[i] + "'");
  }
}

TfidfModel TfidfModel::fit(std::span<const std::string> texts) {
  if (texts.empty()) throw std::invalid_argument("tfidf_fit: empty collection");
  std::map<std::string, std::size_t> df;
  for (const auto& t : texts) {
    auto toks = tokenize(t);
    std::set<std::string> uniq(toks.begin(), toks.end());
    for (const auto& tok : uniq) ++df[tok];
  }
  const double d = static_cast<double>(texts.size());
  std::vector<std::string> tokens;
  std::vector<double> idf;
  for (const auto& [tok, count] : df) {
    tokens.push_back(tok);
    idf.push_back(std::log((1.0 + d) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return TfidfModel(std::move(tokens), std::move(idf), texts.size());
}

double TfidfModel::idf(std::string_view token) const {
  auto it = index_.find(token);
  return it == index_.end() ? 0.0 : idf_[it->second];
}

DenseVector TfidfModel::vectorize(std::string_view text) const {
  DenseVector v = DenseVector::Zero(static_cast<Eigen::Index>(tokens_.size()));
  for (const auto& tok : tokenize(text)) {
    auto it = index_.find(tok);
    if (it != index_.end()) v[static_cast<Eigen::Index>(it->second)] += 1.0;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) v[i] *= idf_[static_cast<std::size_t>(i)];
  }
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

json TfidfModel::to_json() const {
  return json{{"vocabulary", tokens_}, {"idf", idf_}, {"doc_count", doc_count_}};
}

TfidfModel TfidfModel::from_json(const json& j) {
  try {
    return TfidfModel(j.at("vocabulary").get<std::vector<std::string>>(), j.at("idf").get<std::vector<double>>(),
                      j.at("doc_count").get<std::size_t>());
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("tfidf: ") + e.what());
  }
}

TfidfModel tfidf_fit(std::span<const std::string> texts) { return TfidfModel::fit(texts); }

DenseVector tfidf_vector(const TfidfModel& model, std::string_view text) { return model.vectorize(text); }

// ---------------------------------------------------------------------------
// Hashing

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h) {
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

void add_feature(DenseVector& v, std::string_view feature, std::uint64_t seed) {
  const std::uint64_t h = mix64(fnv1a(feature, 0xcbf29ce484222325ULL ^ mix64(seed)));
  const auto bucket = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(v.size()));
  v[bucket] += (h >> 63) ? -1.0 : 1.0;
}

}  // namespace

DenseVector hashed_embed(std::string_view text, std::size_t d, std::uint64_t seed) {
  if (d == 0) throw std::invalid_argument("hashed_embed: d must be at least 1");
  DenseVector v = DenseVector::Zero(static_cast<Eigen::Index>(d));
  const auto toks = tokenize(text);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    add_feature(v, toks[i], seed);
    if (i + 1 < toks.size()) add_feature(v, toks[i] + '\x1f' + toks[i + 1], seed);
  }
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

double cosine(const DenseVector& a, const DenseVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Projection head

json ProjectionHead::to_json() const {
  return json{{"d_in", d_in()}, {"d_out", d_out()}, {"weight", matrix_to_json(weight)}};
}

ProjectionHead ProjectionHead::from_json(const json& j) {
  ProjectionHead h;
  try {
    h.weight = matrix_from_json(j.at("weight"));
    if (h.d_in() != j.at("d_in").get<std::size_t>() || h.d_out() != j.at("d_out").get<std::size_t>()) {
      throw ModelFormatError("projection head: declared shape does not match weight");
    }
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("projection head: ") + e.what());
  }
  return h;
}

ProjectionHead init_projection(std::size_t d_in, const ProjectionHyper& hyper) {
  const std::size_t d_out = hyper.d_out == 0 ? d_in : hyper.d_out;
  Rng rng(hyper.seed);
  ProjectionHead h;
  h.weight = Matrix::Identity(static_cast<Eigen::Index>(d_out), static_cast<Eigen::Index>(d_in));
  for (Eigen::Index r = 0; r < h.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < h.weight.cols(); ++c) {
      h.weight(r, c) += rng.uniform(-hyper.init_noise, hyper.init_noise);
    }
  }
  return h;
}

double projection_loss(const ProjectionHead& head, std::span<const EmbeddingPair> pairs, Matrix* grad) {
  if (pairs.empty()) throw std::invalid_argument("projection_loss: no pairs");
  if (grad) *grad = Matrix::Zero(head.weight.rows(), head.weight.cols());
  const double inv_n = 1.0 / static_cast<double>(pairs.size());
  double loss = 0.0;
  for (const auto& p : pairs) {
    const DenseVector a = head.weight * p.u;
    const DenseVector b = head.weight * p.e;
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
      loss += p.label * p.label * inv_n;
      continue;
    }
    const double c = a.dot(b) / (na * nb);
    const double r = c - p.label;
    loss += r * r * inv_n;
    if (grad) {
      const DenseVector dc_da = b / (na * nb) - (c / (na * na)) * a;
      const DenseVector dc_db = a / (na * nb) - (c / (nb * nb)) * b;
      const double s = 2.0 * r * inv_n;
      grad->noalias() += s * (dc_da * p.u.transpose() + dc_db * p.e.transpose());
    }
  }
  return loss;
}

ProjectionHead train_projection(std::span<const EmbeddingPair> pairs, const ProjectionHyper& hyper,
                                std::vector<double>* loss_history) {
  if (pairs.empty()) throw std::invalid_argument("train_projection: empty pair list");
  ProjectionHead head = init_projection(static_cast<std::size_t>(pairs.front().u.size()), hyper);
  Matrix grad;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    const double loss = projection_loss(head, pairs, &grad);
    if (!std::isfinite(loss)) {
      throw TrainingError("train_projection: non-finite loss at epoch " + std::to_string(epoch));
    }
    if (loss_history) loss_history->push_back(loss);
    head.weight -= hyper.learning_rate * grad;
  }
  if (loss_history) loss_history->push_back(projection_loss(head, pairs));
  return head;
}

// ---------------------------------------------------------------------------
// Embedders

std::vector<DenseVector> Embedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<DenseVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

HashedEmbedder::HashedEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim == 0) throw std::invalid_argument("HashedEmbedder: dim must be at least 1");
}

DenseVector HashedEmbedder::embed(std::string_view text) const { return hashed_embed(text, dim_, seed_); }

json HashedEmbedder::config() const { return json{{"type", "hashed"}, {"dim", dim_}, {"seed", seed_}}; }

json TfidfEmbedder::config() const {
  json j = model_.to_json();
  j["type"] = "tfidf";
  return j;
}

ProjectedEmbedder::ProjectedEmbedder(std::shared_ptr<const Embedder> base, ProjectionHead head)
    : base_(std::move(base)), head_(std::move(head)) {
  if (!base_) throw std::invalid_argument("ProjectedEmbedder: null base embedder");
}

std::vector<DenseVector> ProjectedEmbedder::embed_batch(std::span<const std::string> texts) const {
  auto out = base_->embed_batch(texts);
  for (auto& v : out) v = head_.apply(v);
  return out;
}

json ProjectedEmbedder::config() const {
  return json{{"type", "projected"}, {"base", base_->config()}, {"head", head_.to_json()}};
}

DenseVector RemoteEmbedder::embed(std::string_view text) const {
  const std::string t(text);
  return remote_embed(endpoint_, std::span<const std::string>(&t, 1)).front();
}

std::vector<DenseVector> RemoteEmbedder::embed_batch(std::span<const std::string> texts) const {
  return remote_embed(endpoint_, texts);
}

json RemoteEmbedder::config() const { return json{{"type", "remote"}, {"endpoint", endpoint_}}; }

std::vector<DenseVector> remote_embed(const std::string& endpoint, std::span<const std::string> texts) {
  if (texts.empty()) return {};
  const json resp = post_json(endpoint, "/embed", json{{"texts", std::vector<std::string>(texts.begin(), texts.end())}});
  if (!resp.is_object() || !resp.contains("embeddings") || !resp["embeddings"].is_array()) {
    throw RemoteError(RemoteError::Kind::Protocol, "/embed: response lacks an 'embeddings' array");
  }
  const auto& arr = resp["embeddings"];
  if (arr.size() != texts.size()) {
    throw RemoteError(RemoteError::Kind::Protocol, "/embed: expected " + std::to_string(texts.size()) +
                                                       " embeddings, got " + std::to_string(arr.size()));
  }
  std::vector<DenseVector> out;
  out.reserve(arr.size());
  for (const auto& row : arr) {
    DenseVector v;
    try {
      v = vector_from_json(row);
    } catch (const ParseError& e) {
      throw RemoteError(RemoteError::Kind::Protocol, std::string("/embed: ") + e.what());
    }
    if (!v.allFinite()) throw RemoteError(RemoteError::Kind::Range, "/embed: non-finite embedding value");
    if (!out.empty() && v.size() != out.front().size()) {
      throw RemoteError(RemoteError::Kind::Protocol, "/embed: inconsistent embedding dimensions");
    }
    if (v.size() == 0) throw RemoteError(RemoteError::Kind::Protocol, "/embed: empty embedding");
    out.push_back(std::move(v));
  }
  return out;
}

std::shared_ptr<const Embedder> make_embedder(const json& config) {
  try {
    const std::string type = config.at("type").get<std::string>();
    if (type == "hashed") {
      return std::make_shared<HashedEmbedder>(config.value("dim", std::size_t{256}),
                                              config.value("seed", std::uint64_t{0}));
    }
    if (type == "tfidf") return std::make_shared<TfidfEmbedder>(TfidfModel::from_json(config));
    if (type == "projected") {
      return std::make_shared<ProjectedEmbedder>(make_embedder(config.at("base")),
                                                 ProjectionHead::from_json(config.at("head")));
    }
    if (type == "remote") return std::make_shared<RemoteEmbedder>(config.at("endpoint").get<std::string>());
    throw ConfigError("unknown encoder type '" + type + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("encoder config: ") + e.what());
  }
}

}  // namespace dnnc
