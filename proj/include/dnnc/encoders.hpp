#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dnnc/common.hpp"

namespace dnnc {

using TokenList = std::vector<std::string>;

/// Lowercases and splits on whitespace and ASCII punctuation; punctuation is dropped.
TokenList tokenize(std::string_view text);

class TfidfModel {
 public:
  TfidfModel() = default;
  TfidfModel(std::vector<std::string> tokens, std::vector<double> idf, std::size_t doc_count);

  /// tf = raw count, idf = ln((1 + D) / (1 + df)) + 1, vocabulary in lexicographic order.
  static TfidfModel fit(std::span<const std::string> texts);

  /// L2-normalised tf-idf vector of length vocab_size(); unseen tokens are ignored.
  DenseVector vectorize(std::string_view text) const;

  std::size_t vocab_size() const { return tokens_.size(); }
  std::size_t doc_count() const { return doc_count_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<double>& idf() const { return idf_; }
  /// idf of `token`, or 0 when unseen.
  double idf(std::string_view token) const;

  nlohmann::json to_json() const;
  static TfidfModel from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> tokens_;
  std::vector<double> idf_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::size_t doc_count_ = 0;
};

TfidfModel tfidf_fit(std::span<const std::string> texts);
DenseVector tfidf_vector(const TfidfModel& model, std::string_view text);

/// Signed feature hashing of word unigrams and bigrams into d buckets, L2-normalised.
/// The empty text maps to the zero vector.
DenseVector hashed_embed(std::string_view text, std::size_t d, std::uint64_t seed = 0);

/// Cosine similarity clamped to [-1, 1]; 0 if either vector is zero.
double cosine(const DenseVector& a, const DenseVector& b);

/// Linear map applied on top of a base embedding.
struct ProjectionHead {
  Matrix weight;  // d_out x d_in

  std::size_t d_in() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t d_out() const { return static_cast<std::size_t>(weight.rows()); }
  DenseVector apply(const DenseVector& v) const { return weight * v; }

  nlohmann::json to_json() const;
  static ProjectionHead from_json(const nlohmann::json& j);
};

struct ProjectionHyper {
  double learning_rate = 1.0;
  std::size_t epochs = 40;
  std::uint64_t seed = 0;
  std::size_t d_out = 0;  // 0 keeps the base dimension
  double init_noise = 0.01;
};

/// Base embeddings of a pair with its target similarity (1 same intent, 0 otherwise).
struct EmbeddingPair {
  DenseVector u;
  DenseVector e;
  double label = 0.0;
};

/// Identity (on the leading square block) plus seeded uniform noise.
ProjectionHead init_projection(std::size_t d_in, const ProjectionHyper& hyper);

/// Mean of (cos(P u, P e) - y)^2; fills `grad` (same shape as the weight) when non-null.
double projection_loss(const ProjectionHead& head, std::span<const EmbeddingPair> pairs, Matrix* grad = nullptr);

/// Full-batch gradient descent on projection_loss. `loss_history` receives the
/// loss before each step and the final loss.
ProjectionHead train_projection(std::span<const EmbeddingPair> pairs, const ProjectionHyper& hyper,
                                std::vector<double>* loss_history = nullptr);

/// Text -> vector backend. Implementations are immutable and thread-safe.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual DenseVector embed(std::string_view text) const = 0;
  virtual std::vector<DenseVector> embed_batch(std::span<const std::string> texts) const;
  /// Round-trips through make_embedder.
  virtual nlohmann::json config() const = 0;
};

class HashedEmbedder final : public Embedder {
 public:
  explicit HashedEmbedder(std::size_t dim = 256, std::uint64_t seed = 0);
  DenseVector embed(std::string_view text) const override;
  nlohmann::json config() const override;
  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

class TfidfEmbedder final : public Embedder {
 public:
  explicit TfidfEmbedder(TfidfModel model) : model_(std::move(model)) {}
  DenseVector embed(std::string_view text) const override { return model_.vectorize(text); }
  nlohmann::json config() const override;
  const TfidfModel& model() const { return model_; }

 private:
  TfidfModel model_;
};

class ProjectedEmbedder final : public Embedder {
 public:
  ProjectedEmbedder(std::shared_ptr<const Embedder> base, ProjectionHead head);
  DenseVector embed(std::string_view text) const override { return head_.apply(base_->embed(text)); }
  std::vector<DenseVector> embed_batch(std::span<const std::string> texts) const override;
  nlohmann::json config() const override;

 private:
  std::shared_ptr<const Embedder> base_;
  ProjectionHead head_;
};

/// Client for POST {endpoint}/embed: {"texts": [...]} -> {"embeddings": [[...], ...]}.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(std::string endpoint) : endpoint_(std::move(endpoint)) {}
  DenseVector embed(std::string_view text) const override;
  std::vector<DenseVector> embed_batch(std::span<const std::string> texts) const override;
  nlohmann::json config() const override;

 private:
  std::string endpoint_;
};

std::vector<DenseVector> remote_embed(const std::string& endpoint, std::span<const std::string> texts);

/// Builds an embedder from its config(): {"type": "hashed" | "tfidf" | "projected" | "remote", ...}.
std::shared_ptr<const Embedder> make_embedder(const nlohmann::json& config);

}  // namespace dnnc
