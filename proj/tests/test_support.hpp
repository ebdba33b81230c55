#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dnnc/common.hpp"
#include "dnnc/corpus.hpp"
#include "dnnc/matchers.hpp"
#include "dnnc/nnengine.hpp"

namespace dnnc::testkit {

inline const std::vector<std::string>& toy_vocab() {
  static const std::vector<std::string> v = {"alpha", "bravo",  "charlie", "delta", "echo",   "foxtrot", "golf",
                                             "hotel", "india",  "juliet",  "kilo",  "lima",   "mike",    "november",
                                             "oscar", "papa",   "quebec",  "romeo", "sierra", "tango",   "uniform"};
  return v;
}

inline std::string random_text(Rng& rng, std::size_t min_words = 2, std::size_t max_words = 6) {
  const std::size_t n = min_words + rng.index(max_words - min_words + 1);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += toy_vocab()[rng.index(toy_vocab().size())];
  }
  return s;
}

/// Balanced toy trainset with unique texts.
inline FewShotTrainSet random_trainset(Rng& rng, std::size_t N, std::size_t K) {
  FewShotTrainSet t;
  t.K = K;
  std::set<std::string> used;
  for (std::size_t c = 0; c < N; ++c) {
    t.intents.push_back("intent_" + std::to_string(c));
    for (std::size_t i = 0; i < K; ++i) {
      std::string s;
      do {
        s = random_text(rng) + " " + std::to_string(c) + "_" + std::to_string(i);
      } while (!used.insert(s).second);
      t.examples.push_back({s, t.intents.back()});
    }
  }
  return t;
}

/// Synthetic trainset with exactly K examples per intent, labelled by position only.
inline FewShotTrainSet counting_trainset(std::size_t N, std::size_t K) {
  FewShotTrainSet t;
  t.K = K;
  for (std::size_t c = 0; c < N; ++c) {
    t.intents.push_back("c" + std::to_string(c));
    for (std::size_t i = 0; i < K; ++i) {
      t.examples.push_back({"x" + std::to_string(c) + "_" + std::to_string(i), t.intents.back()});
    }
  }
  return t;
}

/// Every ordered pair of distinct examples, labelled by intent equality.
inline std::pair<std::size_t, std::size_t> brute_pair_counts(const FewShotTrainSet& t) {
  std::size_t pos = 0, neg = 0;
  for (std::size_t a = 0; a < t.examples.size(); ++a) {
    for (std::size_t b = 0; b < t.examples.size(); ++b) {
      if (a == b) continue;
      (t.examples[a].intent == t.examples[b].intent ? pos : neg) += 1;
    }
  }
  return {pos, neg};
}

/// Scores looked up from a fixed table keyed by (u, e); quantised values make ties common.
class TableScorer final : public PairScorer {
 public:
  explicit TableScorer(std::uint64_t seed, int levels = 8) : seed_(seed), levels_(levels) {}
  double score(std::string_view u, std::string_view e) const override {
    std::uint64_t h = seed_ ^ 0x9e3779b97f4a7c15ULL;
    for (char ch : u) h = (h ^ static_cast<unsigned char>(ch)) * 0x100000001b3ULL;
    h ^= 0xff;
    for (char ch : e) h = (h ^ static_cast<unsigned char>(ch)) * 0x100000001b3ULL;
    h ^= h >> 29;
    return static_cast<double>(h % static_cast<std::uint64_t>(levels_ + 1)) / levels_;
  }

 private:
  std::uint64_t seed_;
  int levels_;
};

struct OraclePrediction {
  std::string label;
  double score;
  std::size_t id;
};

/// Scan in id order, replacing only on a strictly larger score.
inline OraclePrediction brute_dnnc(const PairScorer& s, const FewShotTrainSet& t, const std::string& u, double T) {
  std::size_t best = 0;
  double best_score = s.score(u, t.examples[0].text);
  for (std::size_t i = 1; i < t.examples.size(); ++i) {
    const double v = s.score(u, t.examples[i].text);
    if (v > best_score) {
      best = i;
      best_score = v;
    }
  }
  return {best_score > T ? t.examples[best].intent : std::string(kOosLabel), best_score, best};
}

inline double naive_cosine(const DenseVector& a, const DenseVector& b) {
  long double dot = 0, na = 0, nb = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return static_cast<double>(dot / std::sqrt(na * nb));
}

inline OraclePrediction brute_knn(const std::vector<DenseVector>& vecs, const FewShotTrainSet& t,
                                  const DenseVector& q, double T) {
  std::size_t best = 0;
  double best_score = naive_cosine(q, vecs[0]);
  for (std::size_t i = 1; i < vecs.size(); ++i) {
    const double v = naive_cosine(q, vecs[i]);
    if (v > best_score) {
      best = i;
      best_score = v;
    }
  }
  return {best_score > T ? t.examples[best].intent : std::string(kOosLabel), best_score, best};
}

/// Central difference of f at x along each coordinate.
inline DenseVector numeric_gradient(const std::function<double(const DenseVector&)>& f, DenseVector x,
                                    double h = 1e-5) {
  DenseVector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - n_i| / max(|a_i|, |n_i|, 1e-6).
inline double max_relative_error(const DenseVector& analytic, const DenseVector& numeric) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-6});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

inline std::filesystem::path fresh_temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dnnc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace dnnc::testkit
