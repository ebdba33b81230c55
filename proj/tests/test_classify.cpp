#include <gtest/gtest.h>

#include <cmath>

#include "dnnc/classify.hpp"
#include "test_support.hpp"

using namespace dnnc;

namespace {

/// Cross-entropy written directly from the definition.
double reference_loss(const Matrix& W, const DenseVector& b, const Matrix& H, const std::vector<std::size_t>& labels,
                      double eps) {
  const auto N = static_cast<double>(W.rows());
  double total = 0;
  for (Eigen::Index i = 0; i < H.rows(); ++i) {
    const DenseVector z = W * H.row(i).transpose() + b;
    double m = z.maxCoeff(), s = 0;
    for (Eigen::Index c = 0; c < z.size(); ++c) s += std::exp(z[c] - m);
    for (Eigen::Index c = 0; c < z.size(); ++c) {
      const double target = (static_cast<std::size_t>(c) == labels[i] ? 1.0 - eps : 0.0) + eps / N;
      total -= target * (z[c] - m - std::log(s));
    }
  }
  return total / static_cast<double>(H.rows());
}

struct Problem {
  Matrix W, H;
  DenseVector b;
  std::vector<std::size_t> labels;
};

Problem random_problem(Rng& rng, int N, int d, int n) {
  Problem p{Matrix(N, d), Matrix(n, d), DenseVector(N), {}};
  for (int i = 0; i < N * d; ++i) p.W.data()[i] = rng.uniform(-1, 1);
  for (int i = 0; i < n * d; ++i) p.H.data()[i] = rng.uniform(-1, 1);
  for (int i = 0; i < N; ++i) p.b[i] = rng.uniform(-1, 1);
  for (int i = 0; i < n; ++i) p.labels.push_back(rng.index(static_cast<std::size_t>(N)));
  return p;
}

}  // namespace

TEST(Softmax, SumsToOneAndStable) {
  DenseVector z(3);
  z << 1000, 1000, -1000;
  const auto p = softmax(z);
  EXPECT_NEAR(p.sum(), 1.0, 1e-15);
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_TRUE(p.allFinite());
}

TEST(SoftmaxLoss, MatchesReference) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto p = random_problem(rng, 4, 3, 7);
    for (double eps : {0.0, 0.1}) {
      EXPECT_NEAR(softmax_loss(p.W, p.b, p.H, p.labels, eps), reference_loss(p.W, p.b, p.H, p.labels, eps), 1e-12);
    }
  }
}

TEST(SoftmaxLoss, GradientMatchesFiniteDifferences) {
  Rng rng(11);
  for (int inst = 0; inst < 10; ++inst) {
    const auto p = random_problem(rng, 3, 4, 6);
    Matrix gW;
    DenseVector gb;
    softmax_loss(p.W, p.b, p.H, p.labels, 0.1, &gW, &gb);
    DenseVector analytic(gW.size() + gb.size()), x0(gW.size() + gb.size());
    analytic << Eigen::Map<const DenseVector>(gW.data(), gW.size()), gb;
    x0 << Eigen::Map<const DenseVector>(p.W.data(), p.W.size()), p.b;
    auto f = [&](const DenseVector& x) {
      const Matrix W = Eigen::Map<const Matrix>(x.data(), p.W.rows(), p.W.cols());
      const DenseVector b = x.tail(p.b.size());
      return softmax_loss(W, b, p.H, p.labels, 0.1);
    };
    EXPECT_LT(testkit::max_relative_error(analytic, testkit::numeric_gradient(f, x0)), 1e-4);
  }
}

TEST(TrainSoftmax, FitsSeparableSampleAndIsDeterministic) {
  Rng rng(5);
  const auto t = testkit::random_trainset(rng, 4, 3);
  const auto enc = std::make_shared<HashedEmbedder>(64);
  SoftmaxConfig cfg;
  std::vector<double> history;
  const auto m = train_softmax(t, enc, cfg, &history);
  EXPECT_LT(history.back(), history.front());
  for (const auto& e : t.examples) EXPECT_EQ(decide_softmax(m, e.text).label, e.intent) << e.text;
  const auto again = train_softmax(t, enc, cfg);
  EXPECT_EQ(again.W, m.W);
  EXPECT_EQ(again.b, m.b);
}

TEST(TrainSoftmax, LossNonIncreasingForSmallSteps) {
  Rng rng(6);
  const auto t = testkit::random_trainset(rng, 3, 3);
  SoftmaxConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 30;
  std::vector<double> history;
  train_softmax(t, std::make_shared<HashedEmbedder>(32), cfg, &history);
  for (std::size_t i = 1; i < history.size(); ++i) EXPECT_LE(history[i], history[i - 1] + 1e-15);
}

TEST(TrainSoftmax, RejectsBadInputs) {
  const auto enc = std::make_shared<HashedEmbedder>(8);
  const std::vector<LabeledExample> ex = {{"a", "x"}};
  EXPECT_THROW(train_softmax(ex, {"y"}, enc, SoftmaxConfig{}), std::invalid_argument);
  EXPECT_THROW(train_softmax(std::vector<LabeledExample>{}, {"x"}, enc, SoftmaxConfig{}), std::invalid_argument);
  SoftmaxConfig bad;
  bad.label_smoothing = 1.0;
  EXPECT_THROW(train_softmax(ex, {"x"}, enc, bad), ConfigError);
}

TEST(DecideSoftmax, ArgmaxTieGoesToLowestClass) {
  ClassifierModel m;
  m.intents = {"a", "b", "c"};
  m.encoder = std::make_shared<HashedEmbedder>(4);
  m.W = Matrix::Zero(3, 4);
  m.b = DenseVector::Zero(3);
  const auto d = decide_softmax(m, "anything");
  EXPECT_EQ(d.label, "a");
  EXPECT_NEAR(d.score, 1.0 / 3.0, 1e-15);
  EXPECT_FALSE(d.example_id);
  EXPECT_EQ(predict_softmax(m, "anything", 0.3).label, "a");
  EXPECT_EQ(predict_softmax(m, "anything", 0.34).label, "oos");
}

TEST(ClassifierJson, RoundTripAndKindCheck) {
  Rng rng(1);
  const auto t = testkit::random_trainset(rng, 2, 2);
  SoftmaxConfig cfg;
  cfg.epochs = 5;
  const auto m = train_softmax(t, std::make_shared<HashedEmbedder>(16), cfg);
  const auto back = ClassifierModel::from_json(nlohmann::json::parse(m.to_json().dump()));
  EXPECT_EQ(back.intents, m.intents);
  for (const auto& e : t.examples) EXPECT_NEAR((back.probabilities(e.text) - m.probabilities(e.text)).norm(), 0, 1e-15);
  auto j = m.to_json();
  j["kind"] = "feature-linear";
  EXPECT_THROW(ClassifierModel::from_json(j), ModelFormatError);
}
