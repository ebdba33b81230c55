// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dnnc/augment.hpp"
#include "dnnc/classify.hpp"
#include "dnnc/evalharness.hpp"
#include "dnnc/experiment.hpp"
#include "test_support.hpp"

using namespace dnnc;
namespace tk = dnnc::testkit;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome pair_count_law() {
  const auto t0 = Clock::now();
  std::size_t shapes = 0;
  for (std::size_t N = 1; N <= 10; ++N) {
    for (std::size_t K = 1; K <= 6; ++K) {
      const auto t = tk::counting_trainset(N, K);
      std::size_t pos = 0, neg = 0;
      for (const auto& p : synth_pairs(t)) (p.positive() ? pos : neg) += 1;
      const auto [bpos, bneg] = tk::brute_pair_counts(t);
      if (pos != N * K * (K - 1) || neg != K * K * N * (N - 1) || pos != bpos || neg != bneg) {
        return {false, "N=" + std::to_string(N) + " K=" + std::to_string(K) + " mismatch"};
      }
      ++shapes;
    }
  }
  const double secs = seconds_since(t0);
  return {secs < 5.0, std::to_string(shapes) + " shapes, " + fmt("%.3f s", secs)};
}

/// Reference (recall, precision, F1) triples in percent, one decimal each.
struct F1Row {
  double r, p, f1;
};
const std::vector<F1Row>& reference_f1_rows() {
  static const std::vector<F1Row> rows = {
      // 5-shot, banking / credit cards
      {93.3, 92.5, 92.9}, {93.3, 93.6, 93.4}, {91.0, 92.6, 91.8}, {94.1, 90.0, 92.0},
      {91.5, 91.4, 91.4}, {91.1, 89.5, 90.3}, {93.2, 96.2, 94.7}, {96.4, 95.8, 96.1},
      {94.7, 97.0, 95.9}, {97.7, 97.8, 97.8}, {93.3, 96.3, 94.8}, {93.9, 96.4, 95.1},
      // 5-shot, work / travel
      {94.8, 95.4, 95.1}, {96.1, 94.7, 95.4}, {95.2, 92.8, 94.0}, {94.6, 94.9, 94.7},
      {94.4, 93.1, 93.8}, {92.3, 95.9, 94.1}, {96.3, 96.7, 96.5}, {94.9, 94.9, 94.9},
      {96.7, 97.9, 97.3}, {96.4, 96.5, 96.5}, {95.2, 97.7, 96.5}, {92.6, 98.6, 95.5},
      // 10-shot, banking / credit cards
      {93.3, 94.4, 93.8}, {93.8, 93.9, 93.8}, {95.9, 93.3, 94.6}, {96.8, 92.3, 94.5},
      {94.9, 93.1, 94.0}, {89.3, 94.3, 91.7}, {92.1, 97.5, 94.7}, {94.8, 98.1, 96.4},
      {94.8, 97.5, 96.1}, {97.8, 97.8, 97.8}, {93.3, 96.3, 94.8}, {93.9, 96.4, 95.1},
      // 10-shot, work / travel
      {97.2, 94.5, 95.8}, {94.8, 96.8, 95.8}, {97.0, 94.7, 95.8}, {95.2, 96.9, 96.0},
      {97.4, 93.6, 95.5}, {96.1, 96.4, 96.2}, {94.1, 98.4, 96.2}, {84.8, 98.5, 91.1},
      {95.5, 99.0, 97.2}, {93.3, 98.3, 95.7}, {95.2, 97.7, 96.5}, {92.6, 98.6, 95.5},
  };
  return rows;
}

Outcome metrics_fidelity() {
  // Inputs carry +-0.05 rounding; the recomputed F1 range spans the corner values.
  constexpr double half_ulp = 0.05;
  std::size_t ref_ok = 0, point_ok = 0;
  std::string failures;
  for (const auto& row : reference_f1_rows()) {
    const double lo = 100.0 * harmonic_mean((row.r - half_ulp) / 100.0, (row.p - half_ulp) / 100.0);
    const double hi = 100.0 * harmonic_mean((row.r + half_ulp) / 100.0, (row.p + half_ulp) / 100.0);
    const double mid = 100.0 * harmonic_mean(row.r / 100.0, row.p / 100.0);
    if (hi >= row.f1 - half_ulp - 1e-9 && lo <= row.f1 + half_ulp + 1e-9) {
      ++ref_ok;
    } else {
      failures += " (" + fmt("%.1f", row.r) + "/" + fmt("%.1f", row.p) + ")";
    }
    if (std::abs(std::round(mid * 10.0) / 10.0 - row.f1) < 1e-9) ++point_ok;
  }

  Rng rng(20240601);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n_in = 1 + rng.index(5000), n_oos = 1 + rng.index(2000);
    const std::size_t c_in = rng.index(n_in + 1), c_oos = rng.index(n_oos + 1);
    const auto m = metrics_from_counts(c_in, n_in, c_oos, n_oos, c_oos + rng.index(100));
    const double count_form = static_cast<double>(c_in + c_oos) / static_cast<double>(n_in + n_oos);
    const double closed = joint_accuracy(m, static_cast<double>(n_oos) / static_cast<double>(n_in));
    worst = std::max(worst, std::abs(closed - count_form));
  }

  const double r_dev = 100.0 / 3000.0;
  const bool r_ok = std::abs(r_dev - 0.0333) < 5e-5;
  const std::size_t n = reference_f1_rows().size();
  const bool pass = ref_ok == n && worst <= 1e-12 && r_ok;
  return {pass, std::to_string(ref_ok) + "/" + std::to_string(n) + " reference F1 within rounding (" +
                    std::to_string(point_ok) + " exact at point values)" + failures +
                    "; joint identity max err " + fmt("%.2e", worst) + " over 1000; r=" + fmt("%.4f", r_dev)};
}

Outcome threshold_monotonicity() {
  Rng rng(4242);
  const auto grid = default_threshold_grid();
  for (int set = 0; set < 200; ++set) {
    const std::size_t n = 1 + rng.index(200);
    std::vector<ScoredDecision> d;
    std::vector<std::string> golds;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string label = "i" + std::to_string(rng.index(4));
      d.push_back({label, rng.bernoulli(0.1) ? static_cast<double>(rng.index(11)) / 10.0 : rng.uniform(), i, 1});
      golds.push_back(rng.bernoulli(0.3) ? std::string(kOosLabel) : "i" + std::to_string(rng.index(4)));
    }
    const auto s = sweep_threshold(d, golds, grid);
    for (std::size_t t = 1; t < s.size(); ++t) {
      if (s[t].r_oos < s[t - 1].r_oos || s[t].acc_in > s[t - 1].acc_in) {
        return {false, "set " + std::to_string(set) + " violates monotonicity at T=" + fmt("%.1f", grid[t])};
      }
    }
  }
  return {true, "200 sets x 11 thresholds"};
}

Outcome joint_equals_full() {
  Rng rng(777);
  const HashedEmbedder enc(24, 3);
  std::size_t checked = 0, count_checked = 0;
  for (int q = 0; q < 500; ++q) {
    const auto t = tk::random_trainset(rng, 1 + rng.index(6), 1 + rng.index(5));
    const auto index = build_index(t, enc);
    const tk::TableScorer scorer(static_cast<std::uint64_t>(q), 5);
    const std::string u = tk::random_text(rng);
    const double T = static_cast<double>(rng.index(11)) / 10.0;
    if (!(joint_predict(index, enc, scorer, u, t.size(), T) == dnnc_predict(scorer, t, u, T))) {
      return {false, "mismatch on input " + std::to_string(q)};
    }
    ++checked;
    if (t.size() > 1) {
      const std::size_t k = 1 + rng.index(t.size() - 1);
      if (joint_predict(index, enc, scorer, u, k, T).scored_pair_count != k) {
        return {false, "scored_pair_count != k on input " + std::to_string(q)};
      }
      ++count_checked;
    }
  }
  return {true, std::to_string(checked) + " inputs bit-identical; " + std::to_string(count_checked) +
                    " cost checks with k < N*K"};
}

Outcome oracle_equivalence() {
  Rng rng(9001);
  const HashedEmbedder enc(20, 5);
  for (int q = 0; q < 100; ++q) {
    const auto t = tk::random_trainset(rng, 1 + rng.index(6), 1 + rng.index(5));
    const std::string u = q % 7 == 0 ? t.examples[rng.index(t.size())].text : tk::random_text(rng);
    const double T = static_cast<double>(rng.index(11)) / 10.0;

    const tk::TableScorer scorer(static_cast<std::uint64_t>(q) + 17, 6);
    const auto od = tk::brute_dnnc(scorer, t, u, T);
    const auto pd = dnnc_predict(scorer, t, u, T);
    const bool dnnc_ok = pd.label == od.label && pd.confidence == od.score &&
                         (pd.is_oos() || pd.matched_example_id == std::optional<std::size_t>(od.id));

    std::vector<DenseVector> vecs;
    for (const auto& e : t.examples) vecs.push_back(enc.embed(e.text));
    const auto ok = tk::brute_knn(vecs, t, enc.embed(u), T);
    const auto pk = knn_predict(build_index(t, enc), enc, u, T);
    const bool knn_ok = pk.label == ok.label && std::abs(pk.confidence - std::clamp(ok.score, 0.0, 1.0)) < 1e-12 &&
                        (pk.is_oos() || pk.matched_example_id == std::optional<std::size_t>(ok.id));
    if (!dnnc_ok || !knn_ok) return {false, std::string(dnnc_ok ? "knn" : "dnnc") + " disagrees on query " +
                                                std::to_string(q)};
  }
  return {true, "100 queries, dnnc and knn"};
}

// ---------------------------------------------------------------------------
// Gradient checks

double check_matcher_gradient(MatcherKind kind, std::uint64_t inst) {
  Rng rng(inst * 31 + 7);
  const auto t = tk::random_trainset(rng, 2 + rng.index(2), 2 + rng.index(2));
  const auto pairs = synth_pairs(t);
  MatcherArch arch;
  arch.kind = kind;
  arch.hashed_dim = 32;
  arch.relation_dim = 6;
  arch.hidden = 4;
  MatcherModel m = init_matcher(arch, pairs, inst);
  DenseVector x0 = matcher_parameters(m);
  for (Eigen::Index i = 0; i < x0.size(); ++i) x0[i] += rng.uniform(-1.0, 1.0);
  set_matcher_parameters(m, x0);
  const auto data = encode_pairs(m, pairs, 0.1);
  DenseVector grad;
  matcher_loss(m, data, &grad);
  const auto numeric = tk::numeric_gradient(
      [&](const DenseVector& x) {
        MatcherModel mm = m;
        set_matcher_parameters(mm, x);
        return matcher_loss(mm, data);
      },
      x0);
  return tk::max_relative_error(grad, numeric);
}

double check_softmax_gradient(std::uint64_t inst) {
  Rng rng(inst * 13 + 1);
  const int N = 2 + static_cast<int>(rng.index(3)), d = 2 + static_cast<int>(rng.index(4));
  const int n = 3 + static_cast<int>(rng.index(6));
  Matrix W(N, d), H(n, d);
  DenseVector b(N);
  for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = rng.uniform(-1, 1);
  for (Eigen::Index i = 0; i < H.size(); ++i) H.data()[i] = rng.uniform(-1, 1);
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = rng.uniform(-1, 1);
  std::vector<std::size_t> labels;
  for (int i = 0; i < n; ++i) labels.push_back(rng.index(static_cast<std::size_t>(N)));
  Matrix gW;
  DenseVector gb;
  softmax_loss(W, b, H, labels, 0.1, &gW, &gb);
  DenseVector analytic(gW.size() + gb.size()), x0(W.size() + b.size());
  analytic << Eigen::Map<const DenseVector>(gW.data(), gW.size()), gb;
  x0 << Eigen::Map<const DenseVector>(W.data(), W.size()), b;
  const auto numeric = tk::numeric_gradient(
      [&](const DenseVector& x) {
        const Matrix Wx = Eigen::Map<const Matrix>(x.data(), N, d);
        return softmax_loss(Wx, x.tail(N), H, labels, 0.1);
      },
      x0);
  return tk::max_relative_error(analytic, numeric);
}

double check_projection_gradient(std::uint64_t inst) {
  Rng rng(inst * 101 + 3);
  const int d = 3 + static_cast<int>(rng.index(4));
  std::vector<EmbeddingPair> pairs;
  for (int i = 0; i < 6; ++i) {
    EmbeddingPair p{DenseVector(d), DenseVector(d), rng.bernoulli(0.5) ? 1.0 : 0.0};
    for (int k = 0; k < d; ++k) {
      p.u[k] = rng.uniform(-1, 1);
      p.e[k] = rng.uniform(-1, 1);
    }
    pairs.push_back(std::move(p));
  }
  ProjectionHyper h;
  h.seed = inst;
  h.init_noise = 0.5;
  h.d_out = static_cast<std::size_t>(d - 1);
  const ProjectionHead head = init_projection(static_cast<std::size_t>(d), h);
  Matrix grad;
  projection_loss(head, pairs, &grad);
  const DenseVector analytic = Eigen::Map<const DenseVector>(grad.data(), grad.size());
  const DenseVector x0 = Eigen::Map<const DenseVector>(head.weight.data(), head.weight.size());
  const auto numeric = tk::numeric_gradient(
      [&](const DenseVector& x) {
        ProjectionHead hh{Eigen::Map<const Matrix>(x.data(), head.weight.rows(), head.weight.cols())};
        return projection_loss(hh, pairs);
      },
      x0);
  return tk::max_relative_error(analytic, numeric);
}

Outcome gradient_checks() {
  const std::vector<std::pair<std::string, std::function<double(std::uint64_t)>>> models = {
      {"feature-linear", [](std::uint64_t i) { return check_matcher_gradient(MatcherKind::FeatureLinear, i); }},
      {"relation-mlp", [](std::uint64_t i) { return check_matcher_gradient(MatcherKind::RelationMlp, i); }},
      {"softmax", check_softmax_gradient},
      {"projection", check_projection_gradient},
  };
  bool pass = true;
  std::string detail;
  for (const auto& [name, check] : models) {
    double worst = 0.0;
    for (std::uint64_t inst = 0; inst < 20; ++inst) worst = std::max(worst, check(inst));
    pass = pass && worst < 1e-4;
    detail += (detail.empty() ? "" : ", ") + name + " " + fmt("%.1e", worst);
  }
  return {pass, "max rel err over 20 instances: " + detail};
}

// ---------------------------------------------------------------------------

Outcome synthetic_end_to_end() {
  const auto t0 = Clock::now();
  RunConfig c;
  c.method = Method::DnncScratch;
  c.K = 5;
  c.seeds = {0, 1, 2, 3, 4};
  c.validate();
  const auto r = run_experiment(c);
  const double secs = seconds_since(t0);
  const double acc = r.aggregate.at("acc_in").mean, j = r.aggregate.at("j_in_oos").mean;
  const bool pass = acc >= 0.90 && j >= 1.5 && secs < 60.0;
  return {pass, "dnnc-scratch K=5, 5 runs, T*=" + fmt("%.1f", r.sweep.selected) + " acc_in=" + fmt("%.4f", acc) +
                    " J=" + fmt("%.4f", j) + ", " + fmt("%.2f s", secs)};
}

Outcome eda_contract() {
  const auto lexicon = SynonymLexicon::from_json(read_file(DNNC_TEST_DATA "/synonyms.json"));
  const auto corpus = make_synthetic_corpus();
  std::vector<std::string> inputs;
  for (const auto& e : corpus.train) inputs.push_back(e.text);
  Rng rng(55);
  for (int i = 0; i < 300; ++i) inputs.push_back(tk::random_text(rng, 1, 12));

  std::size_t checked = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    EdaParams p;
    p.seed = i;
    p.edit_prob = 0.05 + 0.9 * rng.uniform();
    const auto out = eda_augment(inputs[i], p, lexicon);
    if (out.size() != 4) return {false, "expected 4 outputs for '" + inputs[i] + "'"};
    for (const auto& o : out) {
      if (split_words(o).empty()) return {false, "empty augmentation of '" + inputs[i] + "'"};
    }
    auto a = split_words(inputs[i]), b = split_words(out[2]);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) return {false, "swap output is not a permutation of '" + inputs[i] + "'"};
    ++checked;
  }
  return {true, std::to_string(checked) + " inputs, 4 non-empty outputs each, swaps are permutations"};
}

Outcome determinism() {
  const auto dir = tk::fresh_temp_dir("acceptance_determinism");
  std::string detail;
  for (Method m : {Method::DnncScratch, Method::Dnnc, Method::EmbKnn, Method::ClassifierEda}) {
    RunConfig c;
    c.method = m;
    c.K = 3;
    c.seeds = {0, 1};
    c.nli_path = DNNC_TEST_DATA "/nli_sample.jsonl";
    c.lexicon_path = DNNC_TEST_DATA "/synonyms.json";
    c.matcher_train.epochs = 100;
    c.softmax.epochs = 100;
    std::string bytes[2];
    for (int rep = 0; rep < 2; ++rep) {
      c.output_dir = (dir / (std::string(to_string(m)) + std::to_string(rep))).string();
      run_experiment(c);
      bytes[rep] = read_file((std::filesystem::path(c.output_dir) / "metrics.json").string());
    }
    if (bytes[0] != bytes[1] || bytes[0].empty()) return {false, std::string(to_string(m)) + " differs across re-runs"};
    detail += (detail.empty() ? "" : ", ") + std::string(to_string(m));
  }
  std::filesystem::remove_all(dir);
  return {true, "metrics.json byte-identical on re-run: " + detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"pair-count-law", pair_count_law},
      {"metrics-fidelity", metrics_fidelity},
      {"threshold-monotonicity", threshold_monotonicity},
      {"joint-equals-full", joint_equals_full},
      {"oracle-equivalence", oracle_equivalence},
      {"gradient-checks", gradient_checks},
      {"synthetic-end-to-end", synthetic_end_to_end},
      {"eda-contract", eda_contract},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
