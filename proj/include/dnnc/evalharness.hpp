#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dnnc/corpus.hpp"
#include "dnnc/encoders.hpp"
#include "dnnc/nnengine.hpp"

namespace dnnc {

/// In-domain accuracy and OOS recall/precision/F1 from raw counts.
struct MetricsReport {
  std::size_t c_in = 0;        // in-domain examples predicted with the right intent
  std::size_t n_in = 0;        // in-domain examples
  std::size_t c_oos = 0;       // OOS examples predicted OOS
  std::size_t n_oos = 0;       // OOS examples
  std::size_t n_pred_oos = 0;  // examples predicted OOS
  double acc_in = 0.0;
  double r_oos = 0.0;
  double p_oos = 0.0;  // 0 when nothing is predicted OOS
  double f1 = 0.0;     // 0 when p_oos + r_oos == 0
  double j_in_oos = 0.0;
  bool oos_defined = false;  // false when the set has no OOS examples

  nlohmann::json to_json() const;
};

MetricsReport metrics_from_counts(std::size_t c_in, std::size_t n_in, std::size_t c_oos, std::size_t n_oos,
                                  std::size_t n_pred_oos);

/// Gold labels use kOosLabel for out-of-scope examples.
MetricsReport compute_metrics(std::span<const Prediction> predictions, std::span<const std::string> golds);

double harmonic_mean(double a, double b);

/// (acc_in + r * r_oos) / (1 + r).
double joint_accuracy(const MetricsReport& metrics, double r);

/// Evaluation utterances with gold labels (kOosLabel for OOS).
struct EvalSet {
  std::vector<std::string> texts;
  std::vector<std::string> golds;

  std::size_t size() const { return texts.size(); }
  std::vector<bool> oos_flags() const;
};

EvalSet make_eval_set(const std::vector<LabeledExample>& in_domain, const std::vector<std::string>& oos);

using DecideFn = std::function<ScoredDecision(std::string_view)>;

std::vector<ScoredDecision> decide_all(const DecideFn& decide, std::span<const std::string> utterances);

/// {0.0, 0.1, ..., 1.0}.
std::vector<double> default_threshold_grid();

/// Re-applies only the threshold rule to cached decisions, once per grid value.
std::vector<MetricsReport> sweep_threshold(std::span<const ScoredDecision> decisions, std::span<const std::string> golds,
                                           std::span<const double> grid);
std::vector<MetricsReport> sweep_threshold(const DecideFn& decide, const EvalSet& devset, std::span<const double> grid);

struct SweepResult {
  std::vector<double> grid;
  std::vector<std::vector<MetricsReport>> runs;  // runs[run][threshold]
  std::vector<double> mean_j;
  double selected = 0.0;

  nlohmann::json to_json() const;
};

/// Argmax over the grid of the mean J across runs; ties go to the smaller T.
SweepResult select_threshold(std::vector<std::vector<MetricsReport>> runs, std::vector<double> grid);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single value
};

MetricSummary mean_stddev(std::span<const double> values);

/// Per-metric summary keyed by acc_in, r_oos, p_oos, f1, j_in_oos.
std::map<std::string, MetricSummary> aggregate_runs(std::span<const MetricsReport> reports);
nlohmann::json to_json(const std::map<std::string, MetricSummary>& summary);

struct LatencyReport {
  std::size_t batch_size = 1;
  std::size_t examples = 0;
  double ms_per_example = 0.0;
  std::vector<double> per_example_ms;
  std::map<std::size_t, std::size_t> scored_pair_counts;  // count -> frequency

  nlohmann::json to_json() const;
};

/// One warm-up pass, then each utterance timed on its own, sequentially.
LatencyReport bench_latency(const DecideFn& decide, std::span<const std::string> utterances);

/// CSV with header confidence,is_oos_gold,predicted_label; confidences use %.17g.
std::string export_confidence(std::span<const Prediction> predictions, const std::vector<bool>& gold_oos_flags);

/// CSV rows id,label,v0..v{d-1}.
std::string export_embeddings(const ExampleIndex& index);
/// Labels come from `golds` (kOosLabel marks OOS utterances).
std::string export_embeddings(const Embedder& encoder, std::span<const std::string> texts,
                              std::span<const std::string> golds);

std::string csv_escape(std::string_view field);

/// Markdown table: one row per method, one column per metric, "mean ± std" in percent.
std::string render_markdown(const std::vector<std::pair<std::string, std::map<std::string, MetricSummary>>>& rows);

}  // namespace dnnc
