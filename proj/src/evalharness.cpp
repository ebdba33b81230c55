#include "dnnc/evalharness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dnnc {

using nlohmann::json;

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json MetricsReport::to_json() const {
  return json{{"c_in", c_in},   {"n_in", n_in},     {"c_oos", c_oos},   {"n_oos", n_oos},
              {"n_pred_oos", n_pred_oos},           {"acc_in", acc_in}, {"r_oos", r_oos},
              {"p_oos", p_oos}, {"f1", f1},         {"j_in_oos", j_in_oos},
              {"oos_defined", oos_defined}};
}

double harmonic_mean(double a, double b) {
  return a + b == 0.0 ? 0.0 : 2.0 * a * b / (a + b);
}

MetricsReport metrics_from_counts(std::size_t c_in, std::size_t n_in, std::size_t c_oos, std::size_t n_oos,
                                  std::size_t n_pred_oos) {
  if (c_in > n_in || c_oos > n_oos || c_oos > n_pred_oos) {
    throw std::invalid_argument("metrics_from_counts: inconsistent counts");
  }
  MetricsReport m;
  m.c_in = c_in;
  m.n_in = n_in;
  m.c_oos = c_oos;
  m.n_oos = n_oos;
  m.n_pred_oos = n_pred_oos;
  m.acc_in = ratio(c_in, n_in);
  m.r_oos = ratio(c_oos, n_oos);
  m.p_oos = ratio(c_oos, n_pred_oos);
  m.f1 = harmonic_mean(m.p_oos, m.r_oos);
  m.j_in_oos = m.acc_in + m.r_oos;
  m.oos_defined = n_oos > 0;
  return m;
}

MetricsReport compute_metrics(std::span<const Prediction> predictions, std::span<const std::string> golds) {
  if (predictions.size() != golds.size()) {
    throw std::invalid_argument("compute_metrics: " + std::to_string(predictions.size()) + " predictions for " +
                                std::to_string(golds.size()) + " gold labels");
  }
  std::size_t c_in = 0, n_in = 0, c_oos = 0, n_oos = 0, n_pred_oos = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool pred_oos = predictions[i].is_oos();
    n_pred_oos += pred_oos;
    if (golds[i] == kOosLabel) {
      ++n_oos;
      c_oos += pred_oos;
    } else {
      ++n_in;
      c_in += predictions[i].label == golds[i];
    }
  }
  return metrics_from_counts(c_in, n_in, c_oos, n_oos, n_pred_oos);
}

double joint_accuracy(const MetricsReport& metrics, double r) {
  if (!(r >= 0.0)) throw std::invalid_argument("joint_accuracy: r must be non-negative");
  return (metrics.acc_in + r * metrics.r_oos) / (1.0 + r);
}

std::vector<bool> EvalSet::oos_flags() const {
  std::vector<bool> flags;
  flags.reserve(golds.size());
  for (const auto& g : golds) flags.push_back(g == kOosLabel);
  return flags;
}

EvalSet make_eval_set(const std::vector<LabeledExample>& in_domain, const std::vector<std::string>& oos) {
  EvalSet s;
  s.texts.reserve(in_domain.size() + oos.size());
  s.golds.reserve(in_domain.size() + oos.size());
  for (const auto& ex : in_domain) {
    s.texts.push_back(ex.text);
    s.golds.push_back(ex.intent);
  }
  for (const auto& t : oos) {
    s.texts.push_back(t);
    s.golds.emplace_back(kOosLabel);
  }
  return s;
}

std::vector<ScoredDecision> decide_all(const DecideFn& decide, std::span<const std::string> utterances) {
  std::vector<ScoredDecision> out;
  out.reserve(utterances.size());
  for (const auto& u : utterances) out.push_back(decide(u));
  return out;
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
  return grid;
}

std::vector<MetricsReport> sweep_threshold(std::span<const ScoredDecision> decisions, std::span<const std::string> golds,
                                           std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("sweep_threshold: empty grid");
  std::vector<MetricsReport> out;
  out.reserve(grid.size());
  std::vector<Prediction> preds(decisions.size());
  for (double T : grid) {
    for (std::size_t i = 0; i < decisions.size(); ++i) preds[i] = apply_threshold(decisions[i], T);
    out.push_back(compute_metrics(preds, golds));
  }
  return out;
}

std::vector<MetricsReport> sweep_threshold(const DecideFn& decide, const EvalSet& devset, std::span<const double> grid) {
  const auto decisions = decide_all(decide, devset.texts);
  return sweep_threshold(decisions, devset.golds, grid);
}

json SweepResult::to_json() const {
  json runs_j = json::array();
  for (const auto& run : runs) {
    json per_t = json::array();
    for (const auto& m : run) per_t.push_back(m.to_json());
    runs_j.push_back(std::move(per_t));
  }
  return json{{"grid", grid}, {"mean_j", mean_j}, {"selected", selected}, {"runs", std::move(runs_j)}};
}

SweepResult select_threshold(std::vector<std::vector<MetricsReport>> runs, std::vector<double> grid) {
  if (grid.empty()) throw std::invalid_argument("select_threshold: empty grid");
  if (runs.empty()) throw std::invalid_argument("select_threshold: no runs");
  if (!std::is_sorted(grid.begin(), grid.end())) throw std::invalid_argument("select_threshold: grid not ascending");
  for (const auto& r : runs) {
    if (r.size() != grid.size()) throw std::invalid_argument("select_threshold: run does not cover the grid");
  }
  SweepResult s;
  s.mean_j.assign(grid.size(), 0.0);
  for (std::size_t t = 0; t < grid.size(); ++t) {
    double sum = 0.0;
    for (const auto& r : runs) sum += r[t].j_in_oos;
    s.mean_j[t] = sum / static_cast<double>(runs.size());
  }
  std::size_t best = 0;
  for (std::size_t t = 1; t < grid.size(); ++t) {
    if (s.mean_j[t] > s.mean_j[best]) best = t;
  }
  s.selected = grid[best];
  s.grid = std::move(grid);
  s.runs = std::move(runs);
  return s;
}

MetricSummary mean_stddev(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_stddev: no values");
  // Deviations are taken from the first value so identical inputs give exactly zero spread.
  const double n = static_cast<double>(values.size());
  const double origin = values.front();
  double shift = 0.0;
  for (double v : values) shift += v - origin;
  shift /= n;
  if (values.size() == 1) return {origin, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - origin - shift) * (v - origin - shift);
  return {origin + shift, std::sqrt(ss / (n - 1.0))};
}

std::map<std::string, MetricSummary> aggregate_runs(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate_runs: no reports");
  const std::pair<const char*, double MetricsReport::*> fields[] = {
      {"acc_in", &MetricsReport::acc_in}, {"r_oos", &MetricsReport::r_oos}, {"p_oos", &MetricsReport::p_oos},
      {"f1", &MetricsReport::f1},         {"j_in_oos", &MetricsReport::j_in_oos}};
  std::map<std::string, MetricSummary> out;
  std::vector<double> vals(reports.size());
  for (const auto& [name, member] : fields) {
    for (std::size_t i = 0; i < reports.size(); ++i) vals[i] = reports[i].*member;
    out[name] = mean_stddev(vals);
  }
  return out;
}

json to_json(const std::map<std::string, MetricSummary>& summary) {
  json j = json::object();
  for (const auto& [name, s] : summary) j[name] = json{{"mean", s.mean}, {"std", s.stddev}};
  return j;
}

json LatencyReport::to_json() const {
  json counts = json::object();
  for (const auto& [c, n] : scored_pair_counts) counts[std::to_string(c)] = n;
  return json{{"batch_size", batch_size},
              {"examples", examples},
              {"ms_per_example", ms_per_example},
              {"scored_pair_counts", std::move(counts)}};
}

LatencyReport bench_latency(const DecideFn& decide, std::span<const std::string> utterances) {
  if (utterances.empty()) throw std::invalid_argument("bench_latency: no examples");
  for (const auto& u : utterances) (void)decide(u);

  using clock = std::chrono::steady_clock;
  LatencyReport rep;
  rep.examples = utterances.size();
  rep.per_example_ms.reserve(utterances.size());
  double total = 0.0;
  for (const auto& u : utterances) {
    const auto t0 = clock::now();
    const ScoredDecision d = decide(u);
    const auto t1 = clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    rep.per_example_ms.push_back(ms);
    total += ms;
    ++rep.scored_pair_counts[d.scored_pair_count];
  }
  rep.ms_per_example = total / static_cast<double>(utterances.size());
  return rep;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string export_confidence(std::span<const Prediction> predictions, const std::vector<bool>& gold_oos_flags) {
  if (predictions.size() != gold_oos_flags.size()) {
    throw std::invalid_argument("export_confidence: prediction and gold counts differ");
  }
  std::ostringstream out;
  out << "confidence,is_oos_gold,predicted_label\n";
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    out << fmt_g17(predictions[i].confidence) << ',' << (gold_oos_flags[i] ? 1 : 0) << ','
        << csv_escape(predictions[i].label) << '\n';
  }
  return out.str();
}

namespace {

void write_embedding_header(std::ostringstream& out, std::size_t dim) {
  out << "id,label";
  for (std::size_t i = 0; i < dim; ++i) out << ",v" << i;
  out << '\n';
}

void write_embedding_row(std::ostringstream& out, std::size_t id, std::string_view label, const DenseVector& v) {
  out << id << ',' << csv_escape(label);
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << fmt_g17(v[i]);
  out << '\n';
}

}  // namespace

std::string export_embeddings(const ExampleIndex& index) {
  std::ostringstream out;
  const std::size_t dim = index.entries.empty() ? 0 : static_cast<std::size_t>(index.entries.front().vector.size());
  write_embedding_header(out, dim);
  for (const auto& e : index.entries) write_embedding_row(out, e.id, e.intent, e.vector);
  return out.str();
}

std::string export_embeddings(const Embedder& encoder, std::span<const std::string> texts,
                              std::span<const std::string> golds) {
  if (texts.size() != golds.size()) throw std::invalid_argument("export_embeddings: text and label counts differ");
  const auto vecs = encoder.embed_batch(std::vector<std::string>(texts.begin(), texts.end()));
  std::ostringstream out;
  write_embedding_header(out, vecs.empty() ? 0 : static_cast<std::size_t>(vecs.front().size()));
  for (std::size_t i = 0; i < vecs.size(); ++i) write_embedding_row(out, i, golds[i], vecs[i]);
  return out.str();
}

std::string render_markdown(const std::vector<std::pair<std::string, std::map<std::string, MetricSummary>>>& rows) {
  static const std::pair<const char*, const char*> columns[] = {
      {"acc_in", "In-domain acc"}, {"r_oos", "OOS recall"}, {"p_oos", "OOS precision"},
      {"f1", "OOS F1"},            {"j_in_oos", "J_in_oos"}};
  std::ostringstream out;
  out << "| Method |";
  for (const auto& [key, title] : columns) out << ' ' << title << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < std::size(columns); ++i) out << "---|";
  out << '\n';
  char cell[64];
  for (const auto& [method, summary] : rows) {
    out << "| " << method << " |";
    for (const auto& [key, title] : columns) {
      auto it = summary.find(key);
      if (it == summary.end()) {
        out << " - |";
        continue;
      }
      std::snprintf(cell, sizeof cell, " %.1f ± %.1f |", 100.0 * it->second.mean, 100.0 * it->second.stddev);
      out << cell;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace dnnc
