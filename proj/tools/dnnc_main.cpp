// dnnc command-line driver.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dnnc/corpus.hpp"
#include "dnnc/evalharness.hpp"
#include "dnnc/experiment.hpp"
#include "dnnc/persistence.hpp"
#include "dnnc/synthetic.hpp"

using nlohmann::json;
using namespace dnnc;

namespace {

/// Flags shared by subcommands that read a corpus or a run config.
struct CommonFlags {
  std::string config;
  std::string data;
  std::string domain_map;
  std::string domain;
  std::string out;
};

void add_corpus_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Run config JSON (flags override fields)");
  cmd->add_option("--data", f.data, "CLINC-format JSON; omitted = built-in synthetic corpus");
  cmd->add_option("--domain-map", f.domain_map, "Sidecar JSON mapping intents to domains");
  cmd->add_option("--domain", f.domain, "Restrict to one domain");
}

RunConfig base_config(const CommonFlags& f) {
  json j = f.config.empty() ? json::object() : load_json_file(f.config);
  if (!f.data.empty()) j["dataset"] = f.data;
  if (!f.domain_map.empty()) j["domain_map"] = f.domain_map;
  if (!f.domain.empty()) j["domain"] = f.domain;
  return RunConfig::from_json(j);
}

Corpus load_corpus(const RunConfig& c) {
  Corpus corpus;
  if (c.dataset.empty()) {
    corpus = make_synthetic_corpus(c.synthetic);
  } else {
    corpus = load_clinc_file(c.dataset);
    if (!c.domain_map.empty()) corpus.domain_map = load_domain_map_file(c.domain_map);
  }
  if (!c.domain.empty()) corpus = filter_domain(corpus, c.domain);
  return corpus;
}

EvalSet split_of(const Corpus& corpus, const std::string& split) {
  if (split == "dev") return make_eval_set(corpus.dev, corpus.oos_dev);
  if (split == "test") return make_eval_set(corpus.test, corpus.oos_test);
  throw ConfigError("--split must be dev or test");
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

std::vector<Prediction> predict_all(const IntentPredictor& p, const EvalSet& set, double T) {
  std::vector<Prediction> out;
  out.reserve(set.size());
  for (const auto& u : set.texts) out.push_back(p.predict(u, T));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot intent detection with discriminative nearest-neighbour matching"};
  app.require_subcommand(1);
  std::string stage = "cli";

  // gen-synthetic
  CommonFlags gen;
  std::uint64_t gen_seed = SyntheticSpec{}.seed;
  std::string gen_map_out;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Write the templated toy corpus in CLINC format");
  gen_cmd->add_option("--seed", gen_seed, "Generator seed");
  gen_cmd->add_option("--out", gen.out, "Output corpus JSON")->required();
  gen_cmd->add_option("--domain-map-out", gen_map_out, "Also write its domain map");

  // ingest
  CommonFlags ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate a corpus and print split statistics");
  add_corpus_flags(ingest_cmd, ingest);
  ingest_cmd->add_option("--out", ingest.out, "Write the (filtered) corpus back out in CLINC format");

  // sample
  CommonFlags sample;
  std::size_t sample_k = 5;
  std::uint64_t sample_seed = 0;
  auto* sample_cmd = app.add_subcommand("sample", "Draw a balanced K-shot training sample");
  add_corpus_flags(sample_cmd, sample);
  sample_cmd->add_option("-K,--shots", sample_k, "Examples per intent");
  sample_cmd->add_option("--seed", sample_seed, "Sampling seed");
  sample_cmd->add_option("--out", sample.out, "Output trainset JSON (default stdout)");

  // pairs
  std::string pairs_trainset, pairs_nli, pairs_out;
  bool pairs_symmetric = false;
  auto* pairs_cmd = app.add_subcommand("pairs", "Emit binary pair examples as JSON lines");
  auto* pt_opt = pairs_cmd->add_option("--trainset", pairs_trainset, "K-shot trainset JSON");
  auto* pn_opt = pairs_cmd->add_option("--nli", pairs_nli, "NLI JSONL to convert instead");
  pt_opt->excludes(pn_opt);
  pairs_cmd->add_flag("--symmetric", pairs_symmetric, "Emit each unordered pair once");
  pairs_cmd->add_option("--out", pairs_out, "Output JSONL (default stdout)");

  // train
  CommonFlags train;
  std::string train_trainset, train_method, train_nli;
  std::optional<std::size_t> train_k;
  auto* train_cmd = app.add_subcommand("train", "Train a predictor on a K-shot sample");
  add_corpus_flags(train_cmd, train);
  train_cmd->add_option("--trainset", train_trainset, "K-shot trainset JSON")->required();
  train_cmd->add_option("--method", train_method, "Method name, e.g. dnnc, dnnc-scratch, emb-knn");
  train_cmd->add_option("--nli", train_nli, "NLI JSONL for matcher pre-training");
  train_cmd->add_option("-k", train_k, "Retrieval depth for dnnc-joint");
  train_cmd->add_option("--out", train.out, "Output model bundle")->required();

  // sweep / eval / bench / export-confidence
  CommonFlags evalf;
  std::string model_path, split = "dev";
  double threshold = 0.5;
  std::vector<double> grid;
  std::size_t bench_limit = 0;
  auto add_model_flags = [&](CLI::App* cmd, const std::string& default_split) {
    add_corpus_flags(cmd, evalf);
    cmd->add_option("--model", model_path, "Predictor bundle from train")->required();
    cmd->add_option("--split", split, "dev or test")->default_str(default_split);
    cmd->add_option("--out", evalf.out, "Output file (default stdout)");
  };
  auto* sweep_cmd = app.add_subcommand("sweep", "Threshold sweep on a split");
  add_model_flags(sweep_cmd, "dev");
  sweep_cmd->add_option("--grid", grid, "Thresholds (default 0.0..1.0 step 0.1)");
  auto* eval_cmd = app.add_subcommand("eval", "Metrics at a fixed threshold");
  add_model_flags(eval_cmd, "test");
  eval_cmd->add_option("-T,--threshold", threshold, "Rejection threshold");
  auto* bench_cmd = app.add_subcommand("bench", "Per-example latency at batch size one");
  add_model_flags(bench_cmd, "test");
  bench_cmd->add_option("--limit", bench_limit, "Use only the first n utterances");
  auto* conf_cmd = app.add_subcommand("export-confidence", "CSV of confidences for histograms");
  add_model_flags(conf_cmd, "test");
  conf_cmd->add_option("-T,--threshold", threshold, "Rejection threshold");

  // export-embeddings
  CommonFlags embf;
  std::string emb_model, emb_split;
  auto* emb_cmd = app.add_subcommand("export-embeddings", "CSV of embedding vectors");
  add_corpus_flags(emb_cmd, embf);
  emb_cmd->add_option("--model", emb_model, "kNN or joint bundle (exports its index)");
  emb_cmd->add_option("--split", emb_split, "Embed dev or test utterances with the config encoder instead");
  emb_cmd->add_option("--out", embf.out, "Output CSV (default stdout)");

  // run
  CommonFlags runf;
  std::string run_method, run_nli, run_seeds_csv;
  std::optional<std::size_t> run_K, run_k, run_runs;
  auto* run_cmd = app.add_subcommand("run", "End-to-end multi-run experiment");
  add_corpus_flags(run_cmd, runf);
  run_cmd->add_option("--method", run_method, "Method name, e.g. dnnc, dnnc-scratch, emb-knn");
  run_cmd->add_option("-K,--shots", run_K, "Examples per intent");
  run_cmd->add_option("-k", run_k, "Retrieval depth for dnnc-joint");
  run_cmd->add_option("--runs", run_runs, "Number of runs (seeds 0..n-1)");
  run_cmd->add_option("--seeds", run_seeds_csv, "Comma-separated seeds");
  run_cmd->add_option("--nli", run_nli, "NLI JSONL for matcher pre-training");
  run_cmd->add_option("--output-dir", runf.out, "Directory for metrics and per-run artifacts")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) {
      stage = "gen-synthetic";
      SyntheticSpec spec;
      spec.seed = gen_seed;
      const Corpus c = make_synthetic_corpus(spec);
      write_file(gen.out, to_clinc_json(c).dump(2) + "\n");
      if (!gen_map_out.empty()) write_file(gen_map_out, json(*c.domain_map).dump(2) + "\n");
      std::cout << c.summary().dump() << "\n";
    } else if (ingest_cmd->parsed()) {
      stage = "ingest";
      const Corpus c = load_corpus(base_config(ingest));
      if (!ingest.out.empty()) write_file(ingest.out, to_clinc_json(c).dump(2) + "\n");
      std::cout << c.summary().dump(2) << "\n";
    } else if (sample_cmd->parsed()) {
      stage = "sample";
      const Corpus c = load_corpus(base_config(sample));
      emit(sample.out, to_json(sample_kshot(c, sample_k, sample_seed)).dump(2) + "\n");
    } else if (pairs_cmd->parsed()) {
      stage = "pairs";
      std::vector<PairExample> pairs;
      if (!pairs_nli.empty()) {
        pairs = nli_to_binary(load_nli_file(pairs_nli));
      } else if (!pairs_trainset.empty()) {
        pairs = synth_pairs(trainset_from_json(load_json_file(pairs_trainset)), pairs_symmetric);
      } else {
        throw ConfigError("one of --trainset or --nli is required");
      }
      std::string text;
      for (const auto& p : pairs) text += to_json(p).dump() + "\n";
      emit(pairs_out, text);
    } else if (train_cmd->parsed()) {
      stage = "train";
      RunConfig cfg = base_config(train);
      if (!train_method.empty()) cfg.method = method_from_string(train_method);
      if (!train_nli.empty()) cfg.nli_path = train_nli;
      if (train_k) cfg.joint_k = *train_k;
      cfg.validate();
      const FewShotTrainSet ts = trainset_from_json(load_json_file(train_trainset));
      const ExperimentResources res = load_resources(cfg);
      save_model(*train_predictor(cfg, res, ts), train.out);
    } else if (sweep_cmd->parsed() || eval_cmd->parsed() || bench_cmd->parsed() || conf_cmd->parsed()) {
      stage = app.get_subcommands().front()->get_name();
      const auto predictor = load_predictor_file(model_path);
      const EvalSet set = split_of(load_corpus(base_config(evalf)), split);
      if (sweep_cmd->parsed()) {
        if (grid.empty()) grid = default_threshold_grid();
        auto runs = sweep_threshold(predictor->decide_fn(), set, grid);
        emit(evalf.out, select_threshold({std::move(runs)}, grid).to_json().dump(2) + "\n");
      } else if (eval_cmd->parsed()) {
        const auto preds = predict_all(*predictor, set, threshold);
        json j = compute_metrics(preds, set.golds).to_json();
        j["threshold"] = threshold;
        emit(evalf.out, j.dump(2) + "\n");
      } else if (bench_cmd->parsed()) {
        std::vector<std::string> texts = set.texts;
        if (bench_limit > 0 && bench_limit < texts.size()) texts.resize(bench_limit);
        emit(evalf.out, bench_latency(predictor->decide_fn(), texts).to_json().dump(2) + "\n");
      } else {
        emit(evalf.out, export_confidence(predict_all(*predictor, set, threshold), set.oos_flags()));
      }
    } else if (emb_cmd->parsed()) {
      stage = "export-embeddings";
      if (!emb_model.empty()) {
        const json bundle = load_json_file(emb_model);
        if (!bundle.contains("index")) throw ConfigError("--model bundle has no example index");
        emit(embf.out, export_embeddings(ExampleIndex::from_json(bundle.at("index"))));
      } else {
        if (emb_split.empty()) throw ConfigError("one of --model or --split is required");
        const RunConfig cfg = base_config(embf);
        const Corpus c = load_corpus(cfg);
        const EvalSet set = split_of(c, emb_split);
        const auto encoder = build_encoder(cfg, sample_kshot(c, cfg.K, cfg.seeds.front()));
        emit(embf.out, export_embeddings(*encoder, set.texts, set.golds));
      }
    } else if (run_cmd->parsed()) {
      stage = "run";
      json j = runf.config.empty() ? json::object() : load_json_file(runf.config);
      if (!runf.data.empty()) j["dataset"] = runf.data;
      if (!runf.domain_map.empty()) j["domain_map"] = runf.domain_map;
      if (!runf.domain.empty()) j["domain"] = runf.domain;
      if (!run_method.empty()) j["method"] = run_method;
      if (run_K) j["K"] = *run_K;
      if (run_k) j["k"] = *run_k;
      if (!run_nli.empty()) j["nli"] = run_nli;
      if (run_runs) {
        j.erase("seeds");
        j["runs"] = *run_runs;
      }
      if (!run_seeds_csv.empty()) {
        std::vector<std::uint64_t> seeds;
        for (const auto& tok : CLI::detail::split(run_seeds_csv, ',')) seeds.push_back(std::stoull(tok));
        j["seeds"] = seeds;
      }
      j["output_dir"] = runf.out;
      const RunConfig cfg = RunConfig::from_json(j);
      const ExperimentResult res = run_experiment(cfg);
      std::printf("method=%s runs=%zu T*=%.1f acc_in=%.4f r_oos=%.4f j_in_oos=%.4f\n",
                  std::string(to_string(cfg.method)).c_str(), res.runs.size(), res.sweep.selected,
                  res.aggregate.at("acc_in").mean, res.aggregate.at("r_oos").mean, res.aggregate.at("j_in_oos").mean);
    }
  } catch (const StageError& e) {
    std::cerr << "dnnc " << stage << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "dnnc: [" << stage << "] " << e.what() << "\n";
    return 1;
  }
  return 0;
}
