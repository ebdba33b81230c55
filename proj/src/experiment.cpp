#include "dnnc/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <unordered_map>

namespace dnnc {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct MethodName {
  Method method;
  std::string_view name;
};

constexpr MethodName kMethodNames[] = {
    {Method::Classifier, "classifier"}, {Method::ClassifierEda, "classifier-eda"},
    {Method::TfidfKnn, "tfidf-knn"},    {Method::EmbKnn, "emb-knn"},
    {Method::EmbKnnVanilla, "emb-knn-vanilla"}, {Method::RnKnn, "rn-knn"},
    {Method::Dnnc, "dnnc"},             {Method::DnncScratch, "dnnc-scratch"},
    {Method::DnncJoint, "dnnc-joint"},
};

std::string endpoint_or_env(const std::string& configured, const char* var) {
  if (!configured.empty()) return configured;
  const char* v = std::getenv(var);
  return v ? std::string(v) : std::string();
}

json train_config_to_json(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate}, {"epochs", c.epochs}, {"label_smoothing", c.label_smoothing}};
}

void train_config_from_json(const json& j, TrainConfig& c) {
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.label_smoothing = j.value("label_smoothing", c.label_smoothing);
  if (j.contains("hidden")) c.arch.hidden = j.at("hidden").get<std::size_t>();
  if (j.contains("embed_dim")) c.arch.relation_dim = j.at("embed_dim").get<std::size_t>();
  if (j.contains("hashed_dim")) c.arch.hashed_dim = j.at("hashed_dim").get<std::size_t>();
}

std::string run_dir_name(std::size_t run) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "run_%03zu", run);
  return buf;
}

template <class F>
auto staged(const char* stage, int run, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, run, e.what());
  }
}

json bundle_header(std::string_view method) {
  return json{{"kind", "predictor"}, {"method", method}, {"version", kModelFormatVersion}};
}

std::vector<std::string> example_texts(const FewShotTrainSet& trainset) {
  std::vector<std::string> texts;
  texts.reserve(trainset.size());
  for (const auto& ex : trainset.examples) texts.push_back(ex.text);
  return texts;
}

/// Cosine-loss fine-tuning of a projection head on same/different-intent pairs.
std::shared_ptr<const Embedder> finetune_encoder(std::shared_ptr<const Embedder> base, const FewShotTrainSet& trainset,
                                                 ProjectionHyper hyper, std::uint64_t seed) {
  const auto texts = example_texts(trainset);
  const auto vecs = base->embed_batch(texts);
  std::unordered_map<std::string, std::size_t> row;
  for (std::size_t i = 0; i < texts.size(); ++i) row.emplace(texts[i], i);
  std::vector<EmbeddingPair> pairs;
  for (const auto& p : synth_pairs(trainset, true)) {
    pairs.push_back({vecs[row.at(p.u_text)], vecs[row.at(p.e_text)], p.positive() ? 1.0 : 0.0});
  }
  hyper.seed = seed;
  if (pairs.empty()) return base;
  auto head = train_projection(pairs, hyper);
  return std::make_shared<ProjectedEmbedder>(std::move(base), std::move(head));
}

MatcherModel train_dnnc_matcher(const RunConfig& config, const ExperimentResources& res,
                                const FewShotTrainSet& trainset, std::uint64_t seed) {
  if (config.matcher == "remote") {
    return MatcherModel(RemoteParams{endpoint_or_env(config.scorer_url, "SCORER_URL")});
  }
  const auto pairs = synth_pairs(trainset);
  TrainConfig ft = config.matcher_train;
  ft.seed = seed;
  ft.arch.kind = MatcherKind::FeatureLinear;
  if (config.method == Method::DnncScratch) return train_matcher(pairs, ft);
  TrainConfig pt = config.nli_pretrain;
  pt.seed = seed;
  pt.arch = ft.arch;
  return pretrain_then_finetune(res.nli_pairs, pairs, pt, ft);
}

std::vector<LabeledExample> eda_expand(const FewShotTrainSet& trainset, const EdaParams& base,
                                       const SynonymLexicon& lexicon, std::uint64_t seed) {
  std::vector<LabeledExample> out;
  for (std::size_t i = 0; i < trainset.size(); ++i) {
    const auto& ex = trainset.examples[i];
    out.push_back(ex);
    EdaParams p = base;
    p.seed = seed * 1000003ULL + i;
    for (auto& t : eda_augment(ex.text, p, lexicon)) out.push_back({std::move(t), ex.intent});
  }
  return out;
}

}  // namespace

std::string_view to_string(Method method) {
  for (const auto& m : kMethodNames) {
    if (m.method == method) return m.name;
  }
  return "?";
}

Method method_from_string(std::string_view name) {
  for (const auto& m : kMethodNames) {
    if (m.name == name) return m.method;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

bool uses_matcher(Method method) {
  return method == Method::Dnnc || method == Method::DnncScratch || method == Method::DnncJoint ||
         method == Method::RnKnn;
}

TrainConfig default_relation_train() {
  TrainConfig c;
  c.learning_rate = 0.5;
  c.epochs = 400;
  c.arch.kind = MatcherKind::RelationMlp;
  return c;
}

StageError::StageError(std::string stage, int run, const std::string& what)
    : Error("[" + stage + (run >= 0 ? " run " + std::to_string(run) : std::string()) + "] " + what),
      stage_(std::move(stage)),
      run_(run) {}

// ---------------------------------------------------------------------------
// RunConfig

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  try {
    c.dataset = j.value("dataset", c.dataset);
    c.domain_map = j.value("domain_map", c.domain_map);
    c.domain = j.value("domain", c.domain);
    if (j.contains("synthetic")) {
      const json& s = j.at("synthetic");
      c.synthetic.seed = s.value("seed", c.synthetic.seed);
      c.synthetic.train_per_intent = s.value("train_per_intent", c.synthetic.train_per_intent);
      c.synthetic.dev_per_intent = s.value("dev_per_intent", c.synthetic.dev_per_intent);
      c.synthetic.test_per_intent = s.value("test_per_intent", c.synthetic.test_per_intent);
      c.synthetic.oos_dev = s.value("oos_dev", c.synthetic.oos_dev);
      c.synthetic.oos_test = s.value("oos_test", c.synthetic.oos_test);
    }
    c.K = j.value("K", c.K);
    if (j.contains("method")) c.method = method_from_string(j.at("method").get<std::string>());
    if (j.contains("k") && !j.at("k").is_null()) c.joint_k = j.at("k").get<std::size_t>();
    if (j.contains("grid")) c.grid = j.at("grid").get<std::vector<double>>();
    if (j.contains("encoder")) c.encoder = j.at("encoder");
    c.matcher = j.value("matcher", c.matcher);
    c.encoder_url = j.value("encoder_url", c.encoder_url);
    c.scorer_url = j.value("scorer_url", c.scorer_url);
    c.nli_path = j.value("nli", c.nli_path);
    c.lexicon_path = j.value("lexicon", c.lexicon_path);
    if (j.contains("matcher_train")) train_config_from_json(j.at("matcher_train"), c.matcher_train);
    if (j.contains("nli_pretrain")) train_config_from_json(j.at("nli_pretrain"), c.nli_pretrain);
    if (j.contains("relation_train")) train_config_from_json(j.at("relation_train"), c.relation_train);
    if (j.contains("softmax")) {
      const json& s = j.at("softmax");
      c.softmax.learning_rate = s.value("learning_rate", c.softmax.learning_rate);
      c.softmax.epochs = s.value("epochs", c.softmax.epochs);
      c.softmax.label_smoothing = s.value("label_smoothing", c.softmax.label_smoothing);
    }
    if (j.contains("projection")) {
      const json& p = j.at("projection");
      c.projection.learning_rate = p.value("learning_rate", c.projection.learning_rate);
      c.projection.epochs = p.value("epochs", c.projection.epochs);
      c.projection.d_out = p.value("d_out", c.projection.d_out);
      c.projection.init_noise = p.value("init_noise", c.projection.init_noise);
    }
    if (j.contains("eda")) {
      const json& e = j.at("eda");
      c.eda.edit_prob = e.value("edit_prob", c.eda.edit_prob);
      c.eda.augmentations_per_technique = e.value("augmentations_per_technique", c.eda.augmentations_per_technique);
    }
    if (j.contains("seeds")) {
      c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    } else {
      const std::size_t runs =
          j.value("runs", c.domain.empty() ? kDefaultAllDomainRuns : kDefaultSingleDomainRuns);
      for (std::size_t r = 0; r < runs; ++r) c.seeds.push_back(r);
    }
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

json RunConfig::to_json() const {
  json j{{"dataset", dataset},
         {"domain_map", domain_map},
         {"domain", domain},
         {"synthetic",
          {{"seed", synthetic.seed},
           {"train_per_intent", synthetic.train_per_intent},
           {"dev_per_intent", synthetic.dev_per_intent},
           {"test_per_intent", synthetic.test_per_intent},
           {"oos_dev", synthetic.oos_dev},
           {"oos_test", synthetic.oos_test}}},
         {"K", K},
         {"seeds", seeds},
         {"method", to_string(method)},
         {"k", joint_k ? json(*joint_k) : json(nullptr)},
         {"grid", grid},
         {"encoder", encoder},
         {"matcher", matcher},
         {"nli", nli_path},
         {"lexicon", lexicon_path},
         {"matcher_train", train_config_to_json(matcher_train)},
         {"nli_pretrain", train_config_to_json(nli_pretrain)},
         {"relation_train", train_config_to_json(relation_train)},
         {"softmax",
          {{"learning_rate", softmax.learning_rate},
           {"epochs", softmax.epochs},
           {"label_smoothing", softmax.label_smoothing}}},
         {"projection",
          {{"learning_rate", projection.learning_rate},
           {"epochs", projection.epochs},
           {"d_out", projection.d_out},
           {"init_noise", projection.init_noise}}},
         {"eda", {{"edit_prob", eda.edit_prob}, {"augmentations_per_technique", eda.augmentations_per_technique}}}};
  j["relation_train"]["hidden"] = relation_train.arch.hidden;
  j["relation_train"]["embed_dim"] = relation_train.arch.relation_dim;
  return j;
}

void RunConfig::validate() const {
  if (seeds.empty()) throw ConfigError("config: seeds must be non-empty");
  if (K == 0) throw ConfigError("config: K must be at least 1");
  if (grid.empty()) throw ConfigError("config: grid must be non-empty");
  if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError("config: grid must be ascending");
  if (method == Method::DnncJoint && !joint_k) throw ConfigError("config: method dnnc-joint requires k");
  if (joint_k && *joint_k == 0) throw ConfigError("config: k must be at least 1");
  if (!domain.empty() && !dataset.empty() && domain_map.empty()) {
    throw ConfigError("config: domain filter requires domain_map");
  }
  if (matcher != "feature-linear" && matcher != "remote") {
    throw ConfigError("config: matcher must be feature-linear or remote");
  }
  const bool nli_method = method == Method::Dnnc || method == Method::DnncJoint;
  if (nli_method && matcher == "feature-linear" && nli_path.empty()) {
    throw ConfigError("config: method " + std::string(to_string(method)) +
                      " requires nli (use dnnc-scratch to train without NLI pre-training)");
  }
  if (uses_matcher(method) && method != Method::RnKnn && matcher == "remote" &&
      endpoint_or_env(scorer_url, "SCORER_URL").empty()) {
    throw ConfigError("config: remote matcher requires scorer_url or $SCORER_URL");
  }
  if (!encoder.is_object() || !encoder.contains("type")) throw ConfigError("config: encoder needs a type");
  if (encoder.at("type") == "remote" && !encoder.contains("endpoint") &&
      endpoint_or_env(encoder_url, "ENCODER_URL").empty()) {
    throw ConfigError("config: remote encoder requires encoder_url or $ENCODER_URL");
  }
}

// ---------------------------------------------------------------------------
// Predictors

json ClassifierPredictor::to_json() const {
  json j = bundle_header("classifier");
  j["classifier"] = model_.to_json();
  return j;
}

KnnPredictor::KnnPredictor(ExampleIndex index, std::shared_ptr<const Embedder> encoder)
    : index_(std::move(index)), encoder_(std::move(encoder)) {
  if (!encoder_) throw std::invalid_argument("KnnPredictor: null encoder");
}

json KnnPredictor::to_json() const {
  json j = bundle_header("knn");
  j["index"] = index_.to_json();
  return j;
}

json MatcherPredictor::to_json() const {
  json j = bundle_header("dnnc");
  j["matcher"] = matcher_.to_json();
  j["trainset"] = dnnc::to_json(trainset_);
  return j;
}

JointPredictor::JointPredictor(MatcherModel matcher, ExampleIndex index, std::shared_ptr<const Embedder> encoder,
                               std::size_t k)
    : matcher_(std::move(matcher)), index_(std::move(index)), encoder_(std::move(encoder)), k_(k) {
  if (!encoder_) throw std::invalid_argument("JointPredictor: null encoder");
  if (k_ == 0) throw std::invalid_argument("JointPredictor: k must be at least 1");
}

json JointPredictor::to_json() const {
  json j = bundle_header("joint");
  j["matcher"] = matcher_.to_json();
  j["index"] = index_.to_json();
  j["k"] = k_;
  return j;
}

std::unique_ptr<IntentPredictor> load_predictor(const json& bundle) {
  std::string method;
  try {
    if (bundle.value("kind", std::string()) != "predictor") {
      throw ModelFormatError("predictor: expected kind 'predictor'");
    }
    if (bundle.value("version", -1) != kModelFormatVersion) {
      throw ModelFormatError("predictor: unsupported model format version");
    }
    method = bundle.at("method").get<std::string>();
    if (method == "classifier") {
      return std::make_unique<ClassifierPredictor>(ClassifierModel::from_json(bundle.at("classifier")));
    }
    if (method == "knn") {
      auto index = ExampleIndex::from_json(bundle.at("index"));
      auto encoder = make_embedder(index.encoder_config);
      return std::make_unique<KnnPredictor>(std::move(index), std::move(encoder));
    }
    if (method == "dnnc") {
      return std::make_unique<MatcherPredictor>(MatcherModel::from_json(bundle.at("matcher")),
                                                trainset_from_json(bundle.at("trainset")));
    }
    if (method == "joint") {
      auto index = ExampleIndex::from_json(bundle.at("index"));
      auto encoder = make_embedder(index.encoder_config);
      return std::make_unique<JointPredictor>(MatcherModel::from_json(bundle.at("matcher")), std::move(index),
                                              std::move(encoder), bundle.at("k").get<std::size_t>());
    }
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("predictor: ") + e.what());
  }
  throw ModelFormatError("predictor: unknown method '" + method + "'");
}

// ---------------------------------------------------------------------------
// Training

ExperimentResources load_resources(const RunConfig& config) {
  ExperimentResources res;
  if (config.dataset.empty()) {
    res.corpus = make_synthetic_corpus(config.synthetic);
  } else {
    res.corpus = load_clinc_file(config.dataset);
    if (!config.domain_map.empty()) res.corpus.domain_map = load_domain_map_file(config.domain_map);
  }
  if (!config.domain.empty()) res.corpus = filter_domain(res.corpus, config.domain);
  const bool needs_nli = (config.method == Method::Dnnc || config.method == Method::DnncJoint) &&
                         config.matcher == "feature-linear";
  if (needs_nli) res.nli_pairs = nli_to_binary(load_nli_file(config.nli_path));
  if (!config.lexicon_path.empty()) res.lexicon = SynonymLexicon::load(config.lexicon_path);
  return res;
}

std::shared_ptr<const Embedder> build_encoder(const RunConfig& config, const FewShotTrainSet& trainset) {
  json cfg = config.encoder;
  const std::string type = cfg.value("type", std::string());
  if (type == "tfidf" && !cfg.contains("vocabulary")) {
    const auto texts = example_texts(trainset);
    return std::make_shared<TfidfEmbedder>(TfidfModel::fit(texts));
  }
  if (type == "remote" && !cfg.contains("endpoint")) cfg["endpoint"] = endpoint_or_env(config.encoder_url, "ENCODER_URL");
  return make_embedder(cfg);
}

std::unique_ptr<IntentPredictor> train_predictor(const RunConfig& config, const ExperimentResources& resources,
                                                 const FewShotTrainSet& trainset) {
  const std::uint64_t seed = trainset.seed;
  switch (config.method) {
    case Method::Classifier:
    case Method::ClassifierEda: {
      SoftmaxConfig sc = config.softmax;
      sc.seed = seed;
      auto encoder = build_encoder(config, trainset);
      if (config.method == Method::Classifier) {
        return std::make_unique<ClassifierPredictor>(train_softmax(trainset, std::move(encoder), sc));
      }
      const auto augmented = eda_expand(trainset, config.eda, resources.lexicon, seed);
      return std::make_unique<ClassifierPredictor>(train_softmax(augmented, trainset.intents, std::move(encoder), sc));
    }
    case Method::TfidfKnn: {
      auto encoder = std::make_shared<TfidfEmbedder>(TfidfModel::fit(example_texts(trainset)));
      auto index = build_index(trainset, *encoder);
      return std::make_unique<KnnPredictor>(std::move(index), std::move(encoder));
    }
    case Method::EmbKnn:
    case Method::EmbKnnVanilla: {
      auto encoder = build_encoder(config, trainset);
      if (config.method == Method::EmbKnn) encoder = finetune_encoder(encoder, trainset, config.projection, seed);
      auto index = build_index(trainset, *encoder);
      return std::make_unique<KnnPredictor>(std::move(index), std::move(encoder));
    }
    case Method::RnKnn: {
      TrainConfig rc = config.relation_train;
      rc.seed = seed;
      rc.arch.kind = MatcherKind::RelationMlp;
      return std::make_unique<MatcherPredictor>(train_matcher(synth_pairs(trainset), rc), trainset);
    }
    case Method::Dnnc:
    case Method::DnncScratch:
      return std::make_unique<MatcherPredictor>(train_dnnc_matcher(config, resources, trainset, seed), trainset);
    case Method::DnncJoint: {
      auto matcher = train_dnnc_matcher(config, resources, trainset, seed);
      auto encoder = finetune_encoder(build_encoder(config, trainset), trainset, config.projection, seed);
      auto index = build_index(trainset, *encoder);
      return std::make_unique<JointPredictor>(std::move(matcher), std::move(index), std::move(encoder),
                                              *config.joint_k);
    }
  }
  throw ConfigError("train_predictor: unhandled method");
}

// ---------------------------------------------------------------------------
// Experiment

json ExperimentResult::metrics_json(const RunConfig& config) const {
  json runs_j = json::array();
  for (const auto& r : runs) {
    json dev = json::array();
    for (const auto& m : r.dev_sweep) dev.push_back(m.to_json());
    runs_j.push_back(json{{"seed", r.seed}, {"dev_sweep", std::move(dev)}, {"test", r.test.to_json()}});
  }
  return json{{"config", config.to_json()},
              {"threshold", {{"grid", sweep.grid}, {"mean_dev_j", sweep.mean_j}, {"selected", sweep.selected}}},
              {"runs", std::move(runs_j)},
              {"aggregate", dnnc::to_json(aggregate)},
              {"joint_accuracy", {{"r", joint_r}, {"mean", joint_accuracy_mean}}}};
}

ExperimentResult run_experiment(const RunConfig& config) {
  staged("config", -1, [&] { config.validate(); });
  const ExperimentResources resources = staged("load", -1, [&] { return load_resources(config); });
  const EvalSet devset = make_eval_set(resources.corpus.dev, resources.corpus.oos_dev);
  const EvalSet testset = make_eval_set(resources.corpus.test, resources.corpus.oos_test);
  const bool write = !config.output_dir.empty();
  if (write) staged("write", -1, [&] { fs::create_directories(config.output_dir); });

  ExperimentResult result;
  std::vector<std::unique_ptr<IntentPredictor>> predictors;
  std::vector<std::vector<MetricsReport>> dev_sweeps;
  for (std::size_t r = 0; r < config.seeds.size(); ++r) {
    const int run = static_cast<int>(r);
    const std::uint64_t seed = config.seeds[r];
    const auto trainset = staged("sample", run, [&] { return sample_kshot(resources.corpus, config.K, seed); });
    auto predictor = staged("train", run, [&] { return train_predictor(config, resources, trainset); });
    auto sweep = staged("sweep", run, [&] { return sweep_threshold(predictor->decide_fn(), devset, config.grid); });
    if (write) {
      staged("write", run, [&] {
        const fs::path dir = fs::path(config.output_dir) / run_dir_name(r);
        fs::create_directories(dir);
        write_file((dir / "model.json").string(), predictor->to_json().dump() + "\n");
        write_file((dir / "trainset.json").string(), to_json(trainset).dump(2) + "\n");
      });
    }
    RunResult rr;
    rr.seed = seed;
    rr.dev_sweep = sweep;
    result.runs.push_back(std::move(rr));
    dev_sweeps.push_back(std::move(sweep));
    predictors.push_back(std::move(predictor));
  }

  result.sweep = staged("select", -1, [&] { return select_threshold(dev_sweeps, config.grid); });
  const double T = result.sweep.selected;

  std::vector<MetricsReport> tests;
  for (std::size_t r = 0; r < predictors.size(); ++r) {
    const int run = static_cast<int>(r);
    auto& rr = result.runs[r];
    staged("test", run, [&] {
      rr.test_predictions.reserve(testset.size());
      for (const auto& u : testset.texts) rr.test_predictions.push_back(predictors[r]->predict(u, T));
      rr.test = compute_metrics(rr.test_predictions, testset.golds);
    });
    tests.push_back(rr.test);
  }
  result.aggregate = aggregate_runs(tests);
  const std::size_t n_in = resources.corpus.test.size();
  result.joint_r = n_in == 0 ? 0.0 : static_cast<double>(resources.corpus.oos_test.size()) / static_cast<double>(n_in);
  double ja = 0.0;
  for (const auto& t : tests) ja += joint_accuracy(t, result.joint_r);
  result.joint_accuracy_mean = ja / static_cast<double>(tests.size());

  if (write) {
    staged("write", -1, [&] {
      const fs::path out(config.output_dir);
      const auto flags = testset.oos_flags();
      std::vector<Prediction> all;
      std::vector<bool> all_flags;
      for (std::size_t r = 0; r < result.runs.size(); ++r) {
        const auto& rr = result.runs[r];
        const fs::path dir = out / run_dir_name(r);
        write_file((dir / "confidence.csv").string(), export_confidence(rr.test_predictions, flags));
        json report{{"seed", rr.seed}, {"threshold", T}, {"test", rr.test.to_json()}};
        json dev = json::array();
        for (const auto& m : rr.dev_sweep) dev.push_back(m.to_json());
        report["dev_sweep"] = std::move(dev);
        write_file((dir / "report.json").string(), report.dump(2) + "\n");
        all.insert(all.end(), rr.test_predictions.begin(), rr.test_predictions.end());
        all_flags.insert(all_flags.end(), flags.begin(), flags.end());
      }
      write_file((out / "confidence.csv").string(), export_confidence(all, all_flags));
      write_file((out / "metrics.json").string(), result.metrics_json(config).dump(2) + "\n");
      char line[96];
      std::snprintf(line, sizeof line, "\nSelected threshold: %.1f (mean dev J %.4f)\n", T,
                    result.sweep.mean_j[static_cast<std::size_t>(
                        std::find(result.sweep.grid.begin(), result.sweep.grid.end(), T) - result.sweep.grid.begin())]);
      std::string md = "# " + std::string(to_string(config.method)) + ", K=" + std::to_string(config.K) + ", " +
                       std::to_string(config.seeds.size()) + " runs\n\n";
      md += render_markdown({{std::string(to_string(config.method)), result.aggregate}});
      md += line;
      write_file((out / "metrics.md").string(), md);
    });
  }
  return result;
}

}  // namespace dnnc
