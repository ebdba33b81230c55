#include "dnnc/persistence.hpp"

#include "dnnc/corpus.hpp"

namespace dnnc {

using nlohmann::json;

json load_json_file(const std::string& path) {
  const std::string bytes = read_file(path);
  try {
    return json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void save_json_file(const std::string& path, const json& j) { write_file(path, j.dump() + "\n"); }

void save_model(const MatcherModel& model, const std::string& path) { save_json_file(path, model.to_json()); }

void save_model(const ClassifierModel& model, const std::string& path) { save_json_file(path, model.to_json()); }

void save_model(const IntentPredictor& predictor, const std::string& path) {
  save_json_file(path, predictor.to_json());
}

void save_index(const ExampleIndex& index, const std::string& path) {
  json j = index.to_json();
  j["version"] = kModelFormatVersion;
  save_json_file(path, j);
}

namespace {

json load_model_json(const std::string& path) {
  try {
    return load_json_file(path);
  } catch (const ParseError& e) {
    throw ModelFormatError(std::string("corrupt model file ") + e.what());
  }
}

}  // namespace

MatcherModel load_matcher(const std::string& path) {
  const json j = load_model_json(path);
  if (j.is_object() && j.contains("kind") && j["kind"] == "softmax") {
    throw ModelFormatError(path + ": holds a softmax classifier, not a matcher");
  }
  try {
    return MatcherModel::from_json(j);
  } catch (const ModelFormatError& e) {
    throw ModelFormatError(path + ": " + e.what());
  }
}

ClassifierModel load_classifier(const std::string& path) {
  try {
    return ClassifierModel::from_json(load_model_json(path));
  } catch (const ModelFormatError& e) {
    throw ModelFormatError(path + ": " + e.what());
  }
}

std::unique_ptr<IntentPredictor> load_predictor_file(const std::string& path) {
  try {
    return load_predictor(load_model_json(path));
  } catch (const ModelFormatError& e) {
    throw ModelFormatError(path + ": " + e.what());
  }
}

ExampleIndex load_index(const std::string& path) {
  const json j = load_model_json(path);
  if (j.value("version", -1) != kModelFormatVersion) throw ModelFormatError(path + ": unsupported index version");
  return ExampleIndex::from_json(j);
}

}  // namespace dnnc
