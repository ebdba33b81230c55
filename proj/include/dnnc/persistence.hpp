#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "dnnc/classify.hpp"
#include "dnnc/experiment.hpp"
#include "dnnc/matchers.hpp"
#include "dnnc/nnengine.hpp"

namespace dnnc {

/// Parses a JSON file; ParseError names the path on failure.
nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

void save_model(const MatcherModel& model, const std::string& path);
void save_model(const ClassifierModel& model, const std::string& path);
void save_model(const IntentPredictor& predictor, const std::string& path);
void save_index(const ExampleIndex& index, const std::string& path);

/// ModelFormatError on a version mismatch, a corrupt file or a different model kind.
MatcherModel load_matcher(const std::string& path);
ClassifierModel load_classifier(const std::string& path);
std::unique_ptr<IntentPredictor> load_predictor_file(const std::string& path);
ExampleIndex load_index(const std::string& path);

}  // namespace dnnc
