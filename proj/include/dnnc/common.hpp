#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include <json.hpp>

namespace dnnc {

/// Label used for out-of-scope gold examples and rejected predictions.
inline constexpr std::string_view kOosLabel = "oos";

/// Version stamped into every persisted model and index.
inline constexpr int kModelFormatVersion = 1;

using DenseVector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; the message names the offending JSON path or line.
class ParseError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Raised when gradient descent produces a non-finite loss.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Persisted model has the wrong version, kind or shape.
class ModelFormatError : public Error {
 public:
  using Error::Error;
};

/// Seeded generator with distribution helpers whose output does not depend on
/// the standard library implementation (std::*_distribution is unspecified).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform in [0, n); n must be positive.
  std::size_t index(std::size_t n);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

nlohmann::json vector_to_json(const DenseVector& v);
DenseVector vector_from_json(const nlohmann::json& j);
/// Row-major array of rows.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace dnnc
