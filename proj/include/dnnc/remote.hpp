#pragma once

#include <string>

#include <json.hpp>

#include "dnnc/common.hpp"

namespace dnnc {

/// Failure talking to a remote encoder or scorer service.
class RemoteError : public Error {
 public:
  enum class Kind { Transport, Status, Protocol, Range };

  RemoteError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// POSTs `body` as application/json to endpoint + path and returns the parsed
/// response. `endpoint` is "http://host:port" (scheme optional).
nlohmann::json post_json(const std::string& endpoint, const std::string& path, const nlohmann::json& body,
                         int timeout_seconds = 60);

}  // namespace dnnc
