#include "dnnc/remote.hpp"

#include <httplib.h>

namespace dnnc {

nlohmann::json post_json(const std::string& endpoint, const std::string& path, const nlohmann::json& body,
                         int timeout_seconds) {
  httplib::Client client(endpoint);
  if (!client.is_valid()) throw RemoteError(RemoteError::Kind::Transport, "invalid endpoint '" + endpoint + "'");
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  client.set_write_timeout(timeout_seconds, 0);

  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    throw RemoteError(RemoteError::Kind::Transport,
                      "POST " + endpoint + path + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw RemoteError(RemoteError::Kind::Status, "POST " + endpoint + path + " returned HTTP " +
                                                     std::to_string(res->status) + ": " +
                                                     res->body.substr(0, 200));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw RemoteError(RemoteError::Kind::Protocol,
                      "POST " + endpoint + path + ": response is not JSON: " + e.what());
  }
}

}  // namespace dnnc
