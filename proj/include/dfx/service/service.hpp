#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "dfx/core/error.hpp"
#include "dfx/core/pipeline.hpp"
#include "dfx/narrate/narrate.hpp"
#include "dfx/service/store.hpp"

namespace httplib {
class Server;
}

namespace dfx::service {

/// Wire-level error: fixed status per code.
struct ApiError {
  int status = 500;
  std::string code;  // bad_input, not_found, backend_unavailable, grounding_violation, internal
  std::string message;
};

ApiError to_api_error(const Error& error);
std::string error_body(const ApiError& error);

struct ServiceConfig {
  std::filesystem::path store_dir = "store";
  std::size_t max_upload_bytes = 10 * 1024 * 1024;
  std::string cors_origin = "*";
  std::size_t default_page_size = 20;
  std::size_t max_page_size = 100;
};

/// Routes:
///   POST /api/analyze                 multipart image + user_type + intent
///   GET  /api/bundles                 ?offset=&limit=, newest first
///   GET  /api/bundles/{id}            stored bundle JSON
///   GET  /api/bundles/{id}/image      uploaded image as PNG
///   GET  /api/bundles/{id}/overlay    saliency overlay PNG
///   POST /api/bundles/{id}/chat       {question}
///   POST /api/bundles/{id}/rating     {rater_id, usefulness, understandability, explainability}
///   GET  /api/ratings/summary
///   GET  /api/health
class Service {
 public:
  Service(ServiceConfig config, std::shared_ptr<const Pipeline> pipeline);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Registers all routes on `server`.
  void mount(httplib::Server& server);

  /// Blocks serving on host:port until stop().
  void listen(const std::string& host, int port);
  void stop();

  BundleStore& store() noexcept { return store_; }

 private:
  ServiceConfig config_;
  std::shared_ptr<const Pipeline> pipeline_;
  BundleStore store_;
  narrate::SessionManager sessions_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace dfx::service
