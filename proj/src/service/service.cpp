#include "dfx/service/service.hpp"

#include <charconv>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "dfx/core/encoding.hpp"
#include "dfx/core/image_io.hpp"
#include "dfx/eval/ratings.hpp"

namespace dfx::service {
namespace {

constexpr const char* kJson = "application/json";

void send_error(httplib::Response& res, const ApiError& e) {
  res.status = e.status;
  res.set_content(error_body(e), kJson);
}

void send_json(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, kJson);
}

/// Runs a handler, translating failures into the documented error shape.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      const ApiError api = to_api_error(e);
      if (api.status >= 500) spdlog::error("{} {}: {}", req.method, req.path, e.what());
      send_error(res, api);
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      send_error(res, ApiError{500, "internal", "internal error"});
    }
  };
}

nlohmann::json parse_body(const httplib::Request& req) {
  try {
    nlohmann::json j = nlohmann::json::parse(req.body);
    if (!j.is_object()) fail(ErrorKind::input, "request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::input, std::string("request body is not valid JSON: ") + e.what());
  }
}

std::size_t query_size(const httplib::Request& req, const char* key, std::size_t fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string text = req.get_param_value(key);
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorKind::input, std::string(key) + " must be a nonnegative integer");
  }
  return value;
}

std::string form_field(const httplib::Request& req, const char* name) {
  if (!req.has_file(name)) fail(ErrorKind::input, std::string("missing form field '") + name + "'");
  return req.get_file_value(name).content;
}

}  // namespace

ApiError to_api_error(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::input:
    case ErrorKind::parse:
      return {400, "bad_input", e.what()};
    case ErrorKind::not_found:
      return {404, "not_found", e.what()};
    case ErrorKind::backend:
    case ErrorKind::capability:
      return {502, "backend_unavailable", e.what()};
    case ErrorKind::grounding_violation:
      return {422, "grounding_violation", e.what()};
    default:
      return {500, "internal", e.what()};
  }
}

std::string error_body(const ApiError& e) {
  return nlohmann::json{{"error", {{"status", e.status}, {"code", e.code}, {"message", e.message}}}}.dump();
}

Service::Service(ServiceConfig config, std::shared_ptr<const Pipeline> pipeline)
    : config_(std::move(config)),
      pipeline_(std::move(pipeline)),
      store_(config_.store_dir),
      sessions_(store_.sessions_dir()) {
  if (!pipeline_) fail(ErrorKind::configuration, "service needs a pipeline");
}

Service::~Service() = default;

void Service::mount(httplib::Server& server) {
  const std::string origin = config_.cors_origin;
  server.set_default_headers({{"Access-Control-Allow-Origin", origin}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server.Get("/api/health", guarded([](const httplib::Request&, httplib::Response& res) {
               send_json(res, 200, R"({"status":"ok"})");
             }));

  server.Post("/api/analyze", guarded([this](const httplib::Request& req, httplib::Response& res) {
                if (!req.is_multipart_form_data()) fail(ErrorKind::input, "expected multipart/form-data");
                if (!req.has_file("image")) fail(ErrorKind::input, "missing form field 'image'");
                const std::string& upload = req.get_file_value("image").content;
                if (upload.size() > config_.max_upload_bytes) {
                  fail(ErrorKind::input, "image is " + std::to_string(upload.size()) + " bytes; limit is " +
                                             std::to_string(config_.max_upload_bytes));
                }
                const AudienceProfile audience{parse_user_type(form_field(req, "user_type")),
                                               parse_intent(form_field(req, "intent"))};
                const auto* bytes = reinterpret_cast<const std::uint8_t*>(upload.data());
                const ImageBuffer image = decode_image(std::span(bytes, upload.size()));
                const ExplanationBundle bundle = pipeline_->analyze(image, audience);
                send_json(res, 200, store_.put(bundle, image));
              }));

  server.Get("/api/bundles", guarded([this](const httplib::Request& req, httplib::Response& res) {
               const std::size_t offset = query_size(req, "offset", 0);
               const std::size_t limit = query_size(req, "limit", config_.default_page_size);
               if (limit < 1 || limit > config_.max_page_size) {
                 fail(ErrorKind::input, "limit must lie in 1.." + std::to_string(config_.max_page_size));
               }
               const BundleStore::Page page = store_.list(offset, limit);
               send_json(res, 200,
                         nlohmann::json{{"bundle_ids", page.ids},
                                        {"total", page.total},
                                        {"offset", offset},
                                        {"limit", limit}}
                             .dump());
             }));

  server.Get(R"(/api/bundles/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, store_.get(req.matches[1]));
             }));

  server.Get(R"(/api/bundles/([^/]+)/image)", guarded([this](const httplib::Request& req, httplib::Response& res) {
               const auto png = store_.source_png(req.matches[1]);
               res.set_content(std::string(png.begin(), png.end()), "image/png");
             }));

  server.Get(R"(/api/bundles/([^/]+)/overlay)", guarded([this](const httplib::Request& req, httplib::Response& res) {
               const ExplanationBundle b = bundle_from_json(nlohmann::json::parse(store_.get(req.matches[1])));
               const auto png = base64_decode(b.display_png_base64);
               res.set_content(std::string(png.begin(), png.end()), "image/png");
             }));

  server.Post(R"(/api/bundles/([^/]+)/chat)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                const std::string id = req.matches[1];
                const ExplanationBundle b = bundle_from_json(nlohmann::json::parse(store_.get(id)));
                const nlohmann::json body = parse_body(req);
                if (!body.contains("question") || !body.at("question").is_string()) {
                  fail(ErrorKind::input, "'question' must be a string");
                }
                const std::string session = sessions_.open_session(id);
                const narrate::ChatTurn turn = sessions_.ask(session, bundle_evidence(b), b.audience,
                                                             body.at("question").get<std::string>(),
                                                             pipeline_->narrator());
                send_json(res, 200,
                          nlohmann::json{{"answer", turn.answer},
                                         {"answered_from", narrate::to_string(turn.answered_from)},
                                         {"turn_index", turn.turn_index},
                                         {"session_id", session}}
                              .dump());
              }));

  server.Post(R"(/api/bundles/([^/]+)/rating)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                const std::string id = req.matches[1];
                if (!store_.contains(id)) fail(ErrorKind::not_found, "unknown bundle " + id);
                const eval::RatingRecord record = parse_body(req).get<eval::RatingRecord>();
                store_.append_rating(id, record);
                nlohmann::json out = record;
                out["bundle_id"] = id;
                send_json(res, 201, out.dump());
              }));

  server.Get("/api/ratings/summary", guarded([this](const httplib::Request&, httplib::Response& res) {
               const std::vector<eval::RatingRecord> records = store_.ratings();
               if (records.empty()) fail(ErrorKind::not_found, "no ratings recorded yet");
               send_json(res, 200, eval::summary_to_json(eval::aggregate_ratings(records)).dump());
             }));

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404) send_error(res, ApiError{404, "not_found", "no such route"});
  });
}

void Service::listen(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  mount(*server_);
  spdlog::info("serving on {}:{} with store {}", host, port, store_.root().string());
  if (!server_->listen(host, port)) fail(ErrorKind::io, "cannot listen on " + host + ":" + std::to_string(port));
}

void Service::stop() {
  if (server_) server_->stop();
}

}  // namespace dfx::service
