#include <algorithm>
#include <mutex>
#include <set>
#include <thread>

#include <httplib.h>

#include "dfx/core/encoding.hpp"
#include "dfx/core/image_io.hpp"
#include "dfx/service/service.hpp"
#include "support/check.hpp"
#include "support/fixtures.hpp"
#include "support/schema_check.hpp"

using namespace dfx;
using namespace dfx::service;
using nlohmann::json;

namespace {

class LiveService {
 public:
  explicit LiveService(std::shared_ptr<const Pipeline> pipeline, std::string tag = "service") {
    ServiceConfig cfg;
    cfg.store_dir = testing::scratch_dir(tag);
    cfg.max_upload_bytes = 64 * 1024;
    service_ = std::make_unique<Service>(cfg, std::move(pipeline));
    service_->mount(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LiveService() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(60, 0);
    return c;
  }
  Service& service() { return *service_; }

 private:
  httplib::Server server_;
  std::unique_ptr<Service> service_;
  int port_ = 0;
  std::thread thread_;
};

std::shared_ptr<const Pipeline> trained_pipeline() {
  return std::make_shared<const Pipeline>(testing::reference_registry(), PipelineConfig{});
}

std::string file_text(const std::filesystem::path& p) {
  const auto b = read_file_bytes(p);
  return {b.begin(), b.end()};
}

httplib::Result analyze(httplib::Client& c, const std::string& bytes, const std::string& user_type = "journalist",
                        const std::string& intent = "transparency", const std::string& filename = "x.png") {
  const httplib::MultipartFormDataItems items = {{"image", bytes, filename, "application/octet-stream"},
                                                 {"user_type", user_type, "", ""},
                                                 {"intent", intent, "", ""}};
  return c.Post("/api/analyze", items);
}

void check_schema(const std::string& schema, const std::string& body) {
  const auto errors = testing::schema_errors(testing::load_schema(schema), json::parse(body));
  for (const auto& e : errors) MESSAGE(schema << ": " << e);
  CHECK(errors.empty());
}

void check_error(const httplib::Result& res, int status, const std::string& code) {
  REQUIRE(res);
  CHECK(res->status == status);
  const json body = json::parse(res->body);
  CHECK(body["error"]["code"] == code);
  CHECK(body["error"]["status"] == status);
  check_schema("error.schema.json", res->body);
}

std::string png_text(const ImageBuffer& image) {
  const auto b = encode_png(image);
  return {b.begin(), b.end()};
}

std::string sample_bytes(bool fake) {
  const auto& fx = testing::trained_fixture();
  const auto& rec = fake ? fx.data.test.records.back() : fx.data.test.records.front();
  return file_text(fx.data.test.resolve(rec));
}

}  // namespace

TEST_CASE("api error mapping") {
  CHECK(to_api_error(Error(ErrorKind::input, "x")).status == 400);
  CHECK(to_api_error(Error(ErrorKind::parse, "x")).code == "bad_input");
  CHECK(to_api_error(Error(ErrorKind::not_found, "x")).status == 404);
  CHECK(to_api_error(Error(ErrorKind::backend, "x")).code == "backend_unavailable");
  CHECK(to_api_error(Error(ErrorKind::backend, "x")).status == 502);
  CHECK(to_api_error(Error(ErrorKind::grounding_violation, "x")).status == 422);
  CHECK(to_api_error(Error(ErrorKind::numeric, "x")).code == "internal");
}

TEST_CASE("analyze, fetch and list") {
  LiveService live(trained_pipeline());
  auto c = live.client();

  auto health = c.Get("/api/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  check_schema("health.schema.json", health->body);

  auto res = analyze(c, sample_bytes(true));
  REQUIRE(res);
  REQUIRE(res->status == 200);
  check_schema("bundle.schema.json", res->body);
  const json bundle = json::parse(res->body);
  CHECK(bundle["prediction"]["label"] == "fake");
  const std::string id = bundle["bundle_id"];
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");

  auto got = c.Get("/api/bundles/" + id);
  REQUIRE(got);
  CHECK(got->status == 200);
  CHECK(got->body == res->body);

  auto img = c.Get("/api/bundles/" + id + "/image");
  REQUIRE(img);
  CHECK(img->status == 200);
  CHECK(img->get_header_value("Content-Type") == "image/png");
  const auto img_bytes = std::vector<std::uint8_t>(img->body.begin(), img->body.end());
  const std::string original = sample_bytes(true);
  CHECK(decode_image(img_bytes) ==
        decode_image(std::span(reinterpret_cast<const std::uint8_t*>(original.data()), original.size())));
  auto overlay = c.Get("/api/bundles/" + id + "/overlay");
  REQUIRE(overlay);
  CHECK(overlay->status == 200);
  CHECK(base64_encode(overlay->body) == bundle["saliency"]["display_png_base64"].get<std::string>());

  auto second = analyze(c, sample_bytes(false), "public", "usability");
  auto third = analyze(c, sample_bytes(true), "forensic_analyst", "traceability");
  REQUIRE(second);
  REQUIRE(third);
  CHECK(json::parse(second->body)["prediction"]["label"] == "real");
  auto list = c.Get("/api/bundles");
  REQUIRE(list);
  CHECK(list->status == 200);
  check_schema("bundle_list.schema.json", list->body);
  const json ids = json::parse(list->body)["bundle_ids"];
  REQUIRE(ids.size() == 3);
  CHECK(ids[0] == json::parse(third->body)["bundle_id"]);
  CHECK(ids[2] == id);

  auto page = c.Get("/api/bundles?offset=1&limit=1");
  REQUIRE(page);
  const json p = json::parse(page->body);
  CHECK(p["bundle_ids"] == json::array({json::parse(second->body)["bundle_id"]}));
  CHECK(p["total"] == 3);
}

TEST_CASE("stored bundles survive a restart") {
  const auto dir = testing::scratch_dir("restart");
  std::string body;
  {
    BundleStore store(dir);
    const Pipeline pipeline(testing::reference_registry(), PipelineConfig{});
    const auto& fx = testing::trained_fixture();
    const auto image = load_image(fx.data.test.resolve(fx.data.test.records.back()));
    const auto bundle = pipeline.analyze(image, {});
    body = store.put(bundle, image);
    CHECK(store.get(bundle.bundle_id) == body);
    CHECK_THROWS_KIND(store.get("not-a-uuid"), ErrorKind::not_found);
  }
  // A bundle file without an index line (crash between the two writes) is recovered.
  std::filesystem::remove(dir / "index.jsonl");
  BundleStore reopened(dir);
  const auto page = reopened.list(0, 10);
  REQUIRE(page.total == 1);
  CHECK(reopened.get(page.ids[0]) == body);
  CHECK(BundleStore::valid_id(page.ids[0]));
  CHECK_FALSE(BundleStore::valid_id("../etc/passwd"));
}

TEST_CASE("analyze input errors") {
  LiveService live(trained_pipeline());
  auto c = live.client();
  check_error(analyze(c, "this is plain text, not an image", "journalist", "transparency", "notes.txt"), 400,
              "bad_input");
  const auto bad_intent = analyze(c, sample_bytes(true), "journalist", "speed");
  check_error(bad_intent, 400, "bad_input");
  CHECK(bad_intent->body.find("usability") != std::string::npos);
  check_error(analyze(c, std::string(70 * 1024, 'x')), 400, "bad_input");
  check_error(c.Post("/api/analyze", "{}", "application/json"), 400, "bad_input");
  check_error(analyze(c, png_text(ImageBuffer(32, 32, 3, 0.5))), 400, "bad_input");
  check_error(c.Get("/api/bundles/00000000-0000-4000-8000-000000000000"), 404, "not_found");
  check_error(c.Get("/api/bundles/nonsense/image"), 404, "not_found");
  check_error(c.Get("/api/nowhere"), 404, "not_found");
  check_error(c.Get("/api/bundles?limit=0"), 400, "bad_input");
}

TEST_CASE("chat over a stored bundle") {
  LiveService live(trained_pipeline());
  auto c = live.client();
  auto res = analyze(c, sample_bytes(true));
  REQUIRE(res);
  const json bundle = json::parse(res->body);
  const std::string id = bundle["bundle_id"];
  const std::string path = "/api/bundles/" + id + "/chat";

  auto which = c.Post(path, R"({"question":"which regions look fake?"})", "application/json");
  REQUIRE(which);
  CHECK(which->status == 200);
  check_schema("chat_response.schema.json", which->body);
  const json a = json::parse(which->body);
  CHECK(a["answered_from"] == "evidence");
  CHECK(a["turn_index"] == 0);
  for (const auto& z : bundle["caption"]["zones"]) CHECK(a["answer"].get<std::string>().find(z.get<std::string>()) != std::string::npos);

  auto who = c.Post(path, R"({"question":"who made this?"})", "application/json");
  REQUIRE(who);
  const json w = json::parse(who->body);
  CHECK(w["answered_from"] == "declined");
  CHECK(w["turn_index"] == 1);
  CHECK(w["session_id"] == a["session_id"]);

  check_error(c.Post(path, R"({"question":""})", "application/json"), 400, "bad_input");
  check_error(c.Post(path, "not json", "application/json"), 400, "bad_input");
  check_error(c.Post("/api/bundles/00000000-0000-4000-8000-000000000000/chat", R"({"question":"why?"})",
                     "application/json"),
              404, "not_found");

  std::vector<std::thread> threads;
  std::mutex mu;
  std::vector<int> indices;
  for (int t = 0; t < 6; ++t) {
    threads.emplace_back([&] {
      auto cc = live.client();
      auto r = cc.Post(path, R"({"question":"how confident is it?"})", "application/json");
      if (!r || r->status != 200) return;
      const std::lock_guard lock(mu);
      indices.push_back(json::parse(r->body)["turn_index"]);
    });
  }
  for (auto& t : threads) t.join();
  std::sort(indices.begin(), indices.end());
  CHECK(indices == std::vector<int>{2, 3, 4, 5, 6, 7});
}

TEST_CASE("ratings endpoint reproduces the six-rater summary") {
  LiveService live(trained_pipeline());
  auto c = live.client();
  check_error(c.Get("/api/ratings/summary"), 404, "not_found");

  auto res = analyze(c, sample_bytes(true));
  REQUIRE(res);
  const std::string path = "/api/bundles/" + json::parse(res->body)["bundle_id"].get<std::string>() + "/rating";
  const int rows[6][3] = {{4, 4, 5}, {5, 4, 4}, {4, 4, 3}, {5, 4, 3}, {4, 3, 4}, {5, 5, 5}};
  for (int i = 0; i < 6; ++i) {
    const json body{{"rater_id", "rater-" + std::to_string(i + 1)},
                    {"usefulness", rows[i][0]},
                    {"understandability", rows[i][1]},
                    {"explainability", rows[i][2]}};
    auto r = c.Post(path, body.dump(), "application/json");
    REQUIRE(r);
    CHECK(r->status == 201);
    check_schema("rating.schema.json", r->body);
  }
  check_error(c.Post(path, R"({"rater_id":"x","usefulness":6,"understandability":3,"explainability":3})",
                     "application/json"),
              400, "bad_input");
  check_error(c.Post(path, R"({"rater_id":"x","usefulness":4.5,"understandability":3,"explainability":3})",
                     "application/json"),
              400, "bad_input");
  auto summary = c.Get("/api/ratings/summary");
  REQUIRE(summary);
  CHECK(summary->status == 200);
  check_schema("ratings_summary.schema.json", summary->body);
  const json s = json::parse(summary->body);
  CHECK(s["usefulness"] == 4.5);
  CHECK(s["understandability"] == 4.0);
  CHECK(s["explainability"] == 4.0);
  CHECK(s["count"] == 6);
}

TEST_CASE("cors preflight") {
  LiveService live(std::make_shared<const Pipeline>(BackendRegistry::reference(testing::random_model()), PipelineConfig{}));
  auto c = live.client();
  auto r = c.Options("/api/analyze");
  REQUIRE(r);
  CHECK(r->status == 204);
  CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(r->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);
}

TEST_CASE("schema checker rejects malformed documents") {
  const json schema = testing::load_schema("ratings_summary.schema.json");
  CHECK_FALSE(testing::schema_errors(schema, json{{"usefulness", "high"}}).empty());
  const json error = testing::load_schema("error.schema.json");
  CHECK_FALSE(testing::schema_errors(error, json{{"error", {{"status", 400}, {"code", "oops"}, {"message", "m"}}}}).empty());
  CHECK(testing::schema_errors(error, json::parse(error_body({404, "not_found", "m"}))).empty());
}
