#include <chrono>
#include <thread>

#include "doctest.h"
#include "loanfair/error.hpp"
#include "loanfair/server.hpp"
#include "planted.hpp"
#include "support.hpp"

// After Eigen: httplib pulls in system headers whose macros clash with it.
#include "httplib.h"

using namespace loanfair;
using namespace loanfair::testing;
using nlohmann::json;

namespace {

struct Running {
  ApiCore core;
  HttpServer server{core};
  std::thread thread;
  int port = 0;

  explicit Running(std::filesystem::path log_dir)
      : core(planted_split().model, planted_split().test_set.applications(), [&] {
          ServiceOptions o;
          o.log_dir = std::move(log_dir);
          o.openapi_path = LOANFAIR_OPENAPI_PATH;
          return o;
        }()) {
    port = server.bind("127.0.0.1", 0);
    thread = std::thread([this] { server.listen(); });
    for (int i = 0; i < 500 && !server.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  ~Running() {
    server.stop();
    thread.join();
  }
};

}  // namespace

TEST_CASE("the HTTP binding forwards requests and headers") {
  const auto dir = temp_dir("server_roundtrip");
  std::string sid;
  {
    Running r(dir);
    REQUIRE(r.port > 0);
    REQUIRE(r.server.running());
    httplib::Client cli("127.0.0.1", r.port);

    auto created = cli.Post("/sessions", R"({"country":"Japan","pre_rating":6})", "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    CHECK(created->get_header_value("Content-Type") == "application/json");
    CHECK(created->get_header_value("Access-Control-Allow-Origin") == "*");
    sid = json::parse(created->body)["session_id"];

    const httplib::Headers h{{"X-Session-Id", sid}};
    auto overview = cli.Get("/overview", h);
    REQUIRE(overview);
    CHECK(json::parse(overview->body)["total"] == 300);
    CHECK(json::parse(overview->body)["scope"] == "session");

    auto list = cli.Get("/applications?limit=3&sort=confidence&order=desc", h);
    REQUIRE(list);
    const auto items = json::parse(list->body)["items"];
    REQUIRE(items.size() == 3);
    CHECK(items[0]["confidence"].get<double>() >= items[1]["confidence"].get<double>());

    const std::string app = items[0]["id"];
    auto judged = cli.Post("/applications/" + app + "/judgment", h, R"({"verdict":"unfair"})", "application/json");
    REQUIRE(judged);
    CHECK(judged->status == 200);
    auto after = cli.Get("/overview", h);
    CHECK(json::parse(after->body)["judged_unfair"] == 1);

    auto missing = cli.Post("/applications/" + app + "/judgment", R"({"verdict":"fair"})", "application/json");
    REQUIRE(missing);
    CHECK(missing->status == 401);
    CHECK(json::parse(missing->body)["error"]["code"] == "missing_session");

    auto preflight = cli.Options("/overview");
    REQUIRE(preflight);
    CHECK(preflight->status == 204);
    CHECK(preflight->get_header_value("Access-Control-Allow-Headers").find("X-Session-Id") != std::string::npos);

    auto spec = cli.Get("/openapi.json");
    REQUIRE(spec);
    CHECK(json::parse(spec->body)["paths"].contains("/applications/{id}/similar"));
    CHECK(cli.Delete("/overview")->status == 405);
  }
  // The log written through HTTP restores the same session.
  Running again(dir);
  httplib::Client cli("127.0.0.1", again.port);
  auto s = cli.Get("/sessions/" + sid);
  REQUIRE(s);
  CHECK(json::parse(s->body)["judgments"] == 1);
  CHECK(json::parse(s->body)["pre_rating"] == 6);
}

TEST_CASE("binding a taken port fails") {
  Running r({});
  ApiCore other(planted_split().model, planted_split().test_set.applications());
  HttpServer second(other);
  CHECK_THROWS_AS(second.bind("127.0.0.1", r.port), loanfair::Error);
}

TEST_CASE("an unused binding releases its port and an early stop ends listen") {
  ApiCore core(planted_split().model, planted_split().test_set.applications());
  int port = 0;
  {
    HttpServer idle(core);
    port = idle.bind("127.0.0.1", 0);
  }
  HttpServer again(core);
  CHECK(again.bind("127.0.0.1", port) == port);
  again.stop();
  again.listen();
  CHECK_FALSE(again.running());
}
