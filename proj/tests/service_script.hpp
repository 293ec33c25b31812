#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "loanfair/api.hpp"
#include "planted.hpp"

namespace loanfair::testing {

inline ApiResponse post_judgment(ApiCore& api, const std::string& sid, const std::string& app, const std::string& verdict,
                                 bool needs_human = false) {
  return api.handle(request("POST", "/applications/" + app + "/judgment",
                            nlohmann::json{{"verdict", verdict}, {"needs_human", needs_human}}.dump(), sid));
}

// Drives one session through 20 mutating requests.
inline std::vector<ServiceSnapshot> scripted_session(ApiCore& api, std::string& sid) {
  std::vector<ServiceSnapshot> after;
  auto step = [&](const ApiResponse& r) {
    if (r.status >= 300) throw std::runtime_error("scripted step failed: " + r.text());
    after.push_back(api.snapshot());
  };
  const auto& apps = api.applications();
  const auto r = api.handle(request("POST", "/sessions",
                                    nlohmann::json{{"country", "UK"}, {"pre_rating", 5}, {"questionnaire_residence", "UK"}}.dump()));
  sid = r.body.at("session_id");
  step(r);
  const std::string nat = "nationality";
  const double w = api.model().weight(nat);
  for (int i = 0; i < 6; ++i) step(post_judgment(api, sid, apps[i].id, i % 2 ? "unfair" : "fair", i == 4));
  step(post_judgment(api, sid, apps[0].id, "unfair"));
  step(post_judgment(api, sid, apps[1].id, "cleared"));
  for (int i = 0; i < 4; ++i)
    step(api.handle(request("POST", "/applications/" + apps[10 + i].id + "/weights",
                            nlohmann::json{{"weights", {{nat, w * (0.25 * i)}}}}.dump(), sid)));
  step(api.handle(request("POST", "/applications/" + apps[10].id + "/weights", nlohmann::json{{"weights", {{nat, 0.0}}}}.dump(), sid)));
  for (const char* kind : {"filter", "sort", "select_application", "compare"})
    step(api.handle(request("POST", "/sessions/" + sid + "/events",
                            nlohmann::json{{"kind", kind}, {"payload", {{"value", kind}}}}.dump())));
  step(api.handle(request("POST", "/sessions/" + sid + "/post_rating", nlohmann::json{{"rating", 3}}.dump())));
  step(api.handle(request("POST", "/sessions/" + sid + "/taskload", nlohmann::json{{"scores", {10, 20, 30, 40, 50, 60}}}.dump())));
  return after;
}

inline std::vector<std::string> read_everything(ApiCore& api, const std::string& sid) {
  const auto& apps = api.applications();
  std::vector<ApiRequest> reads = {
      request("GET", "/overview"),
      request("GET", "/overview", {}, sid),
      request("GET", "/sessions/" + sid),
      request("GET", "/applications", {}, sid, {{"limit", "300"}}),
      request("GET", "/applications", {}, std::nullopt, {{"limit", "300"}, {"sort", "judgment"}, {"order", "desc"}}),
      request("GET", "/reports/fairness"),
      request("GET", "/model"),
  };
  for (int i = 0; i < 12; ++i) reads.push_back(request("GET", "/applications/" + apps[i].id, {}, sid));
  std::vector<std::string> out;
  for (const auto& r : reads) out.push_back(std::to_string(api.handle(r).status) + api.handle(r).text());
  return out;
}

}  // namespace loanfair::testing
