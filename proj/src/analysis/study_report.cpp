#include "loanfair/study_report.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "loanfair/error.hpp"

namespace loanfair {

namespace {

MetricContrast contrast(const std::vector<double>& low, const std::vector<double>& high, double alpha) {
  MetricContrast c;
  c.low = summarize(low);
  c.high = summarize(high);
  if (!low.empty() && !high.empty()) {
    c.test = mann_whitney_u(low, high);
    c.significant = c.test->p_value < alpha;
  }
  return c;
}

nlohmann::json optional_json(const std::optional<TestResult>& t) {
  return t ? to_json(*t) : nlohmann::json(nullptr);
}

std::optional<TestResult> optional_test(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  return test_result_from_json(doc.at(key));
}

nlohmann::json to_json(const MetricSummary& s) { return {{"n", s.n}, {"mean", s.mean}, {"sd", s.sd}}; }

MetricSummary summary_from_json(const nlohmann::json& doc) {
  return {doc.at("n").get<std::size_t>(), doc.at("mean").get<double>(), doc.at("sd").get<double>()};
}

nlohmann::json to_json(const MetricContrast& c) {
  return {{"low", to_json(c.low)}, {"high", to_json(c.high)}, {"test", optional_json(c.test)}, {"significant", c.significant}};
}

MetricContrast contrast_from_json(const nlohmann::json& doc) {
  MetricContrast c;
  c.low = summary_from_json(doc.at("low"));
  c.high = summary_from_json(doc.at("high"));
  c.test = optional_test(doc, "test");
  c.significant = doc.at("significant").get<bool>();
  return c;
}

Level parse_level(const std::string& text) {
  if (text == "H") return Level::high;
  if (text == "L") return Level::low;
  throw ValidationError("level", "must be H or L");
}

}  // namespace

std::vector<SessionMetrics> session_metrics(std::span<const std::string> sessions,
                                            std::span<const FairnessJudgment> judgments) {
  std::map<std::string, SessionMetrics> by_id;
  for (const auto& s : sessions) by_id[s].session_id = s;
  for (const auto& j : effective_judgments(judgments)) {
    auto it = by_id.find(j.session_id);
    if (it == by_id.end()) continue;
    if (j.verdict == JudgmentVerdict::fair) ++it->second.judged_fair;
    if (j.verdict == JudgmentVerdict::unfair) ++it->second.judged_unfair;
  }
  std::vector<SessionMetrics> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) {
    auto m = by_id.at(s);
    const auto total = m.judged_fair + m.judged_unfair;
    if (total > 0) m.unfairness_ratio = static_cast<double>(m.judged_unfair) / static_cast<double>(total);
    out.push_back(std::move(m));
  }
  return out;
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  s.n = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

ImpactBlock impact_by_group(const GroupAssignment& assignment, std::span<const WeightSuggestion> suggestions,
                            const ScoringModel& model, std::span<const Application> apps, const GroupSpec& group) {
  ImpactBlock block;
  const auto all = fairness_delta(aggregate(suggestions, model, apps), model, apps, group);
  block.original = all.before;
  block.all_feedback = all.after;
  for (const auto& grouping : assignment.groupings) {
    const auto parts = partition_suggestions(grouping, suggestions);
    const auto reports = group_fairness_delta(grouping, suggestions, model, apps, group);
    for (auto level : {Level::low, Level::high}) {
      GroupImpact g;
      g.dimension = grouping.dimension;
      g.level = level;
      g.sessions = grouping.sessions(level).size();
      g.suggestions = parts.at(level).size();
      g.report = reports.at(level);
      block.groups.push_back(g);
    }
  }
  return block;
}

std::vector<std::string> group_labels() {
  std::vector<std::string> labels;
  for (auto d : kDimensions)
    for (auto l : {Level::low, Level::high}) labels.push_back(std::string(to_string(d)) + "-" + std::string(to_string(l)));
  return labels;
}

StudyReport study_report(std::span<const SessionMetrics> metrics, const GroupAssignment& assignment,
                         std::optional<ImpactBlock> impact, double alpha) {
  StudyReport report;
  report.alpha = alpha;
  report.sessions = metrics.size();
  report.impact = std::move(impact);

  std::map<std::string, const SessionMetrics*> by_id;
  for (const auto& m : metrics) by_id[m.session_id] = &m;
  for (const auto& [session, reason] : assignment.unresolved)
    if (by_id.count(session)) ++report.unresolved_sessions;

  std::vector<std::vector<double>> unfair_by_group, ratio_by_group;
  for (const auto& grouping : assignment.groupings) {
    std::map<Level, std::vector<double>> fair, unfair, ratio;
    for (const auto& [session, level] : grouping.assignment) {
      auto it = by_id.find(session);
      if (it == by_id.end()) continue;
      fair[level].push_back(static_cast<double>(it->second->judged_fair));
      unfair[level].push_back(static_cast<double>(it->second->judged_unfair));
      if (it->second->unfairness_ratio) ratio[level].push_back(*it->second->unfairness_ratio);
    }
    DimensionTable t;
    t.dimension = grouping.dimension;
    t.mean_score = grouping.mean;
    t.judged_fair = contrast(fair[Level::low], fair[Level::high], alpha);
    t.judged_unfair = contrast(unfair[Level::low], unfair[Level::high], alpha);
    t.unfairness_ratio = contrast(ratio[Level::low], ratio[Level::high], alpha);
    report.tables.push_back(t);
    for (auto level : {Level::low, Level::high}) {
      unfair_by_group.push_back(unfair[level]);
      ratio_by_group.push_back(ratio[level]);
    }
  }

  auto all_nonempty = [](const std::vector<std::vector<double>>& groups) {
    return groups.size() >= 2 && std::all_of(groups.begin(), groups.end(), [](const auto& g) { return !g.empty(); });
  };
  if (all_nonempty(unfair_by_group)) {
    report.between_groups_unfair = kruskal_wallis(unfair_by_group);
    report.post_hoc_unfair = steel_dwass(unfair_by_group);
  }
  if (all_nonempty(ratio_by_group)) report.between_groups_ratio = kruskal_wallis(ratio_by_group);

  std::vector<double> ratings, ratios;
  for (const auto& m : metrics)
    if (m.post_rating && m.unfairness_ratio) {
      ratings.push_back(static_cast<double>(*m.post_rating));
      ratios.push_back(*m.unfairness_ratio);
    }
  if (ratings.size() >= 3) {
    try {
      report.rating_vs_ratio = pearson_r(ratings, ratios);
    } catch (const ContractError&) {
      // Constant ratings or ratios: no correlation to report.
    }
  }
  return report;
}

nlohmann::json to_json(const StudyReport& report) {
  nlohmann::json doc;
  doc["alpha"] = report.alpha;
  doc["sessions"] = report.sessions;
  doc["unresolved_sessions"] = report.unresolved_sessions;
  auto& tables = doc["tables"] = nlohmann::json::array();
  for (const auto& t : report.tables)
    tables.push_back({{"dimension", to_string(t.dimension)},
                      {"mean_score", t.mean_score},
                      {"judged_fair", to_json(t.judged_fair)},
                      {"judged_unfair", to_json(t.judged_unfair)},
                      {"unfairness_ratio", to_json(t.unfairness_ratio)}});
  doc["between_groups"] = {{"judged_unfair", optional_json(report.between_groups_unfair)},
                           {"unfairness_ratio", optional_json(report.between_groups_ratio)},
                           {"post_hoc_judged_unfair", nullptr}};
  if (report.post_hoc_unfair) {
    const auto labels = group_labels();
    nlohmann::json post{{"adjustment", report.post_hoc_unfair->adjustment}, {"comparisons", nlohmann::json::array()}};
    for (const auto& c : report.post_hoc_unfair->comparisons)
      post["comparisons"].push_back({{"first", c.first},
                                     {"second", c.second},
                                     {"first_group", labels.at(c.first)},
                                     {"second_group", labels.at(c.second)},
                                     {"u", c.u},
                                     {"z", c.z},
                                     {"p_value", c.p_value}});
    doc["between_groups"]["post_hoc_judged_unfair"] = post;
  }
  doc["rating_vs_ratio"] = optional_json(report.rating_vs_ratio);
  if (report.impact) {
    nlohmann::json impact{{"original", to_json(report.impact->original)},
                          {"all_feedback", to_json(report.impact->all_feedback)},
                          {"groups", nlohmann::json::array()}};
    for (const auto& g : report.impact->groups)
      impact["groups"].push_back({{"dimension", to_string(g.dimension)},
                                  {"level", to_string(g.level)},
                                  {"sessions", g.sessions},
                                  {"suggestions", g.suggestions},
                                  {"report", to_json(g.report)}});
    doc["impact"] = impact;
  } else {
    doc["impact"] = nullptr;
  }
  return doc;
}

StudyReport study_report_from_json(const nlohmann::json& doc) {
  StudyReport r;
  r.alpha = doc.at("alpha").get<double>();
  r.sessions = doc.at("sessions").get<std::size_t>();
  r.unresolved_sessions = doc.at("unresolved_sessions").get<std::size_t>();
  for (const auto& t : doc.at("tables")) {
    DimensionTable table;
    table.dimension = parse_dimension(t.at("dimension").get<std::string>());
    table.mean_score = t.at("mean_score").get<double>();
    table.judged_fair = contrast_from_json(t.at("judged_fair"));
    table.judged_unfair = contrast_from_json(t.at("judged_unfair"));
    table.unfairness_ratio = contrast_from_json(t.at("unfairness_ratio"));
    r.tables.push_back(table);
  }
  const auto& between = doc.at("between_groups");
  r.between_groups_unfair = optional_test(between, "judged_unfair");
  r.between_groups_ratio = optional_test(between, "unfairness_ratio");
  if (between.contains("post_hoc_judged_unfair") && !between.at("post_hoc_judged_unfair").is_null()) {
    const auto& post = between.at("post_hoc_judged_unfair");
    SteelDwassResult sd;
    sd.adjustment = post.at("adjustment").get<std::string>();
    for (const auto& c : post.at("comparisons"))
      sd.comparisons.push_back({c.at("first").get<std::size_t>(), c.at("second").get<std::size_t>(),
                                c.at("u").get<double>(), c.at("z").get<double>(), c.at("p_value").get<double>()});
    r.post_hoc_unfair = sd;
  }
  r.rating_vs_ratio = optional_test(doc, "rating_vs_ratio");
  if (doc.contains("impact") && !doc.at("impact").is_null()) {
    const auto& i = doc.at("impact");
    ImpactBlock block;
    block.original = fairness_report_from_json(i.at("original"));
    block.all_feedback = fairness_report_from_json(i.at("all_feedback"));
    for (const auto& g : i.at("groups"))
      block.groups.push_back({parse_dimension(g.at("dimension").get<std::string>()),
                              parse_level(g.at("level").get<std::string>()), g.at("sessions").get<std::size_t>(),
                              g.at("suggestions").get<std::size_t>(), fairness_report_from_json(g.at("report"))});
    r.impact = block;
  }
  return r;
}

std::string render_text(const StudyReport& report) {
  std::ostringstream out;
  char line[256];
  out << "sessions: " << report.sessions << " (unresolved country: " << report.unresolved_sessions << ")\n\n";
  std::snprintf(line, sizeof line, "%-6s %5s | %8s %8s %9s %7s | %8s %8s %9s %7s | %7s %7s %9s %7s\n", "group", "N",
                "fair M", "SD", "U", "p", "unfair M", "SD", "U", "p", "ratio M", "SD", "U", "p");
  out << line;
  auto cell = [](const MetricContrast& c, char* buf, std::size_t size) {
    if (!c.test) {
      std::snprintf(buf, size, "%9s %7s", "-", "-");
      return;
    }
    std::snprintf(buf, size, "%9.1f %6.3f%s", c.test->statistic, c.test->p_value, c.significant ? "*" : " ");
  };
  for (const auto& t : report.tables) {
    char fair[32], unfair[32], ratio[32];
    cell(t.judged_fair, fair, sizeof fair);
    cell(t.judged_unfair, unfair, sizeof unfair);
    cell(t.unfairness_ratio, ratio, sizeof ratio);
    const std::string d(to_string(t.dimension));
    std::snprintf(line, sizeof line, "%-6s %5zu | %8.2f %8.2f %s | %8.2f %8.2f %s | %7.4f %7.4f %s\n",
                  (d + "-L").c_str(), t.judged_fair.low.n, t.judged_fair.low.mean, t.judged_fair.low.sd, fair,
                  t.judged_unfair.low.mean, t.judged_unfair.low.sd, unfair, t.unfairness_ratio.low.mean,
                  t.unfairness_ratio.low.sd, ratio);
    out << line;
    std::snprintf(line, sizeof line, "%-6s %5zu | %8.2f %8.2f %17s | %8.2f %8.2f %17s | %7.4f %7.4f %17s\n",
                  (d + "-H").c_str(), t.judged_fair.high.n, t.judged_fair.high.mean, t.judged_fair.high.sd, "",
                  t.judged_unfair.high.mean, t.judged_unfair.high.sd, "", t.unfairness_ratio.high.mean,
                  t.unfairness_ratio.high.sd, "");
    out << line;
  }
  out << "(* p < " << report.alpha << ", two-sided Mann-Whitney U, Low vs High)\n";
  if (report.between_groups_unfair) {
    std::snprintf(line, sizeof line, "\nbetween groups, judged unfair: H = %.2f, p = %.4f (%s)\n",
                  report.between_groups_unfair->statistic, report.between_groups_unfair->p_value,
                  report.between_groups_unfair->method.c_str());
    out << line;
  }
  if (report.post_hoc_unfair) {
    const auto labels = group_labels();
    for (const auto& c : report.post_hoc_unfair->comparisons) {
      if (!(c.p_value < report.alpha)) continue;
      std::snprintf(line, sizeof line, "  %s vs %s: p = %.4f (%s)\n", labels[c.first].c_str(), labels[c.second].c_str(),
                    c.p_value, report.post_hoc_unfair->adjustment.c_str());
      out << line;
    }
  }
  if (report.between_groups_ratio) {
    std::snprintf(line, sizeof line, "between groups, unfairness ratio: H = %.2f, p = %.4f (%s)\n",
                  report.between_groups_ratio->statistic, report.between_groups_ratio->p_value,
                  report.between_groups_ratio->method.c_str());
    out << line;
  }
  if (report.rating_vs_ratio) {
    std::snprintf(line, sizeof line, "post rating vs unfairness ratio: r = %.3f, p = %.4f\n",
                  report.rating_vs_ratio->statistic, report.rating_vs_ratio->p_value);
    out << line;
  }
  if (report.impact) {
    const auto& i = *report.impact;
    std::snprintf(line, sizeof line, "\ndisparate impact: original %.4f, all feedback %.4f\n",
                  i.original.disparate_impact, i.all_feedback.disparate_impact);
    out << line;
    for (const auto& g : i.groups) {
      std::snprintf(line, sizeof line, "  %s-%s  sessions %4zu  suggestions %5zu  DI %.4f %s\n",
                    std::string(to_string(g.dimension)).c_str(), std::string(to_string(g.level)).c_str(), g.sessions,
                    g.suggestions, g.report.disparate_impact, std::string(to_string(g.report.verdict)).c_str());
      out << line;
    }
  }
  return out.str();
}

}  // namespace loanfair
