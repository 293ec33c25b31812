#include "loanfair/fairness.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "loanfair/error.hpp"

namespace loanfair {

bool GroupSpec::is_reference(const std::string& value) const {
  if (value == protected_value) return false;
  if (reference_values.empty()) return true;
  return std::find(reference_values.begin(), reference_values.end(), value) != reference_values.end();
}

void validate(const GroupSpec& group, const AttributeSpec& attribute) {
  if (group.attribute != attribute.name) throw ContractError("group spec refers to a different attribute");
  if (!attribute.is_categorical())
    throw ValidationError("group_attribute", "'" + attribute.name + "' is not categorical");
  if (!attribute.category_index(group.protected_value))
    throw ValidationError("protected", "'" + group.protected_value + "' is not a category of '" + attribute.name + "'");
  for (const auto& r : group.reference_values) {
    if (!attribute.category_index(r))
      throw ValidationError("reference", "'" + r + "' is not a category of '" + attribute.name + "'");
    if (r == group.protected_value) throw ValidationError("reference", "reference values include the protected value");
  }
}

std::string_view to_string(Verdict verdict) { return verdict == Verdict::fair ? "fair" : "unfair"; }

FairnessReport disparate_impact(std::span<const GroupDecision> decisions, const GroupSpec& group) {
  FairnessReport r;
  for (const auto& d : decisions) {
    const bool accepted = d.decision == Decision::accepted;
    if (d.group_value == group.protected_value)
      (accepted ? r.counts.protected_accepted : r.counts.protected_rejected) += 1;
    else if (group.is_reference(d.group_value))
      (accepted ? r.counts.reference_accepted : r.counts.reference_rejected) += 1;
  }
  const std::size_t n_protected = r.counts.protected_accepted + r.counts.protected_rejected;
  const std::size_t n_reference = r.counts.reference_accepted + r.counts.reference_rejected;
  if (n_protected == 0) throw ContractError("protected group '" + group.protected_value + "' is empty");
  if (n_reference == 0) throw ContractError("reference group is empty");
  r.protected_accept_rate = static_cast<double>(r.counts.protected_accepted) / static_cast<double>(n_protected);
  r.reference_accept_rate = static_cast<double>(r.counts.reference_accepted) / static_cast<double>(n_reference);
  if (r.counts.reference_accepted == 0)
    throw UndefinedRatioError("reference group has an acceptance rate of 0; disparate impact is undefined");
  r.disparate_impact = r.protected_accept_rate / r.reference_accept_rate;
  r.verdict = r.disparate_impact < kDisparateImpactThreshold ? Verdict::unfair : Verdict::fair;
  return r;
}

std::vector<GroupDecision> group_decisions(const AttributeSpec& attribute, std::span<const Application> apps,
                                           std::span<const Prediction> preds) {
  if (!attribute.is_categorical()) throw ValidationError("group_attribute", "'" + attribute.name + "' is not categorical");
  if (apps.size() != preds.size()) throw ContractError("predictions are not aligned with applications");
  std::vector<GroupDecision> out;
  out.reserve(apps.size());
  for (std::size_t i = 0; i < apps.size(); ++i) {
    const auto idx = static_cast<std::size_t>(apps[i].value(attribute.name));
    out.push_back({attribute.categories.at(idx), preds[i].decision});
  }
  return out;
}

FairnessReport audit(const ScoringModel& model, std::span<const Application> apps, const GroupSpec& group) {
  const auto& attribute = model.attributes()[model.index_of(group.attribute)];
  validate(group, attribute);
  const auto preds = predict_all(model, apps);
  const auto decisions = group_decisions(attribute, apps, preds);
  return disparate_impact(decisions, group);
}

double balanced_accuracy(std::span<const Prediction> preds, std::span<const Decision> truth) {
  if (preds.empty() || preds.size() != truth.size())
    throw ContractError("balanced accuracy needs aligned, nonempty predictions and labels");
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool predicted = preds[i].decision == Decision::accepted;
    if (truth[i] == Decision::accepted)
      (predicted ? tp : fn) += 1;
    else
      (predicted ? fp : tn) += 1;
  }
  if (tp + fn == 0 || tn + fp == 0) throw ContractError("balanced accuracy needs both label classes in the truth");
  const double tpr = static_cast<double>(tp) / static_cast<double>(tp + fn);
  const double tnr = static_cast<double>(tn) / static_cast<double>(tn + fp);
  return 0.5 * (tpr + tnr);
}

std::string_view to_string(JudgmentVerdict verdict) {
  switch (verdict) {
    case JudgmentVerdict::fair: return "fair";
    case JudgmentVerdict::unfair: return "unfair";
    case JudgmentVerdict::cleared: return "cleared";
  }
  return "cleared";
}

JudgmentVerdict parse_judgment_verdict(std::string_view text) {
  if (text == "fair") return JudgmentVerdict::fair;
  if (text == "unfair") return JudgmentVerdict::unfair;
  if (text == "cleared") return JudgmentVerdict::cleared;
  throw ValidationError("verdict", "must be one of fair, unfair, cleared");
}

std::vector<FairnessJudgment> effective_judgments(std::span<const FairnessJudgment> judgments) {
  std::map<std::pair<std::string, std::string>, std::size_t> latest;
  for (std::size_t i = 0; i < judgments.size(); ++i)
    latest[{judgments[i].session_id, judgments[i].application_id}] = i;
  std::vector<std::size_t> keep;
  for (const auto& [key, i] : latest)
    if (judgments[i].verdict != JudgmentVerdict::cleared || judgments[i].needs_human) keep.push_back(i);
  std::sort(keep.begin(), keep.end());
  std::vector<FairnessJudgment> out;
  out.reserve(keep.size());
  for (auto i : keep) out.push_back(judgments[i]);
  return out;
}

double unfairness_ratio(std::span<const FairnessJudgment> judgments) {
  std::size_t fair = 0, unfair = 0;
  for (const auto& j : judgments) {
    if (j.verdict == JudgmentVerdict::fair) ++fair;
    if (j.verdict == JudgmentVerdict::unfair) ++unfair;
  }
  if (fair + unfair == 0) throw UndefinedRatioError("no fair or unfair judgments; unfairness ratio is undefined");
  return static_cast<double>(unfair) / static_cast<double>(fair + unfair);
}

double mean_unfairness_ratio(std::span<const FairnessJudgment> judgments) {
  const auto effective = effective_judgments(judgments);
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_session;
  for (const auto& j : effective) {
    auto& [fair, unfair] = per_session[j.session_id];
    if (j.verdict == JudgmentVerdict::fair) ++fair;
    if (j.verdict == JudgmentVerdict::unfair) ++unfair;
  }
  double sum = 0.0;
  std::size_t sessions = 0;
  for (const auto& [id, c] : per_session) {
    if (c.first + c.second == 0) continue;
    sum += static_cast<double>(c.second) / static_cast<double>(c.first + c.second);
    ++sessions;
  }
  if (sessions == 0) throw UndefinedRatioError("no session made a fair or unfair judgment");
  return sum / static_cast<double>(sessions);
}

OverviewCounts overview_counts(std::span<const Prediction> preds, std::span<const FairnessJudgment> judgments) {
  OverviewCounts c;
  for (const auto& p : preds) (p.decision == Decision::accepted ? c.accepted : c.rejected) += 1;
  // Latest markup per application, regardless of session.
  std::map<std::string, const FairnessJudgment*> latest;
  for (const auto& j : judgments) latest[j.application_id] = &j;
  for (const auto& [id, j] : latest) {
    if (j->verdict == JudgmentVerdict::fair) ++c.judged_fair;
    if (j->verdict == JudgmentVerdict::unfair) ++c.judged_unfair;
    if (j->needs_human) ++c.needs_human;
  }
  return c;
}

nlohmann::json to_json(const FairnessReport& report) {
  return {{"disparate_impact", report.disparate_impact},
          {"protected_accept_rate", report.protected_accept_rate},
          {"reference_accept_rate", report.reference_accept_rate},
          {"verdict", to_string(report.verdict)},
          {"group_counts",
           {{"protected_accepted", report.counts.protected_accepted},
            {"protected_rejected", report.counts.protected_rejected},
            {"reference_accepted", report.counts.reference_accepted},
            {"reference_rejected", report.counts.reference_rejected}}}};
}

FairnessReport fairness_report_from_json(const nlohmann::json& doc) {
  FairnessReport r;
  r.disparate_impact = doc.at("disparate_impact").get<double>();
  r.protected_accept_rate = doc.at("protected_accept_rate").get<double>();
  r.reference_accept_rate = doc.at("reference_accept_rate").get<double>();
  r.verdict = doc.at("verdict").get<std::string>() == "fair" ? Verdict::fair : Verdict::unfair;
  const auto& c = doc.at("group_counts");
  r.counts.protected_accepted = c.at("protected_accepted").get<std::size_t>();
  r.counts.protected_rejected = c.at("protected_rejected").get<std::size_t>();
  r.counts.reference_accepted = c.at("reference_accepted").get<std::size_t>();
  r.counts.reference_rejected = c.at("reference_rejected").get<std::size_t>();
  return r;
}

std::string render_text(const FairnessReport& report, const GroupSpec& group) {
  std::ostringstream out;
  char line[160];
  const std::string reference = group.reference_values.empty() ? "others" : [&] {
    std::string s;
    for (const auto& r : group.reference_values) s += (s.empty() ? "" : "|") + r;
    return s;
  }();
  out << "group attribute : " << group.attribute << '\n';
  std::snprintf(line, sizeof line, "%-16s %10s %10s %12s\n", "group", "accepted", "rejected", "accept rate");
  out << line;
  std::snprintf(line, sizeof line, "%-16s %10zu %10zu %12.4f\n", group.protected_value.c_str(),
                report.counts.protected_accepted, report.counts.protected_rejected, report.protected_accept_rate);
  out << line;
  std::snprintf(line, sizeof line, "%-16s %10zu %10zu %12.4f\n", reference.c_str(), report.counts.reference_accepted,
                report.counts.reference_rejected, report.reference_accept_rate);
  out << line;
  std::snprintf(line, sizeof line, "disparate impact: %.4f\nverdict         : %s\n", report.disparate_impact,
                std::string(to_string(report.verdict)).c_str());
  out << line;
  return out.str();
}

}  // namespace loanfair
