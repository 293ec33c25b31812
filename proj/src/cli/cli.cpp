#include "loanfair/cli.hpp"

#include <algorithm>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "loanfair/api.hpp"
#include "loanfair/cohort.hpp"
#include "loanfair/csv.hpp"
#include "loanfair/culture.hpp"
#include "loanfair/error.hpp"
#include "loanfair/keyvalue.hpp"
#include "loanfair/server.hpp"
#include "loanfair/study_report.hpp"

#ifndef LOANFAIR_OPENAPI_PATH
#define LOANFAIR_OPENAPI_PATH ""
#endif

namespace loanfair {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct DataOptions {
  std::string dataset;
  std::size_t synthetic_n = 1000;
  double bias = kDefaultBiasStrength;
  std::uint64_t seed = 1;
  double max_missing_rate = kDefaultMaxMissingRate;
  double train_fraction = kDefaultTrainFraction;
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
  auto* ds = cmd->add_option("--dataset", d.dataset, "CSV file with a sidecar <name>.schema.json");
  auto* n = cmd->add_option("--synthetic-n", d.synthetic_n, "Size of a generated dataset")->check(CLI::Range(100, 10'000'000));
  ds->excludes(n);
  cmd->add_option("--bias", d.bias, "Planted penalty of a generated dataset");
  cmd->add_option("--seed", d.seed, "Seed for generation and the train/test split");
  cmd->add_option("--max-missing-rate", d.max_missing_rate, "Attributes missing more often are dropped")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--train-fraction", d.train_fraction, "Share of applications used for training")
      ->check(CLI::Range(0.0, 1.0));
}

fs::path schema_path(const fs::path& csv_path) {
  fs::path p = csv_path;
  return p.replace_extension(".schema.json");
}

json data_config(const DataOptions& d) {
  json c = {{"seed", d.seed}, {"max_missing_rate", d.max_missing_rate}, {"train_fraction", d.train_fraction}};
  if (d.dataset.empty()) {
    c["synthetic_n"] = d.synthetic_n;
    c["bias"] = d.bias;
  } else {
    c["dataset"] = d.dataset;
  }
  return c;
}

Dataset load_raw(const DataOptions& d) {
  if (d.dataset.empty()) return generate_synthetic(d.synthetic_n, d.seed, d.bias);
  return load_csv(d.dataset, load_schema(schema_path(d.dataset)));
}

Dataset load_clean(const DataOptions& d) { return prune_attributes(load_raw(d), d.max_missing_rate); }

std::vector<Application> select_applications(const DataOptions& d, const std::string& which) {
  const Dataset clean = load_clean(d);
  if (which == "all") return clean.applications();
  auto [train_set, test_set] = split(clean, d.train_fraction, d.seed);
  return which == "test" ? test_set.applications() : train_set.applications();
}

void write_json(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// Reads id-free decision files: a header with `group` and `decision` columns.
std::vector<GroupDecision> load_decisions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open decisions file " + path.string());
  const auto lines = csv::read_lines(in);
  if (lines.empty()) throw ParseError(1, "missing header");
  const auto header = csv::split_record(lines[0]);
  const auto col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(1, "missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t g = col("group"), dcol = col("decision");
  std::vector<GroupDecision> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    const auto fields = csv::split_record(lines[i]);
    if (fields.size() != header.size()) throw ParseError(i + 1, "expected " + std::to_string(header.size()) + " fields");
    try {
      out.push_back({csv::trim(fields[g]), parse_decision(csv::trim(fields[dcol]))});
    } catch (const std::exception& e) {
      throw ParseError(i + 1, e.what());
    }
  }
  return out;
}

GroupSpec make_group(const std::string& attribute, const std::string& protected_value,
                     const std::vector<std::string>& reference) {
  return GroupSpec{attribute, protected_value, reference};
}

// Expands `--config file` into flags that were not given explicitly.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::string config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (config.empty()) return out;
  for (auto [key, value] : load_key_values(config)) {
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string flag = "--" + key;
    const bool given = std::any_of(out.begin(), out.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given || value == "false") continue;
    out.push_back(flag);
    if (value != "true") out.push_back(value);
  }
  return out;
}

std::vector<EventRecord> read_logs(const std::vector<std::string>& paths) {
  std::vector<EventRecord> events;
  for (const auto& p : paths) {
    fs::path path = fs::is_directory(p) ? fs::path(p) / "events.ndjson" : fs::path(p);
    auto part = read_event_log(path);
    events.insert(events.end(), part.begin(), part.end());
  }
  return events;
}

HttpServer* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Loan decision fairness toolkit", "loanfair"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  DataOptions data;
  std::string out_path, model_path, group_attribute = "nationality", protected_value = "foreign";
  std::vector<std::string> reference;
  double l2 = 1.0;

  // generate
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset and its schema");
  generate->add_option("--synthetic-n", data.synthetic_n, "Number of applications")->check(CLI::Range(100, 10'000'000));
  generate->add_option("--seed", data.seed, "Generator seed");
  generate->add_option("--bias", data.bias, "Planted penalty for the protected group");
  generate->add_option("--out", out_path, "CSV path")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Fit the scoring model on the training split");
  add_data_options(train_cmd, data);
  train_cmd->add_option("--l2", l2, "L2 regularization strength")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--out", out_path, "Model file")->required();
  std::string test_out;
  train_cmd->add_option("--test-out", test_out, "Also write the test split as CSV");

  // audit
  auto* audit_cmd = app.add_subcommand("audit", "Disparate impact of the model's decisions");
  add_data_options(audit_cmd, data);
  auto* model_opt = audit_cmd->add_option("--model", model_path, "Model file");
  std::string decisions_path, audit_split = "all";
  auto* decisions_opt = audit_cmd->add_option("--decisions", decisions_path, "CSV with group and decision columns");
  model_opt->excludes(decisions_opt);
  audit_cmd->add_option("--applications", audit_split, "Which applications to audit")
      ->check(CLI::IsMember({"all", "train", "test"}));
  audit_cmd->add_option("--group-attribute", group_attribute, "Categorical attribute defining the groups");
  audit_cmd->add_option("--protected", protected_value, "Protected group label");
  audit_cmd->add_option("--reference", reference, "Reference group labels (default: all others)");
  audit_cmd->add_option("--out", out_path, "Write the report as JSON");

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "Replay a scripted cohort of weight suggestions");
  add_data_options(simulate_cmd, data);
  std::string cohort_path, report_path, sim_split = "all";
  simulate_cmd->add_option("--model", model_path, "Model file")->required();
  simulate_cmd->add_option("--cohort", cohort_path, "Cohort spec (key = value)")->required();
  simulate_cmd->add_option("--applications", sim_split, "Applications the cohort reviews")
      ->check(CLI::IsMember({"all", "train", "test"}));
  simulate_cmd->add_option("--group-attribute", group_attribute, "Categorical attribute defining the groups");
  simulate_cmd->add_option("--protected", protected_value, "Protected group label");
  simulate_cmd->add_option("--out", out_path, "Event log to write")->required();
  simulate_cmd->add_option("--report", report_path, "Write the fairness delta as JSON");

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "Culture-grouped study report from event logs");
  add_data_options(analyze_cmd, data);
  std::vector<std::string> logs;
  std::string culture_dir, analyze_split = "test";
  double alpha = 0.05;
  analyze_cmd->add_option("--log", logs, "Event log files or log directories");
  analyze_cmd->add_option("--log-dir", logs, "Log directory (same as --log)");
  analyze_cmd->add_option("--culture-dir", culture_dir, "Directory with hofstede_matrix.csv, neighbors.csv, country_aliases.csv");
  analyze_cmd->add_option("--model", model_path, "Model file; enables the fairness impact block");
  analyze_cmd->add_option("--applications", analyze_split, "Applications the suggestions refer to")
      ->check(CLI::IsMember({"all", "train", "test"}));
  analyze_cmd->add_option("--group-attribute", group_attribute, "Categorical attribute defining the groups");
  analyze_cmd->add_option("--protected", protected_value, "Protected group label");
  analyze_cmd->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  analyze_cmd->add_option("--out", out_path, "Write the report as JSON");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "HTTP API over the test split");
  add_data_options(serve_cmd, data);
  std::string log_dir, host = "127.0.0.1";
  int port = 8080;
  serve_cmd->add_option("--model", model_path, "Model file")->required();
  serve_cmd->add_option("--log-dir", log_dir, "Event log directory")->required();
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--group-attribute", group_attribute, "Default group attribute for reports");
  serve_cmd->add_option("--protected", protected_value, "Default protected group label");

  // log-export / log-import
  auto* export_cmd = app.add_subcommand("log-export", "Copy a service event log to a file");
  export_cmd->add_option("--log-dir", log_dir, "Event log directory")->required();
  export_cmd->add_option("--out", out_path, "Destination NDJSON file")->required();
  auto* import_cmd = app.add_subcommand("log-import", "Load an NDJSON event log into a log directory");
  std::string in_path;
  bool append = false;
  import_cmd->add_option("--in", in_path, "NDJSON file")->required();
  import_cmd->add_option("--log-dir", log_dir, "Event log directory")->required();
  import_cmd->add_flag("--append", append, "Append to an existing log");

  try {
    auto args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.code() << ": " << e.what() << "\n";
    return 2;
  }

  try {
    if (*generate) {
      const Dataset ds = generate_synthetic(data.synthetic_n, data.seed, data.bias);
      if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
      save_csv(ds, out_path);
      save_schema(ds.schema(), schema_path(out_path));
      out << "generated " << ds.size() << " applications (" << ds.attributes().size() << " attributes, seed "
          << data.seed << ", bias " << data.bias << ")\n"
          << "csv: " << out_path << "\nschema: " << schema_path(out_path).string() << "\n";
    } else if (*train_cmd) {
      const Dataset clean = load_clean(data);
      auto [train_set, test_set] = split(clean, data.train_fraction, data.seed);
      TrainOptions opts;
      opts.l2_strength = l2;
      opts.seed = data.seed;
      const ScoringModel model = train(train_set, opts);
      std::vector<Decision> truth;
      for (const auto& a : test_set.applications()) truth.push_back(*a.label);
      const double ba = balanced_accuracy(predict_all(model, test_set.applications()), truth);
      json config = data_config(data);
      config["command"] = "train";
      config["l2"] = l2;
      config["pruned"] = clean.cleaning().pruned;
      config["split"] = {{"train", train_set.size()}, {"test", test_set.size()}};
      config["balanced_accuracy"] = ba;
      save_model(model, out_path, config);
      if (!test_out.empty()) {
        save_csv(test_set, test_out);
        save_schema(test_set.schema(), schema_path(test_out));
      }
      out << "attributes: " << model.size() << " (pruned " << clean.cleaning().pruned.size() << ")\n"
          << "split: train=" << train_set.size() << " test=" << test_set.size() << "\n"
          << "iterations: " << model.info().iterations << "\n"
          << "balanced_accuracy: " << fixed(ba) << "\n"
          << "model: " << out_path << "\n";
    } else if (*audit_cmd) {
      FairnessReport report;
      GroupSpec group = make_group(group_attribute, protected_value, reference);
      json config = {{"command", "audit"},
                     {"group_attribute", group_attribute},
                     {"protected", protected_value},
                     {"reference", reference}};
      if (!decisions_path.empty()) {
        report = disparate_impact(load_decisions(decisions_path), group);
        config["decisions"] = decisions_path;
      } else {
        if (model_path.empty()) throw ValidationError("model", "--model or --decisions is required");
        const ScoringModel model = load_model(model_path);
        if (!model.has_attribute(group_attribute))
          throw ValidationError("group-attribute", "'" + group_attribute + "' is not a model attribute");
        validate(group, model.attributes()[model.index_of(group_attribute)]);
        const auto apps = select_applications(data, audit_split);
        report = audit(model, apps, group);
        config.update(data_config(data));
        config["model"] = model_path;
        config["applications"] = audit_split;
        config["n"] = apps.size();
      }
      out << render_text(report, group);
      if (!out_path.empty()) {
        json doc = to_json(report);
        doc["config"] = config;
        write_json(out_path, doc);
      }
    } else if (*simulate_cmd) {
      const ScoringModel model = load_model(model_path);
      CohortSpec spec = load_cohort_spec(cohort_path);
      const GroupSpec group = make_group(group_attribute, protected_value, {});
      const auto apps = select_applications(data, sim_split);
      const auto suggestions = simulate_cohort(spec, model, apps);
      const auto events = cohort_events(spec, suggestions);
      {
        if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
        std::ofstream log(out_path, std::ios::binary);
        if (!log) throw Error("io_error", "cannot write " + out_path);
        write_event_log(events, log);
      }
      const auto adjusted = aggregate(suggestions, model, apps);
      const auto delta = fairness_delta(adjusted, model, apps, group);
      out << "cohort: " << spec.cohort_size << " users, " << suggestions.size() << " suggestions, "
          << adjusted.overridden_count() << " decisions overridden\n"
          << "di_before: " << fixed(delta.before.disparate_impact) << " (" << to_string(delta.before.verdict) << ")\n"
          << "di_after: " << fixed(delta.after.disparate_impact) << " (" << to_string(delta.after.verdict) << ")\n"
          << "events: " << out_path << "\n";
      if (!report_path.empty()) {
        json config = data_config(data);
        config["command"] = "simulate";
        config["model"] = model_path;
        config["applications"] = sim_split;
        config["cohort"] = to_json(spec);
        write_json(report_path, {{"before", to_json(delta.before)},
                                 {"after", to_json(delta.after)},
                                 {"suggestions", suggestions.size()},
                                 {"overridden", adjusted.overridden_count()},
                                 {"config", config}});
      }
    } else if (*analyze_cmd) {
      if (logs.empty()) throw ValidationError("log", "at least one --log or --log-dir is required");
      const auto events = read_logs(logs);
      std::vector<std::string> order;
      std::map<std::string, SessionCountry> countries;
      std::map<std::string, int> post_ratings;
      std::vector<FairnessJudgment> judgments;
      std::map<std::pair<std::string, std::string>, WeightSuggestion> latest;
      auto note_session = [&](const std::string& id) {
        if (!countries.count(id)) {
          order.push_back(id);
          countries[id].session_id = id;
        }
      };
      for (const auto& e : events) {
        if (e.session_id.empty()) continue;
        note_session(e.session_id);
        if (e.type == event_type::kSession) {
          auto& c = countries[e.session_id];
          const auto text = [&](const char* key) {
            return e.payload.contains(key) && e.payload.at(key).is_string() ? e.payload.at(key).get<std::string>()
                                                                            : std::string{};
          };
          c.registered_residence = text("registered_residence");
          c.registered_birth_country = text("registered_birth_country");
          c.questionnaire_residence = text("questionnaire_residence");
          c.questionnaire_nationality = text("questionnaire_nationality");
          if (c.questionnaire_residence.empty()) c.questionnaire_residence = text("country");
        } else if (e.type == event_type::kJudgment) {
          judgments.push_back(judgment_from_event(e));
        } else if (e.type == event_type::kSuggestion) {
          auto s = suggestion_from_event(e);
          latest[{s.session_id, s.application_id}] = std::move(s);
        } else if (e.type == event_type::kPostRating && e.payload.contains("rating")) {
          post_ratings[e.session_id] = e.payload.at("rating").get<int>();
        }
      }
      auto metrics = session_metrics(order, judgments);
      for (auto& m : metrics)
        if (auto it = post_ratings.find(m.session_id); it != post_ratings.end()) m.post_rating = it->second;

      const CultureTable table =
          culture_dir.empty() ? CultureTable::load_bundled()
                              : CultureTable::load(fs::path(culture_dir) / "hofstede_matrix.csv",
                                                   fs::path(culture_dir) / "neighbors.csv",
                                                   fs::path(culture_dir) / "country_aliases.csv");
      std::vector<SessionCountry> session_countries;
      for (const auto& id : order) session_countries.push_back(countries[id]);
      const auto assignment = assign_groups(session_countries, table, dimension_means(table));

      std::optional<ImpactBlock> impact;
      if (!model_path.empty()) {
        const ScoringModel model = load_model(model_path);
        const auto apps = select_applications(data, analyze_split);
        std::vector<WeightSuggestion> suggestions;
        for (auto& [key, s] : latest) suggestions.push_back(s);
        impact = impact_by_group(assignment, suggestions, model, apps, make_group(group_attribute, protected_value, {}));
      }
      const auto report = study_report(metrics, assignment, impact, alpha);
      out << render_text(report);
      if (!out_path.empty()) {
        json doc = to_json(report);
        json config = {{"command", "analyze"}, {"logs", logs}, {"alpha", alpha}};
        if (!model_path.empty()) {
          config.update(data_config(data));
          config["model"] = model_path;
          config["applications"] = analyze_split;
        }
        doc["config"] = config;
        write_json(out_path, doc);
      }
    } else if (*serve_cmd) {
      ServiceOptions options;
      options.group = make_group(group_attribute, protected_value, {});
      options.log_dir = log_dir;
      options.openapi_path = LOANFAIR_OPENAPI_PATH;
      ApiCore core(load_model(model_path), select_applications(data, "test"), options);
      HttpServer server(core);
      const int bound = server.bind(host, port);
      out << "serving " << core.applications().size() << " applications on http://" << host << ":" << bound
          << " (log " << core.log_path().string() << ", " << core.snapshot().events << " events replayed)\n";
      out.flush();
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      server.listen();
      g_server = nullptr;
    } else if (*export_cmd) {
      const auto events = read_event_log(fs::path(log_dir) / "events.ndjson");
      std::ofstream dst(out_path, std::ios::binary);
      if (!dst) throw Error("io_error", "cannot write " + out_path);
      write_event_log(events, dst);
      out << "exported " << events.size() << " events to " << out_path << "\n";
    } else if (*import_cmd) {
      const auto events = read_event_log(fs::path(in_path));
      const fs::path target = fs::path(log_dir) / "events.ndjson";
      if (!append && fs::exists(target) && fs::file_size(target) > 0)
        throw Error("io_error", target.string() + " already holds events; pass --append to add to it");
      EventLogWriter writer(target);
      for (const auto& e : events) writer.append(e);
      out << "imported " << events.size() << " events into " << target.string() << "\n";
    }
  } catch (const Error& e) {
    err << "error: " << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace loanfair
