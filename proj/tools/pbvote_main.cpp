#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pbvote/csv.hpp"
#include "pbvote/harness.hpp"

namespace fs = std::filesystem;
using namespace pbvote;

namespace {

std::string label_for_dir(const std::string& dir) {
  std::string label = fs::path(dir).filename().string();
  if (label.empty()) label = fs::path(dir).parent_path().filename().string();
  if (label.empty()) label = dir;
  for (char& c : label)
    if (c == ',' || c == '\n') c = '_';
  return label;
}

void cmd_validate_catalog(const std::string& path) {
  ProjectCatalog catalog = load_catalog_file(path);
  std::cout << "OK: " << catalog.projects.size()
            << " projects, one per (district x category x cost) combination\n";
}

void cmd_build_personas(const std::string& survey_path, const std::string& out_path) {
  auto records = load_survey_file(survey_path);
  std::ostringstream out;
  out << "participant_id,persona\n";
  for (const auto& record : records) {
    PersonaText persona = build_persona(record);
    out << csv::escape_field(persona.participant_id) << ','
        << csv::escape_field(persona.text) << '\n';
  }
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    std::ofstream file(out_path, std::ios::binary);
    if (!file) throw Error(Errc::SchemaError, "cannot write " + out_path);
    file << out.str();
    std::cout << "wrote " << records.size() << " personas to " << out_path << '\n';
  }
}

void cmd_run(const ExperimentConfig& config, const std::string& out_dir) {
  ExperimentRun run = run_experiment(config);
  std::string dir = persist_run(run, out_dir);
  std::cout << "run " << run.hash.substr(0, 12) << " -> " << dir << '\n'
            << "  responses: " << run.responses.size() << '\n'
            << "  ballots:   " << run.ballots.size() << '\n'
            << "  discarded: " << run.discarded << '\n';
}

void cmd_aggregate(const std::string& dir) {
  StoredRun run = load_run(dir);
  AggregateResult result = tally(run.ballots);
  {
    std::ofstream out(fs::path(dir) / "aggregate.csv", std::ios::binary);
    if (!out) throw Error(Errc::SchemaError, "cannot write aggregate.csv in " + dir);
    write_aggregate_csv(out, result);
  }
  std::cout << "rank,id,score\n";
  for (std::size_t i = 0; i < result.ranking.size(); ++i) {
    int id = result.ranking[i];
    std::cout << (i + 1) << ',' << id << ',' << result.scores.at(id) << '\n';
  }
}

void cmd_compare(const std::string& dir_a, const std::string& dir_b,
                 const std::string& catalog_override) {
  StoredRun a = load_run(dir_a);
  StoredRun b = load_run(dir_b);
  std::string catalog_path =
      catalog_override.empty() ? a.config.catalog_path : catalog_override;
  ProjectCatalog catalog = load_catalog_file(catalog_path);
  ComparisonReport report = compare_runs(group_from_run(a, label_for_dir(dir_a)),
                                         group_from_run(b, label_for_dir(dir_b)), catalog);
  std::cout << "tau: " << report.tau << '\n'
            << "jaccard ("
            << (report.jaccard_mode == PairedMode::MatchedById ? "matched" : "all-pairs")
            << "): mean " << report.jaccard_mean << " over " << report.jaccard_values.size()
            << " pairs\n";
  if (report.matched_vs_background)
    std::cout << "matched vs background: t " << report.matched_vs_background->statistic
              << ", p " << report.matched_vs_background->p_value << '\n';
  for (const auto& [attribute, deltas] : report.attribute_delta) {
    std::cout << attribute << " share delta:";
    for (const auto& [value, delta] : deltas) std::cout << ' ' << value << ' ' << delta;
    std::cout << '\n';
  }
}

void cmd_report(const std::vector<std::string>& dirs, const std::string& baseline_path,
                const std::string& survey_path, const std::string& catalog_override,
                const std::string& out_dir) {
  if (dirs.empty()) throw Error(Errc::EmptyBallotSet, "no run directories given");
  ReportInputs inputs;
  std::string catalog_path = catalog_override;
  for (const auto& dir : dirs) {
    StoredRun run = load_run(dir);
    if (catalog_path.empty()) catalog_path = run.config.catalog_path;
    inputs.runs.push_back(group_from_run(run, label_for_dir(dir)));
  }
  inputs.catalog = load_catalog_file(catalog_path);
  if (!baseline_path.empty()) {
    inputs.baseline = load_human_baseline(baseline_path, survey_path);
    inputs.survey = inputs.baseline->survey;
  } else if (!survey_path.empty()) {
    inputs.survey = load_survey_file(survey_path);
  }
  write_report(inputs, out_dir);
  std::cout << "report written to " << out_dir << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"participatory budgeting vote experiments"};
  app.require_subcommand(1);

  auto* validate = app.add_subcommand("validate-catalog", "check a project catalog file");
  std::string catalog_path;
  validate->add_option("csv", catalog_path, "catalog CSV")->required();

  auto* personas = app.add_subcommand("build-personas", "render persona texts from a survey");
  std::string survey_path, personas_out;
  personas->add_option("survey", survey_path, "survey CSV")->required();
  personas->add_option("--out", personas_out, "output CSV (default: stdout)");

  auto* run_cmd = app.add_subcommand("run", "run one experiment cell");
  ExperimentConfig config;
  std::string method_code_str = "kapp", backend_code = "mock", treatment_code = "orig";
  std::string run_out = "runs/run";
  run_cmd->add_option("--method", method_code_str, "appr|kapp|cumu|rank")
      ->check(CLI::IsMember({"appr", "kapp", "cumu", "rank"}));
  run_cmd->add_option("--backend", backend_code, "remote|mock|replay")
      ->check(CLI::IsMember({"remote", "mock", "replay"}));
  run_cmd->add_option("--temp", config.temperature, "sampling temperature in [0, 2]");
  run_cmd->add_flag("--persona", config.persona, "derive voters from the survey");
  run_cmd->add_flag("--cot", config.cot, "add the reflection turn before voting");
  run_cmd->add_option("--treatment", treatment_code, "orig|revorder|revid")
      ->check(CLI::IsMember({"orig", "revorder", "revid"}));
  run_cmd->add_option("--seed", config.seed, "run seed");
  run_cmd->add_option("--n", config.n_agents, "number of agents");
  run_cmd->add_option("--out", run_out, "run directory");
  run_cmd->add_option("--catalog", config.catalog_path, "catalog CSV");
  run_cmd->add_option("--survey", config.survey_path, "survey CSV (needed with --persona)");
  run_cmd->add_option("--templates", config.templates_dir, "prompt template directory");
  run_cmd->add_option("--cache", config.cache_path, "record/replay cache JSONL");
  run_cmd->add_option("--model", config.model_name, "model name for remote runs");
  run_cmd->add_option("--parallelism", config.parallelism, "worker threads");
  run_cmd->add_option("--rate-limit", config.rate_limit_per_s, "requests per second (0: off)");
  run_cmd->add_option("--weight-scale", config.mock.weight_scale,
                      "mock: category weight scale");
  run_cmd->add_option("--district-bonus", config.mock.district_bonus,
                      "mock: home district bonus");
  run_cmd->add_option("--cost-aversion", config.mock.cost_aversion,
                      "mock: bonus per 1000 CHF saved");

  auto* aggregate_cmd = app.add_subcommand("aggregate", "tally a stored run");
  std::string aggregate_dir;
  aggregate_cmd->add_option("dir", aggregate_dir, "run directory")->required();

  auto* compare_cmd = app.add_subcommand("compare", "compare two stored runs");
  std::string dir_a, dir_b, compare_catalog;
  compare_cmd->add_option("dir_a", dir_a, "first run directory")->required();
  compare_cmd->add_option("dir_b", dir_b, "second run directory")->required();
  compare_cmd->add_option("--catalog", compare_catalog, "catalog CSV override");

  auto* report_cmd = app.add_subcommand("report", "emit report tables for stored runs");
  std::vector<std::string> report_dirs;
  std::string baseline_path, report_survey, report_catalog, report_out = "report";
  report_cmd->add_option("dirs", report_dirs, "run directories")->required();
  report_cmd->add_option("--baseline", baseline_path, "human votes CSV");
  report_cmd->add_option("--survey", report_survey, "survey CSV for personas/self-alignment");
  report_cmd->add_option("--catalog", report_catalog, "catalog CSV override");
  report_cmd->add_option("--out", report_out, "report directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      cmd_validate_catalog(catalog_path);
    } else if (*personas) {
      cmd_build_personas(survey_path, personas_out);
    } else if (*run_cmd) {
      config.method = parse_method(method_code_str);
      config.backend = parse_backend(backend_code);
      config.treatment = parse_treatment(treatment_code);
      cmd_run(config, run_out);
    } else if (*aggregate_cmd) {
      cmd_aggregate(aggregate_dir);
    } else if (*compare_cmd) {
      cmd_compare(dir_a, dir_b, compare_catalog);
    } else if (*report_cmd) {
      cmd_report(report_dirs, baseline_path, report_survey, report_catalog, report_out);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
