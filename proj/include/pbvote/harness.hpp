#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pbvote/aggregation.hpp"
#include "pbvote/agents.hpp"
#include "pbvote/catalog.hpp"
#include "pbvote/metrics.hpp"
#include "pbvote/parsing.hpp"
#include "pbvote/persona.hpp"
#include "pbvote/prompting.hpp"

namespace pbvote {

/// Knobs for synthesized mock populations (no survey): per-agent random
/// category weights, home district by round-robin, shared bonus terms.
struct MockPopulationParams {
  double weight_scale = 1.5;    // weights drawn from U(0, weight_scale)
  double district_bonus = 0.75;
  double cost_aversion = 0.15;
};

struct ExperimentConfig {
  VotingMethod method;
  int n_agents = 180;
  double temperature = 1.0;
  bool persona = false;
  bool cot = false;
  ListTreatment treatment = ListTreatment::Original;
  BackendKind backend = BackendKind::Mock;
  std::uint64_t seed = 0;
  std::string survey_path;
  std::string catalog_path = "data/catalog.csv";
  std::string templates_dir;   // empty -> built-in defaults
  std::string cache_path;      // record/replay JSONL
  std::string model_name = "mock";
  int parallelism = 4;
  double rate_limit_per_s = 0.0;  // 0 disables the token bucket (remote only)
  MockPopulationParams mock;
};

std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& json_text);
std::string config_hash(const ExperimentConfig& config);

struct ExperimentRun {
  ExperimentConfig config;
  std::string hash;
  std::vector<RawResponse> responses;  // agent-index order
  std::vector<Ballot> ballots;         // parse successes, agent-index order
  std::vector<int> ballot_agents;      // agent index behind each ballot
  std::vector<ParseReport> parse_reports;  // one per response
  int discarded = 0;
};

/// Profile for agent i: survey-derived when persona is on, synthesized
/// (seeded by config.seed) otherwise.
MockVoterProfile mock_profile_for_agent(const ExperimentConfig& config, int agent_index,
                                        const std::vector<SurveyRecord>& survey);

ExperimentRun run_experiment(const ExperimentConfig& config);

/// Writes config.json, responses.jsonl, ballots.jsonl, run_stats.json and
/// aggregate.csv under dir. Refuses to overwrite an existing run: returns
/// the directory actually used (counter-suffixed sibling when dir is taken).
std::string persist_run(const ExperimentRun& run, const std::string& dir);

struct StoredRun {
  ExperimentConfig config;
  std::string hash;
  std::vector<Ballot> ballots;
  std::vector<ParseReport> parse_reports;
  int discarded = 0;
};

StoredRun load_run(const std::string& dir);

struct HumanBaseline {
  std::map<std::string, std::vector<Ballot>> ballots_by_method;  // keyed by method code
  std::vector<SurveyRecord> survey;
};

HumanBaseline load_human_baseline(const std::string& votes_path,
                                  const std::string& survey_path);

/// A comparable set of ballots from a run or a baseline slice.
struct VoteGroup {
  std::string label;
  VotingMethod method;
  std::vector<Ballot> ballots;
};

VoteGroup group_from_run(const StoredRun& run, const std::string& label);
VoteGroup group_from_run(const ExperimentRun& run, const std::string& label);
VoteGroup group_from_baseline(const HumanBaseline& baseline, const VotingMethod& method);

struct ComparisonReport {
  double tau = 0.0;                       // between the collective rankings
  PairedMode jaccard_mode = PairedMode::AllPairs;
  std::vector<double> jaccard_values;
  double jaccard_mean = 0.0;
  // shares of a minus shares of b, per attribute value
  std::map<std::string, std::map<std::string, double>> attribute_delta;
  // Welch test of the matched sample against the all-pairs background
  // (only when voter ids align)
  std::optional<StatResult> matched_vs_background;
};

ComparisonReport compare_runs(const VoteGroup& a, const VoteGroup& b,
                              const ProjectCatalog& catalog);

struct ReportInputs {
  std::vector<VoteGroup> runs;
  std::optional<HumanBaseline> baseline;
  ProjectCatalog catalog;
  // participant_id -> record, used for self_alignment.csv
  std::vector<SurveyRecord> survey;
};

/// Emits tau_matrix.csv, jaccard_dist.csv, attribute_shares.csv,
/// histogram.csv, self_alignment.csv and stats.csv under out_dir.
void write_report(const ReportInputs& inputs, const std::string& out_dir);

}  // namespace pbvote
