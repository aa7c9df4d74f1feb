#include "pbvote/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "pbvote/csv.hpp"

namespace fs = std::filesystem;

namespace pbvote {
namespace {

using json = nlohmann::json;

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

std::uint64_t agent_seed(std::uint64_t run_seed, int agent_index) {
  return mix64(mix64(run_seed) ^ static_cast<std::uint64_t>(agent_index));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::SchemaError, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config) {
  json j = {{"method",
             {{"kind", method_code(config.method)},
              {"k", config.method.k},
              {"points", config.method.points}}},
            {"n_agents", config.n_agents},
            {"temperature", config.temperature},
            {"persona", config.persona},
            {"cot", config.cot},
            {"treatment", to_string(config.treatment)},
            {"backend", to_string(config.backend)},
            {"seed", config.seed},
            {"survey_path", config.survey_path},
            {"catalog_path", config.catalog_path},
            {"templates_dir", config.templates_dir},
            {"cache_path", config.cache_path},
            {"model_name", config.model_name},
            {"parallelism", config.parallelism},
            {"rate_limit_per_s", config.rate_limit_per_s},
            {"mock",
             {{"weight_scale", config.mock.weight_scale},
              {"district_bonus", config.mock.district_bonus},
              {"cost_aversion", config.mock.cost_aversion}}}};
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& json_text) {
  try {
    json j = json::parse(json_text);
    ExperimentConfig config;
    config.method = parse_method(j.at("method").at("kind").get<std::string>());
    config.method.k = j.at("method").at("k").get<int>();
    config.method.points = j.at("method").at("points").get<int>();
    config.n_agents = j.at("n_agents").get<int>();
    config.temperature = j.at("temperature").get<double>();
    config.persona = j.at("persona").get<bool>();
    config.cot = j.at("cot").get<bool>();
    config.treatment = parse_treatment(j.at("treatment").get<std::string>());
    config.backend = parse_backend(j.at("backend").get<std::string>());
    config.seed = j.at("seed").get<std::uint64_t>();
    config.survey_path = j.at("survey_path").get<std::string>();
    config.catalog_path = j.at("catalog_path").get<std::string>();
    config.templates_dir = j.at("templates_dir").get<std::string>();
    config.cache_path = j.at("cache_path").get<std::string>();
    config.model_name = j.at("model_name").get<std::string>();
    config.parallelism = j.at("parallelism").get<int>();
    config.rate_limit_per_s = j.at("rate_limit_per_s").get<double>();
    config.mock.weight_scale = j.at("mock").at("weight_scale").get<double>();
    config.mock.district_bonus = j.at("mock").at("district_bonus").get<double>();
    config.mock.cost_aversion = j.at("mock").at("cost_aversion").get<double>();
    return config;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, std::string("bad experiment config: ") + e.what());
  }
}

std::string config_hash(const ExperimentConfig& config) {
  return sha256_hex(config_to_json(config));
}

MockVoterProfile mock_profile_for_agent(const ExperimentConfig& config, int agent_index,
                                        const std::vector<SurveyRecord>& survey) {
  MockVoterProfile profile;
  profile.district_bonus = config.mock.district_bonus;
  profile.cost_aversion = config.mock.cost_aversion;
  if (config.persona) {
    if (survey.empty())
      throw Error(Errc::SurveyTooSmall, "persona profiles need survey records");
    const SurveyRecord& record = survey[static_cast<std::size_t>(agent_index) % survey.size()];
    for (const auto& ts : record.topics)
      profile.category_weights[static_cast<int>(topic_to_category(ts.topic))] =
          ts.score / 25.0;
    profile.home_district = record.district;
    profile.noise_seed = 0;  // the survey scores already differentiate voters
    return profile;
  }
  std::uint64_t base = mix64(config.seed ^ mix64(static_cast<std::uint64_t>(agent_index) +
                                                 0x51ED2701ULL));
  for (int c = 0; c < 3; ++c)
    profile.category_weights[c] =
        to_unit(mix64(base + static_cast<std::uint64_t>(c))) * config.mock.weight_scale;
  profile.home_district = static_cast<District>(agent_index % 4);
  profile.noise_seed = mix64(base + 7) | 1ULL;  // always jitter synthesized voters
  return profile;
}

ExperimentRun run_experiment(const ExperimentConfig& config) {
  if (config.n_agents < 1) throw Error(Errc::DegenerateInput, "need at least one agent");
  if (config.temperature < 0.0 || config.temperature > 2.0)
    throw Error(Errc::DegenerateInput, "temperature must be in [0, 2]");

  ExperimentRun run;
  run.config = config;
  run.hash = config_hash(config);

  ProjectCatalog catalog = load_catalog_file(config.catalog_path);
  PresentedList list = apply_list_treatment(catalog, config.treatment);
  PromptTemplates templates = config.templates_dir.empty()
                                  ? default_templates()
                                  : load_templates(config.templates_dir);

  std::vector<SurveyRecord> survey;
  if (config.persona) {
    if (config.survey_path.empty())
      throw Error(Errc::SurveyTooSmall, "persona runs need a survey file");
    survey = load_survey_file(config.survey_path);
    if (static_cast<int>(survey.size()) < config.n_agents)
      throw Error(Errc::SurveyTooSmall,
                  "survey has " + std::to_string(survey.size()) + " records, need " +
                      std::to_string(config.n_agents));
  }

  std::vector<PromptBundle> bundles;
  std::vector<std::string> voter_ids;
  bundles.reserve(static_cast<std::size_t>(config.n_agents));
  for (int i = 0; i < config.n_agents; ++i) {
    std::optional<PersonaText> persona;
    if (config.persona) persona = build_persona(survey[static_cast<std::size_t>(i)]);
    bundles.push_back(assemble(templates, persona, config.method, list, config.cot));
    voter_ids.push_back(config.persona ? survey[static_cast<std::size_t>(i)].participant_id
                                       : "agent_" + std::to_string(i));
  }

  std::shared_ptr<ResponseCache> cache;
  if (!config.cache_path.empty()) cache = std::make_shared<ResponseCache>(config.cache_path);

  std::unique_ptr<AgentBackend> backend;
  switch (config.backend) {
    case BackendKind::Mock: {
      std::vector<MockVoterProfile> profiles;
      for (int i = 0; i < config.n_agents; ++i)
        profiles.push_back(mock_profile_for_agent(config, i, survey));
      backend = std::make_unique<MockAgent>(list, std::move(profiles));
      break;
    }
    case BackendKind::Replay: {
      if (!cache) throw Error(Errc::CacheMiss, "replay runs need a cache path");
      backend = std::make_unique<ReplayAgent>(cache);
      break;
    }
    case BackendKind::Remote: {
      backend = std::make_unique<RemoteAgent>(remote_config_from_env());
      break;
    }
  }
  if (cache && config.backend != BackendKind::Replay)
    backend = std::make_unique<RecordingAgent>(std::move(backend), cache);

  std::optional<TokenBucket> bucket;
  if (config.rate_limit_per_s > 0.0)
    bucket.emplace(config.rate_limit_per_s, config.rate_limit_per_s);

  int n = config.n_agents;
  std::vector<RawResponse> responses(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      if (bucket) bucket->acquire();
      AgentParams params;
      params.temperature = config.temperature;
      params.seed = agent_seed(config.seed, i);
      params.model_name = config.model_name;
      params.agent_index = i;
      try {
        responses[static_cast<std::size_t>(i)] =
            backend->chat(bundles[static_cast<std::size_t>(i)], params);
      } catch (...) {
        failures[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  int threads = std::clamp(config.parallelism, 1, 64);
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  // backend failures abort the run; a partial population would mislead
  for (const auto& failure : failures)
    if (failure) std::rethrow_exception(failure);

  for (int i = 0; i < n; ++i) {
    try {
      auto [ballot, report] =
          parse_response(responses[static_cast<std::size_t>(i)].text, list, config.method);
      ballot.voter_id = voter_ids[static_cast<std::size_t>(i)];
      run.ballots.push_back(std::move(ballot));
      run.ballot_agents.push_back(i);
      run.parse_reports.push_back(std::move(report));
    } catch (const ParseError& e) {
      ++run.discarded;
      run.parse_reports.push_back(e.report());
    }
  }
  run.responses = std::move(responses);
  return run;
}

std::string persist_run(const ExperimentRun& run, const std::string& dir) {
  fs::path chosen(dir);
  for (int counter = 1; fs::exists(chosen); ++counter)
    chosen = fs::path(dir + "_" + std::to_string(counter));
  fs::create_directories(chosen);

  {
    std::ofstream out(chosen / "config.json", std::ios::binary);
    json j = {{"config", json::parse(config_to_json(run.config))},
              {"config_hash", run.hash}};
    out << j.dump(2) << '\n';
  }
  {
    std::ofstream out(chosen / "responses.jsonl", std::ios::binary);
    for (std::size_t i = 0; i < run.responses.size(); ++i) {
      const RawResponse& r = run.responses[i];
      json j = {{"agent_index", static_cast<int>(i)},
                {"backend", to_string(r.backend)},
                {"turns_echo", r.turns_echo},
                {"latency_ms", r.latency_ms},
                {"text", r.text}};
      out << j.dump() << '\n';
    }
  }
  {
    std::ofstream out(chosen / "ballots.jsonl", std::ios::binary);
    for (std::size_t i = 0; i < run.ballots.size(); ++i) {
      std::size_t agent = static_cast<std::size_t>(run.ballot_agents[i]);
      out << ballot_to_jsonl(run.ballots[i], run.parse_reports[agent]) << '\n';
    }
  }
  {
    std::ofstream out(chosen / "run_stats.json", std::ios::binary);
    json j = {{"n_responses", run.responses.size()},
              {"n_ballots", run.ballots.size()},
              {"discarded", run.discarded}};
    out << j.dump(2) << '\n';
  }
  if (!run.ballots.empty()) {
    std::ofstream out(chosen / "aggregate.csv", std::ios::binary);
    write_aggregate_csv(out, tally(run.ballots));
  }
  return chosen.string();
}

StoredRun load_run(const std::string& dir) {
  fs::path base(dir);
  StoredRun stored;
  {
    json j;
    try {
      j = json::parse(read_text_file((base / "config.json").string()));
      stored.config = config_from_json(j.at("config").dump());
      stored.hash = j.at("config_hash").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(Errc::SchemaError, std::string("bad config.json: ") + e.what());
    }
  }
  {
    std::ifstream in(base / "ballots.jsonl");
    if (!in) throw Error(Errc::SchemaError, "cannot open " + (base / "ballots.jsonl").string());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto [ballot, report] = ballot_from_jsonl(line);
      stored.ballots.push_back(std::move(ballot));
      stored.parse_reports.push_back(std::move(report));
    }
  }
  {
    try {
      json j = json::parse(read_text_file((base / "run_stats.json").string()));
      stored.discarded = j.at("discarded").get<int>();
    } catch (const json::exception& e) {
      throw Error(Errc::SchemaError, std::string("bad run_stats.json: ") + e.what());
    }
  }
  return stored;
}

namespace {

std::vector<std::string> split_tokens(const std::string& text, char sep) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (c == sep) {
      tokens.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  tokens.push_back(current);
  for (auto& token : tokens) {
    std::size_t begin = token.find_first_not_of(" \t");
    std::size_t end = token.find_last_not_of(" \t");
    token = begin == std::string::npos ? "" : token.substr(begin, end - begin + 1);
  }
  return tokens;
}

int baseline_project_id(const std::string& token) {
  int id;
  try {
    id = std::stoi(token);
  } catch (const std::exception&) {
    throw Error(Errc::SchemaError, "non-numeric project id '" + token + "'");
  }
  if (id < 1 || id > kCatalogSize)
    throw Error(Errc::UnknownProjectId, "project id " + std::to_string(id) + " out of range");
  return id;
}

}  // namespace

HumanBaseline load_human_baseline(const std::string& votes_path,
                                  const std::string& survey_path) {
  HumanBaseline baseline;
  if (!survey_path.empty()) baseline.survey = load_survey_file(survey_path);
  std::set<std::string> survey_ids;
  for (const auto& record : baseline.survey) survey_ids.insert(record.participant_id);

  std::ifstream in(votes_path);
  if (!in) throw Error(Errc::SchemaError, "cannot open " + votes_path);
  auto records = csv::read_records(in);
  if (records.empty() ||
      records.front() != std::vector<std::string>{"participant_id", "method", "content"})
    throw Error(Errc::SchemaError, "bad baseline header");

  for (std::size_t row = 1; row < records.size(); ++row) {
    const auto& fields = records[row];
    if (fields.size() != 3) throw Error(Errc::SchemaError, "bad baseline row");
    Ballot ballot;
    ballot.voter_id = fields[0];
    ballot.method = parse_method(fields[1]);
    if (!survey_ids.empty() && !survey_ids.count(ballot.voter_id))
      throw Error(Errc::IdMismatch, "participant " + ballot.voter_id + " not in survey");

    auto tokens = split_tokens(fields[2], ';');
    switch (ballot.method.kind) {
      case VotingMethod::Kind::Approval:
      case VotingMethod::Kind::KApproval:
        for (const auto& token : tokens) {
          if (token.empty()) continue;
          if (!ballot.approvals.insert(baseline_project_id(token)).second)
            throw Error(Errc::DuplicateId, "baseline repeats project id");
        }
        if (ballot.approvals.empty())
          throw Error(Errc::NoVotesFound, "empty baseline ballot");
        if (ballot.method.kind == VotingMethod::Kind::KApproval &&
            static_cast<int>(ballot.approvals.size()) != ballot.method.k)
          throw Error(Errc::SchemaError, "baseline k-approval ballot has wrong size");
        break;
      case VotingMethod::Kind::Cumulative: {
        for (const auto& token : tokens) {
          if (token.empty()) continue;
          auto colon = token.find(':');
          if (colon == std::string::npos)
            throw Error(Errc::SchemaError, "cumulative token needs id:points");
          int id = baseline_project_id(token.substr(0, colon));
          double points;
          try {
            points = std::stod(token.substr(colon + 1));
          } catch (const std::exception&) {
            throw Error(Errc::NonNumericPoints, "bad point count in '" + token + "'");
          }
          if (points < 0.0) throw Error(Errc::SchemaError, "negative points");
          if (ballot.allocation.count(id))
            throw Error(Errc::DuplicateId, "baseline repeats project id");
          ballot.allocation[id] = points;
        }
        double sum = 0.0;
        for (const auto& [id, pts] : ballot.allocation) sum += pts;
        if (sum <= 0.0) throw Error(Errc::ZeroAllocation, "baseline ballot has no points");
        break;
      }
      case VotingMethod::Kind::Ranked: {
        std::set<int> seen;
        for (const auto& token : tokens) {
          if (token.empty()) continue;
          int id = baseline_project_id(token);
          if (!seen.insert(id).second)
            throw Error(Errc::DuplicateId, "baseline repeats project id");
          ballot.ranking.push_back(id);
        }
        if (ballot.ranking.empty())
          throw Error(Errc::NoVotesFound, "empty baseline ballot");
        break;
      }
    }
    baseline.ballots_by_method[method_code(ballot.method)].push_back(std::move(ballot));
  }
  return baseline;
}

VoteGroup group_from_run(const StoredRun& run, const std::string& label) {
  return {label, run.config.method, run.ballots};
}

VoteGroup group_from_run(const ExperimentRun& run, const std::string& label) {
  return {label, run.config.method, run.ballots};
}

VoteGroup group_from_baseline(const HumanBaseline& baseline, const VotingMethod& method) {
  auto it = baseline.ballots_by_method.find(method_code(method));
  if (it == baseline.ballots_by_method.end() || it->second.empty())
    throw Error(Errc::NoVotesFound, "baseline has no " + method_code(method) + " ballots");
  return {"human_" + method_code(method), method, it->second};
}

namespace {

VoteSet vote_set_of(const Ballot& ballot) {
  VoteSet votes;
  switch (ballot.method.kind) {
    case VotingMethod::Kind::Approval:
    case VotingMethod::Kind::KApproval:
      votes.ids = ballot.approvals;
      break;
    case VotingMethod::Kind::Cumulative:
      for (const auto& [id, pts] : ballot.allocation)
        if (pts > 0.0) votes.ids.insert(id);
      break;
    case VotingMethod::Kind::Ranked:
      votes.ids.insert(ballot.ranking.begin(), ballot.ranking.end());
      break;
  }
  return votes;
}

LabeledVotes labeled_votes(const VoteGroup& group) {
  LabeledVotes votes;
  for (const auto& ballot : group.ballots)
    votes.emplace_back(ballot.voter_id, vote_set_of(ballot));
  return votes;
}

bool voter_ids_align(const LabeledVotes& a, const LabeledVotes& b) {
  if (a.size() != b.size()) return false;
  std::vector<std::string> ids_a, ids_b;
  for (const auto& [id, votes] : a) ids_a.push_back(id);
  for (const auto& [id, votes] : b) ids_b.push_back(id);
  std::sort(ids_a.begin(), ids_a.end());
  std::sort(ids_b.begin(), ids_b.end());
  return ids_a == ids_b;
}

const char* attribute_name(ProjectAttribute attribute) {
  switch (attribute) {
    case ProjectAttribute::District: return "district";
    case ProjectAttribute::Category: return "category";
    case ProjectAttribute::Cost: return "cost";
  }
  return "";
}

constexpr ProjectAttribute kAttributes[] = {
    ProjectAttribute::District, ProjectAttribute::Category, ProjectAttribute::Cost};

}  // namespace

ComparisonReport compare_runs(const VoteGroup& a, const VoteGroup& b,
                              const ProjectCatalog& catalog) {
  if (!(a.method == b.method))
    throw Error(Errc::MethodMismatch, "cannot compare " + method_code(a.method) + " with " +
                                          method_code(b.method));
  ComparisonReport report;
  report.tau = kendall_tau(rank_positions(tally(a.ballots)),
                           rank_positions(tally(b.ballots)));

  LabeledVotes la = labeled_votes(a), lb = labeled_votes(b);
  bool aligned = voter_ids_align(la, lb);
  report.jaccard_mode = aligned ? PairedMode::MatchedById : PairedMode::AllPairs;
  PairedJaccard paired = paired_jaccard(la, lb, report.jaccard_mode);
  report.jaccard_values = paired.values;
  report.jaccard_mean = paired.mean;
  if (aligned && la.size() >= 2) {
    PairedJaccard background = paired_jaccard(la, lb, PairedMode::AllPairs);
    try {
      report.matched_vs_background = t_test(paired.values, background.values);
    } catch (const Error&) {
      // zero variance on both sides: leave the comparison out
    }
  }

  for (ProjectAttribute attribute : kAttributes) {
    auto shares_a = attribute_distribution(a.ballots, catalog, attribute);
    auto shares_b = attribute_distribution(b.ballots, catalog, attribute);
    auto& delta = report.attribute_delta[attribute_name(attribute)];
    for (const auto& [value, share] : shares_a) delta[value] = share - shares_b.at(value);
  }
  return report;
}

namespace {

std::string format_value(double v, const char* fmt = "%.9f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

struct ReportEntity {
  const VoteGroup* group = nullptr;
  AggregateResult aggregate;
  Ranking positions;
  LabeledVotes votes;
};

}  // namespace

void write_report(const ReportInputs& inputs, const std::string& out_dir) {
  std::vector<VoteGroup> baseline_groups;
  if (inputs.baseline)
    for (const auto& [code, ballots] : inputs.baseline->ballots_by_method)
      if (!ballots.empty())
        baseline_groups.push_back(group_from_baseline(*inputs.baseline, parse_method(code)));

  std::vector<ReportEntity> entities;
  for (const auto& group : inputs.runs) {
    if (group.ballots.empty())
      throw Error(Errc::EmptyBallotSet, "run " + group.label + " has no ballots");
    entities.emplace_back().group = &group;
  }
  for (const auto& group : baseline_groups) entities.emplace_back().group = &group;
  if (entities.empty()) throw Error(Errc::EmptyBallotSet, "nothing to report on");
  for (auto& entity : entities) {
    entity.aggregate = tally(entity.group->ballots);
    entity.positions = rank_positions(entity.aggregate);
    entity.votes = labeled_votes(*entity.group);
  }

  fs::create_directories(out_dir);
  fs::path base(out_dir);

  {
    std::ofstream out(base / "tau_matrix.csv", std::ios::binary);
    out << "label";
    for (const auto& entity : entities) out << ',' << entity.group->label;
    out << '\n';
    for (const auto& row : entities) {
      out << row.group->label;
      for (const auto& col : entities)
        out << ',' << format_value(kendall_tau(row.positions, col.positions), "%.6f");
      out << '\n';
    }
  }

  {
    std::ofstream out(base / "jaccard_dist.csv", std::ios::binary);
    out << "kind,label_a,label_b,voter_a,voter_b,value\n";
    for (const auto& entity : entities) {
      const auto& votes = entity.votes;
      for (std::size_t i = 0; i < votes.size(); ++i)
        for (std::size_t j = i + 1; j < votes.size(); ++j)
          out << "within," << entity.group->label << ',' << entity.group->label << ','
              << votes[i].first << ',' << votes[j].first << ','
              << format_value(jaccard(votes[i].second, votes[j].second)) << '\n';
    }
    for (std::size_t i = 0; i < entities.size(); ++i)
      for (std::size_t j = i + 1; j < entities.size(); ++j) {
        const auto& a = entities[i];
        const auto& b = entities[j];
        if (voter_ids_align(a.votes, b.votes)) {
          auto va = a.votes, vb = b.votes;
          auto by_id = [](const auto& l, const auto& r) { return l.first < r.first; };
          std::sort(va.begin(), va.end(), by_id);
          std::sort(vb.begin(), vb.end(), by_id);
          for (std::size_t p = 0; p < va.size(); ++p)
            out << "pair," << a.group->label << ',' << b.group->label << ','
                << va[p].first << ',' << vb[p].first << ','
                << format_value(jaccard(va[p].second, vb[p].second)) << '\n';
        } else {
          for (const auto& [ida, seta] : a.votes)
            for (const auto& [idb, setb] : b.votes)
              out << "pair," << a.group->label << ',' << b.group->label << ',' << ida << ','
                  << idb << ',' << format_value(jaccard(seta, setb)) << '\n';
        }
      }
  }

  {
    std::ofstream out(base / "attribute_shares.csv", std::ios::binary);
    out << "label,attribute,value,share\n";
    for (const auto& entity : entities)
      for (ProjectAttribute attribute : kAttributes)
        for (const auto& [value, share] :
             attribute_distribution(entity.group->ballots, inputs.catalog, attribute))
          out << entity.group->label << ',' << attribute_name(attribute) << ',' << value
              << ',' << format_value(share) << '\n';
  }

  {
    std::ofstream out(base / "histogram.csv", std::ios::binary);
    out << "label,selections,percent\n";
    for (const auto& entity : entities) {
      auto kind = entity.group->method.kind;
      if (kind != VotingMethod::Kind::Approval && kind != VotingMethod::Kind::KApproval)
        continue;
      for (const auto& [count, percent] : selection_count_histogram(entity.group->ballots))
        out << entity.group->label << ',' << count << ',' << format_value(percent, "%.6f")
            << '\n';
    }
  }

  {
    std::map<std::string, const SurveyRecord*> by_participant;
    for (const auto& record : inputs.survey) by_participant[record.participant_id] = &record;
    std::ofstream out(base / "self_alignment.csv", std::ios::binary);
    out << "label,voter_id,district_share,category_share\n";
    for (const auto& entity : entities)
      for (const auto& ballot : entity.group->ballots) {
        auto it = by_participant.find(ballot.voter_id);
        if (it == by_participant.end()) continue;
        SelfAlignment alignment = self_alignment(ballot, *it->second, inputs.catalog);
        out << entity.group->label << ',' << ballot.voter_id << ','
            << format_value(alignment.district_share) << ','
            << format_value(alignment.category_share) << '\n';
      }
  }

  {
    std::ofstream out(base / "stats.csv", std::ios::binary);
    out << "label,metric,statistic,p_value\n";
    auto stat_row = [&](const std::string& label, const std::string& metric, double value,
                        const std::optional<double>& p) {
      out << label << ',' << metric << ',' << format_value(value, "%.10g") << ',';
      if (p) out << format_value(*p, "%.10g");
      out << '\n';
    };
    for (const auto& entity : entities) {
      stat_row(entity.group->label, "within_dissimilarity",
               within_group_dissimilarity(entity.votes), std::nullopt);
      std::vector<double> positions, ids;
      for (const auto& [id, pos] : entity.positions.scores) {
        ids.push_back(static_cast<double>(id));
        positions.push_back(pos);
      }
      StatResult pearson = pearson_r(positions, ids);
      stat_row(entity.group->label, "pearson_rank_vs_id", pearson.statistic,
               pearson.p_value);
    }
    for (std::size_t i = 0; i < entities.size(); ++i)
      for (std::size_t j = i + 1; j < entities.size(); ++j) {
        const auto& a = entities[i];
        const auto& b = entities[j];
        if (!(a.group->method == b.group->method)) continue;
        ComparisonReport comparison =
            compare_runs(*a.group, *b.group, inputs.catalog);
        std::string pair_label = a.group->label + "|" + b.group->label;
        stat_row(pair_label, "tau", comparison.tau, std::nullopt);
        stat_row(pair_label,
                 comparison.jaccard_mode == PairedMode::MatchedById
                     ? "jaccard_mean_matched"
                     : "jaccard_mean_allpairs",
                 comparison.jaccard_mean, std::nullopt);
        if (comparison.matched_vs_background)
          stat_row(pair_label, "matched_vs_background_t",
                   comparison.matched_vs_background->statistic,
                   comparison.matched_vs_background->p_value);
      }
  }
}

}  // namespace pbvote
