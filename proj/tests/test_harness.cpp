#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "pbvote/harness.hpp"

using namespace pbvote;
namespace fs = std::filesystem;

namespace {

const std::string kCatalogPath = std::string(PBVOTE_DATA_DIR) + "/catalog.csv";
const std::string kSurveyPath = std::string(PBVOTE_DATA_DIR) + "/survey_example.csv";

ExperimentConfig mock_config(int n = 8) {
  ExperimentConfig config;
  config.method = parse_method("kapp");
  config.n_agents = n;
  config.temperature = 1.0;
  config.backend = BackendKind::Mock;
  config.seed = 1234;
  config.catalog_path = kCatalogPath;
  config.parallelism = 3;
  return config;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

const std::string kSurveyHeader =
    "id,cat1,cat1_score,cat2,cat2_score,cat3,cat3_score,district,connected,"
    "district_importance,category_importance,cost_importance,likelihood_importance\n";

std::string survey_with(const std::vector<std::string>& participant_ids) {
  std::string text = kSurveyHeader;
  for (const auto& id : participant_ids)
    text += id +
            ",Transport,60,Nature,30,Culture,10,Nord,A lot,Moderately important,"
            "Very important,Not important at all,Moderately important\n";
  return text;
}

}  // namespace

TEST_CASE("experiment config round-trips through json") {
  ExperimentConfig config = mock_config();
  config.method = parse_method("cumu");
  config.persona = true;
  config.cot = true;
  config.treatment = ListTreatment::ReversedIds;
  config.survey_path = "some/survey.csv";
  config.templates_dir = "tpl";
  config.cache_path = "cache.jsonl";
  config.model_name = "m1";
  config.rate_limit_per_s = 2.5;
  config.mock.weight_scale = 2.0;
  config.mock.district_bonus = 0.1;
  config.mock.cost_aversion = 0.2;

  ExperimentConfig back = config_from_json(config_to_json(config));
  CHECK(back.method == config.method);
  CHECK(back.n_agents == config.n_agents);
  CHECK(back.temperature == config.temperature);
  CHECK(back.persona == config.persona);
  CHECK(back.cot == config.cot);
  CHECK(back.treatment == config.treatment);
  CHECK(back.backend == config.backend);
  CHECK(back.seed == config.seed);
  CHECK(back.survey_path == config.survey_path);
  CHECK(back.catalog_path == config.catalog_path);
  CHECK(back.templates_dir == config.templates_dir);
  CHECK(back.cache_path == config.cache_path);
  CHECK(back.model_name == config.model_name);
  CHECK(back.parallelism == config.parallelism);
  CHECK(back.rate_limit_per_s == config.rate_limit_per_s);
  CHECK(back.mock.weight_scale == config.mock.weight_scale);

  CHECK(config_hash(config) == config_hash(back));
  ExperimentConfig tweaked = config;
  tweaked.seed += 1;
  CHECK(config_hash(tweaked) != config_hash(config));

  CHECK_THROWS_AS(config_from_json("{\"n_agents\": 3}"), Error);
  CHECK_THROWS_AS(config_from_json("not json"), Error);
}

TEST_CASE("persona profiles come straight from the survey") {
  ExperimentConfig config = mock_config();
  config.persona = true;
  std::vector<SurveyRecord> survey = load_survey_file(kSurveyPath);
  REQUIRE(survey.size() == 1);

  MockVoterProfile profile = mock_profile_for_agent(config, 0, survey);
  CHECK(profile.category_weights[static_cast<int>(Category::Transportation)] ==
        doctest::Approx(60.0 / 25.0));
  CHECK(profile.category_weights[static_cast<int>(Category::Nature)] ==
        doctest::Approx(30.0 / 25.0));
  CHECK(profile.category_weights[static_cast<int>(Category::Culture)] ==
        doctest::Approx(10.0 / 25.0));
  CHECK(profile.home_district == District::Nord);
  CHECK(profile.noise_seed == 0);  // survey-derived voters never jitter

  // survey profiles ignore the run seed entirely
  ExperimentConfig other_seed = config;
  other_seed.seed = 777;
  MockVoterProfile again = mock_profile_for_agent(other_seed, 0, survey);
  CHECK(again.category_weights == profile.category_weights);

  CHECK_THROWS_AS(mock_profile_for_agent(config, 0, {}), Error);
}

TEST_CASE("synthesized profiles are seeded and cycle districts") {
  ExperimentConfig config = mock_config();
  std::vector<SurveyRecord> no_survey;

  MockVoterProfile p0 = mock_profile_for_agent(config, 0, no_survey);
  MockVoterProfile p1 = mock_profile_for_agent(config, 1, no_survey);
  MockVoterProfile p4 = mock_profile_for_agent(config, 4, no_survey);

  CHECK(p0.home_district == District::Nord);
  CHECK(p1.home_district == District::Sued);
  CHECK(p4.home_district == District::Nord);
  CHECK(p0.category_weights != p1.category_weights);
  CHECK(p0.noise_seed != 0);
  CHECK(p0.noise_seed % 2 == 1);

  for (double w : p0.category_weights) {
    CHECK(w >= 0.0);
    CHECK(w < config.mock.weight_scale);
  }

  // deterministic in (seed, index)
  CHECK(mock_profile_for_agent(config, 0, no_survey).category_weights ==
        p0.category_weights);
  ExperimentConfig other = config;
  other.seed = 4321;
  CHECK(mock_profile_for_agent(other, 0, no_survey).category_weights !=
        p0.category_weights);
}

TEST_CASE("mock experiments are deterministic and complete") {
  ExperimentConfig config = mock_config(10);
  ExperimentRun run = run_experiment(config);

  CHECK(run.hash == config_hash(config));
  CHECK(run.responses.size() == 10);
  CHECK(static_cast<int>(run.ballots.size()) + run.discarded == 10);
  CHECK(run.parse_reports.size() == 10);
  CHECK(run.ballots.size() == run.ballot_agents.size());
  for (const auto& ballot : run.ballots) {
    CHECK(ballot.approvals.size() == 5);
    CHECK(ballot.voter_id.substr(0, 6) == "agent_");
  }

  ExperimentRun again = run_experiment(config);
  REQUIRE(again.ballots.size() == run.ballots.size());
  for (std::size_t i = 0; i < run.ballots.size(); ++i) {
    CHECK(again.ballots[i].voter_id == run.ballots[i].voter_id);
    CHECK(again.ballots[i].approvals == run.ballots[i].approvals);
  }

  SUBCASE("parallelism does not change the outcome") {
    ExperimentConfig serial = config;
    serial.parallelism = 1;
    ExperimentRun serial_run = run_experiment(serial);
    REQUIRE(serial_run.ballots.size() == run.ballots.size());
    for (std::size_t i = 0; i < run.ballots.size(); ++i)
      CHECK(serial_run.ballots[i].approvals == run.ballots[i].approvals);
  }

  SUBCASE("input validation") {
    ExperimentConfig bad = config;
    bad.n_agents = 0;
    CHECK_THROWS_AS(run_experiment(bad), Error);
    bad = config;
    bad.temperature = 2.5;
    CHECK_THROWS_AS(run_experiment(bad), Error);
    bad = config;
    bad.persona = true;  // no survey path
    CHECK_THROWS_AS(run_experiment(bad), Error);
  }
}

TEST_CASE("persona experiments label ballots with participant ids") {
  ExperimentConfig config = mock_config(1);
  config.persona = true;
  config.survey_path = kSurveyPath;
  config.temperature = 0.0;

  ExperimentRun run = run_experiment(config);
  REQUIRE(run.ballots.size() == 1);
  CHECK(run.ballots[0].voter_id == "YK3TDKDG");
  // Transport 60 dominates; #5 leads (Nord + cheap), then the remaining
  // cheap Transportation rows and Nord's #6 tie at the same utility
  CHECK(run.ballots[0].approvals == std::set<int>{5, 6, 11, 17, 23});

  SUBCASE("a survey smaller than n_agents is rejected") {
    ExperimentConfig big = config;
    big.n_agents = 2;
    try {
      run_experiment(big);
      FAIL("expected SurveyTooSmall");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::SurveyTooSmall);
    }
  }
}

TEST_CASE("record then replay reproduces a run byte for byte") {
  TempDir tmp("pbvote_test_replay");
  ExperimentConfig config = mock_config(6);
  config.cache_path = tmp.sub("cache.jsonl");

  ExperimentRun recorded = run_experiment(config);
  CHECK(fs::exists(config.cache_path));

  ExperimentConfig replay_config = config;
  replay_config.backend = BackendKind::Replay;
  ExperimentRun replayed = run_experiment(replay_config);

  REQUIRE(replayed.responses.size() == recorded.responses.size());
  for (std::size_t i = 0; i < recorded.responses.size(); ++i) {
    CHECK(replayed.responses[i].text == recorded.responses[i].text);
    CHECK(replayed.responses[i].backend == BackendKind::Replay);
  }

  SUBCASE("replay without a cache path fails upfront") {
    ExperimentConfig missing = replay_config;
    missing.cache_path = "";
    CHECK_THROWS_AS(run_experiment(missing), Error);
  }

  SUBCASE("replay misses on a changed configuration") {
    ExperimentConfig changed = replay_config;
    changed.temperature = 0.5;  // keys include the temperature
    try {
      run_experiment(changed);
      FAIL("expected CacheMiss");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::CacheMiss);
    }
  }
}

TEST_CASE("runs persist and load back") {
  TempDir tmp("pbvote_test_persist");
  ExperimentConfig config = mock_config(5);
  ExperimentRun run = run_experiment(config);

  std::string dir = persist_run(run, tmp.sub("run"));
  CHECK(dir == tmp.sub("run"));
  for (const char* name :
       {"config.json", "responses.jsonl", "ballots.jsonl", "run_stats.json", "aggregate.csv"})
    CHECK(fs::exists(fs::path(dir) / name));

  StoredRun stored = load_run(dir);
  CHECK(stored.hash == run.hash);
  CHECK(stored.discarded == run.discarded);
  CHECK(stored.config.n_agents == config.n_agents);
  REQUIRE(stored.ballots.size() == run.ballots.size());
  for (std::size_t i = 0; i < run.ballots.size(); ++i) {
    CHECK(stored.ballots[i].voter_id == run.ballots[i].voter_id);
    CHECK(stored.ballots[i].approvals == run.ballots[i].approvals);
  }

  SUBCASE("an occupied directory gets a counter suffix") {
    std::string second = persist_run(run, tmp.sub("run"));
    CHECK(second == tmp.sub("run") + "_1");
    std::string third = persist_run(run, tmp.sub("run"));
    CHECK(third == tmp.sub("run") + "_2");
  }

  SUBCASE("loading garbage fails with a schema error") {
    write_file(tmp.sub("run") + "/config.json", "{}");
    CHECK_THROWS_AS(load_run(tmp.sub("run")), Error);
  }
}

TEST_CASE("human baselines load from the two-file format") {
  TempDir tmp("pbvote_test_baseline");
  write_file(tmp.sub("survey.csv"), survey_with({"P1", "P2"}));
  write_file(tmp.sub("votes.csv"),
             "participant_id,method,content\n"
             "P1,kapp,1;2;7;8;13\n"
             "P2,kapp,5;6;11;12;17\n"
             "P1,cumu,5:4;17:3;22:3\n"
             "P2,rank,10;22;18;24;7\n"
             "P1,appr,5;11\n");

  HumanBaseline baseline = load_human_baseline(tmp.sub("votes.csv"), tmp.sub("survey.csv"));
  CHECK(baseline.survey.size() == 2);
  CHECK(baseline.ballots_by_method.at("kapp").size() == 2);
  CHECK(baseline.ballots_by_method.at("kapp")[0].approvals ==
        std::set<int>{1, 2, 7, 8, 13});
  CHECK(baseline.ballots_by_method.at("cumu")[0].allocation ==
        std::map<int, double>{{5, 4.0}, {17, 3.0}, {22, 3.0}});
  CHECK(baseline.ballots_by_method.at("rank")[0].ranking ==
        std::vector<int>{10, 22, 18, 24, 7});
  CHECK(baseline.ballots_by_method.at("appr")[0].approvals == std::set<int>{5, 11});

  VoteGroup group = group_from_baseline(baseline, parse_method("kapp"));
  CHECK(group.label == "human_kapp");
  CHECK(group.ballots.size() == 2);

  write_file(tmp.sub("only_kapp.csv"),
             "participant_id,method,content\nP1,kapp,1;2;7;8;13\n");
  HumanBaseline partial = load_human_baseline(tmp.sub("only_kapp.csv"), "");
  CHECK_THROWS_AS(group_from_baseline(partial, parse_method("rank")), Error);
}

TEST_CASE("human baseline error paths") {
  TempDir tmp("pbvote_test_baseline_errors");
  write_file(tmp.sub("survey.csv"), survey_with({"P1"}));

  auto load_votes = [&](const std::string& body) {
    write_file(tmp.sub("votes.csv"), "participant_id,method,content\n" + body);
    return load_human_baseline(tmp.sub("votes.csv"), tmp.sub("survey.csv"));
  };

  SUBCASE("unknown participant") {
    try {
      load_votes("P9,kapp,1;2;7;8;13\n");
      FAIL("expected IdMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::IdMismatch);
    }
  }
  SUBCASE("wrong k-approval size") {
    CHECK_THROWS_AS(load_votes("P1,kapp,1;2\n"), Error);
  }
  SUBCASE("duplicate ids") {
    CHECK_THROWS_AS(load_votes("P1,appr,3;3\n"), Error);
  }
  SUBCASE("out-of-range id") {
    CHECK_THROWS_AS(load_votes("P1,appr,25\n"), Error);
  }
  SUBCASE("non-numeric points") {
    CHECK_THROWS_AS(load_votes("P1,cumu,5:lots\n"), Error);
  }
  SUBCASE("bad header") {
    write_file(tmp.sub("votes.csv"), "who,what,how\nP1,kapp,1;2;7;8;13\n");
    CHECK_THROWS_AS(load_human_baseline(tmp.sub("votes.csv"), tmp.sub("survey.csv")), Error);
  }
  SUBCASE("votes without a survey skip the id check") {
    write_file(tmp.sub("votes.csv"), "participant_id,method,content\nP9,appr,3;4\n");
    HumanBaseline loose = load_human_baseline(tmp.sub("votes.csv"), "");
    CHECK(loose.ballots_by_method.at("appr").size() == 1);
  }
}

TEST_CASE("comparing a run against itself is the identity") {
  ExperimentConfig config = mock_config(6);
  ExperimentRun run = run_experiment(config);
  REQUIRE(run.ballots.size() >= 2);
  ProjectCatalog catalog = load_catalog_file(kCatalogPath);

  VoteGroup group = group_from_run(run, "self");
  ComparisonReport report = compare_runs(group, group, catalog);
  CHECK(report.tau == 1.0);
  CHECK(report.jaccard_mode == PairedMode::MatchedById);
  CHECK(report.jaccard_mean == 1.0);
  CHECK(report.jaccard_values.size() == run.ballots.size());
  for (const auto& [attribute, deltas] : report.attribute_delta)
    for (const auto& [value, delta] : deltas) CHECK(delta == 0.0);

  SUBCASE("different methods refuse to compare") {
    VoteGroup other = group;
    other.method = parse_method("rank");
    CHECK_THROWS_AS(compare_runs(group, other, catalog), Error);
  }
}

TEST_CASE("reports write the full csv set") {
  TempDir tmp("pbvote_test_report");
  ExperimentConfig config = mock_config(6);
  ExperimentRun run = run_experiment(config);

  ReportInputs inputs;
  inputs.runs = {group_from_run(run, "mock_a"), group_from_run(run, "mock_b")};
  inputs.catalog = load_catalog_file(kCatalogPath);
  write_report(inputs, tmp.sub("report"));

  for (const char* name : {"tau_matrix.csv", "jaccard_dist.csv", "attribute_shares.csv",
                           "histogram.csv", "self_alignment.csv", "stats.csv"})
    CHECK(fs::exists(fs::path(tmp.sub("report")) / name));

  std::ifstream tau(fs::path(tmp.sub("report")) / "tau_matrix.csv");
  std::string header, row;
  std::getline(tau, header);
  CHECK(header == "label,mock_a,mock_b");
  std::getline(tau, row);
  CHECK(row.substr(0, 16) == "mock_a,1.000000,");

  std::ifstream stats(fs::path(tmp.sub("report")) / "stats.csv");
  std::getline(stats, header);
  CHECK(header == "label,metric,statistic,p_value");
  bool saw_pair_tau = false;
  while (std::getline(stats, row))
    if (row.find("mock_a|mock_b,tau,") != std::string::npos) saw_pair_tau = true;
  CHECK(saw_pair_tau);

  CHECK_THROWS_AS(write_report(ReportInputs{{}, std::nullopt, inputs.catalog, {}},
                               tmp.sub("report2")),
                  Error);
}
