#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "pbvote/aggregation.hpp"

using namespace pbvote;

namespace {

Ballot approval_ballot(std::set<int> ids, std::optional<int> k = std::nullopt) {
  Ballot b;
  b.method = k ? VotingMethod{VotingMethod::Kind::KApproval, *k, 10}
               : VotingMethod{VotingMethod::Kind::Approval, 5, 10};
  b.approvals = std::move(ids);
  return b;
}

Ballot cumulative_ballot(std::map<int, double> alloc) {
  Ballot b;
  b.method = VotingMethod{VotingMethod::Kind::Cumulative, 5, 10};
  b.allocation = std::move(alloc);
  return b;
}

Ballot ranked_ballot(std::vector<int> ranking) {
  Ballot b;
  b.method = VotingMethod{VotingMethod::Kind::Ranked, 5, 10};
  b.ranking = std::move(ranking);
  return b;
}

double total_score(const AggregateResult& result) {
  double sum = 0.0;
  for (const auto& [id, s] : result.scores) sum += s;
  return sum;
}

}  // namespace

TEST_CASE("borda points assign depth..1 by position") {
  auto pts = borda_points({10, 22, 18, 24, 7});
  CHECK(pts == std::map<int, int>{{10, 5}, {22, 4}, {18, 3}, {24, 2}, {7, 1}});
  CHECK(borda_points({3}) == std::map<int, int>{{3, 1}});
  CHECK(borda_points({}).empty());
}

TEST_CASE("normalize_cumulative rescales to the budget") {
  SUBCASE("over-allocation shrinks proportionally") {
    auto norm = normalize_cumulative({{1, 6.0}, {2, 6.0}});
    CHECK(norm.at(1) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(norm.at(2) == doctest::Approx(5.0).epsilon(1e-12));
  }
  SUBCASE("under-allocation grows proportionally") {
    auto norm = normalize_cumulative({{1, 2.0}, {2, 3.0}});
    CHECK(norm.at(1) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(norm.at(2) == doctest::Approx(6.0).epsilon(1e-12));
  }
  SUBCASE("random allocations always sum to the target") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> mass(0.1, 20.0);
    std::uniform_int_distribution<int> id(1, 24);
    for (int trial = 0; trial < 200; ++trial) {
      std::map<int, double> alloc;
      int entries = 1 + static_cast<int>(rng() % 8);
      for (int j = 0; j < entries; ++j) alloc[id(rng)] = mass(rng);
      auto norm = normalize_cumulative(alloc);
      double sum = 0.0;
      for (const auto& [pid, pts] : norm) sum += pts;
      CHECK(sum == doctest::Approx(10.0).epsilon(1e-9));
    }
  }
  SUBCASE("no positive mass throws") {
    CHECK_THROWS_AS(normalize_cumulative({}), Error);
    CHECK_THROWS_AS(normalize_cumulative({{1, 0.0}, {2, 0.0}}), Error);
    CHECK_THROWS_AS(normalize_cumulative({{1, -1.0}, {2, 3.0}}), Error);
  }
}

TEST_CASE("vote_mass matches the method semantics") {
  CHECK(vote_mass(approval_ballot({2, 7})) ==
        std::map<int, double>{{2, 1.0}, {7, 1.0}});
  auto ranked = vote_mass(ranked_ballot({10, 22, 18, 24, 7}));
  CHECK(ranked.at(10) == 5.0);
  CHECK(ranked.at(7) == 1.0);
  auto cumu = vote_mass(cumulative_ballot({{1, 6.0}, {2, 6.0}}));
  CHECK(cumu.at(1) == doctest::Approx(5.0));
}

TEST_CASE("approval tally counts each approval once") {
  std::vector<Ballot> ballots = {
      approval_ballot({1, 2, 3}),
      approval_ballot({2, 3}),
      approval_ballot({3}),
  };
  AggregateResult result = tally(ballots);
  CHECK(result.n_ballots == 3);
  CHECK(result.scores.size() == 24);
  CHECK(result.scores.at(3) == 3.0);
  CHECK(result.scores.at(2) == 2.0);
  CHECK(result.scores.at(1) == 1.0);
  CHECK(result.scores.at(24) == 0.0);
  CHECK(result.ranking.front() == 3);
  CHECK(result.ranking.size() == 24);
  // ties broken by ascending id
  CHECK(result.ranking[3] == 4);
}

TEST_CASE("ranked tally sums to exactly 15 per ballot") {
  std::mt19937_64 rng(7);
  std::vector<int> ids(24);
  std::iota(ids.begin(), ids.end(), 1);
  std::vector<Ballot> ballots;
  for (int i = 0; i < 37; ++i) {
    std::shuffle(ids.begin(), ids.end(), rng);
    ballots.push_back(ranked_ballot({ids[0], ids[1], ids[2], ids[3], ids[4]}));
  }
  AggregateResult result = tally(ballots);
  CHECK(total_score(result) == 15.0 * 37);
}

TEST_CASE("cumulative tally normalizes before summing") {
  std::vector<Ballot> ballots = {
      cumulative_ballot({{1, 6.0}, {2, 6.0}}),   // normalizes to 5 + 5
      cumulative_ballot({{1, 10.0}}),
  };
  AggregateResult result = tally(ballots);
  CHECK(result.scores.at(1) == doctest::Approx(15.0));
  CHECK(result.scores.at(2) == doctest::Approx(5.0));
  CHECK(total_score(result) == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("ranking is invariant to uniform score scaling") {
  std::mt19937_64 rng(99);
  std::vector<Ballot> ballots;
  for (int i = 0; i < 25; ++i) {
    std::set<int> ids;
    while (ids.size() < 5) ids.insert(1 + static_cast<int>(rng() % 24));
    ballots.push_back(approval_ballot(ids, 5));
  }
  AggregateResult once = tally(ballots);
  // duplicating every ballot doubles scores but cannot reorder anything
  std::vector<Ballot> doubled = ballots;
  doubled.insert(doubled.end(), ballots.begin(), ballots.end());
  AggregateResult twice = tally(doubled);
  CHECK(twice.ranking == once.ranking);
  CHECK(twice.scores.at(once.ranking[0]) == 2.0 * once.scores.at(once.ranking[0]));
}

TEST_CASE("tally input errors") {
  CHECK_THROWS_AS(tally({}), Error);
  std::vector<Ballot> mixed = {approval_ballot({1}), ranked_ballot({1, 2, 3, 4, 5})};
  try {
    tally(mixed);
    FAIL("expected MixedMethods");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MixedMethods);
  }
}

TEST_CASE("aggregate csv round-trips") {
  std::vector<Ballot> ballots = {
      ranked_ballot({10, 22, 18, 24, 7}),
      ranked_ballot({22, 10, 7, 1, 2}),
  };
  AggregateResult result = tally(ballots);
  std::ostringstream out;
  write_aggregate_csv(out, result);

  std::istringstream in(out.str());
  AggregateResult restored = read_aggregate_csv(in, result.method);
  CHECK(restored.ranking == result.ranking);
  for (const auto& [id, score] : result.scores) {
    CHECK(restored.scores.at(id) == doctest::Approx(score).epsilon(1e-12));
  }

  SUBCASE("a second write of the restored result is byte-identical") {
    std::ostringstream again;
    write_aggregate_csv(again, restored);
    CHECK(again.str() == out.str());
  }

  SUBCASE("truncated input is rejected") {
    std::string text = out.str();
    std::istringstream cut(text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(read_aggregate_csv(cut, result.method), Error);
  }
}
