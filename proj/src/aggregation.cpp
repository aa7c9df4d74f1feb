#include "pbvote/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "pbvote/csv.hpp"

namespace pbvote {

std::map<int, int> borda_points(const std::vector<int>& ranking) {
  std::map<int, int> points;
  int n = static_cast<int>(ranking.size());
  for (int pos = 0; pos < n; ++pos) points[ranking[pos]] = n - pos;
  return points;
}

std::map<int, double> normalize_cumulative(const std::map<int, double>& allocation,
                                           double target) {
  double sum = 0.0;
  for (const auto& [id, pts] : allocation) {
    if (pts < 0.0) throw Error(Errc::ZeroAllocation, "negative point count");
    sum += pts;
  }
  if (sum <= 0.0) throw Error(Errc::ZeroAllocation, "no positive points to scale");
  std::map<int, double> scaled;
  for (const auto& [id, pts] : allocation) scaled[id] = pts * (target / sum);
  return scaled;
}

std::map<int, double> vote_mass(const Ballot& ballot) {
  std::map<int, double> mass;
  switch (ballot.method.kind) {
    case VotingMethod::Kind::Approval:
    case VotingMethod::Kind::KApproval:
      for (int id : ballot.approvals) mass[id] = 1.0;
      break;
    case VotingMethod::Kind::Cumulative:
      mass = normalize_cumulative(ballot.allocation,
                                  static_cast<double>(ballot.method.points));
      break;
    case VotingMethod::Kind::Ranked:
      for (const auto& [id, pts] : borda_points(ballot.ranking))
        mass[id] = static_cast<double>(pts);
      break;
  }
  return mass;
}

AggregateResult tally(const std::vector<Ballot>& ballots) {
  if (ballots.empty()) throw Error(Errc::EmptyBallotSet, "no ballots to tally");
  const VotingMethod method = ballots.front().method;
  for (const auto& b : ballots)
    if (!(b.method == method))
      throw Error(Errc::MixedMethods, "ballots mix voting methods");

  AggregateResult result;
  result.method = method;
  result.n_ballots = static_cast<int>(ballots.size());
  for (int id = 1; id <= kCatalogSize; ++id) result.scores[id] = 0.0;
  // Summation order is fixed (ballot index, then id) so repeated tallies of
  // the same ballots are bit-identical.
  for (const auto& ballot : ballots)
    for (const auto& [id, m] : vote_mass(ballot)) result.scores.at(id) += m;

  for (int id = 1; id <= kCatalogSize; ++id) result.ranking.push_back(id);
  std::sort(result.ranking.begin(), result.ranking.end(), [&](int a, int b) {
    double sa = result.scores.at(a), sb = result.scores.at(b);
    if (sa != sb) return sa > sb;
    return a < b;
  });
  return result;
}

namespace {

std::string format_score(double score) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", score);
  return buf;
}

}  // namespace

void write_aggregate_csv(std::ostream& out, const AggregateResult& result) {
  out << "rank,id,score\n";
  for (std::size_t i = 0; i < result.ranking.size(); ++i) {
    int id = result.ranking[i];
    out << (i + 1) << ',' << id << ',' << format_score(result.scores.at(id)) << '\n';
  }
}

AggregateResult read_aggregate_csv(std::istream& in, const VotingMethod& method) {
  auto records = csv::read_records(in);
  if (records.empty() || records.front() != std::vector<std::string>{"rank", "id", "score"})
    throw Error(Errc::SchemaError, "bad aggregate csv header");
  AggregateResult result;
  result.method = method;
  int expected_rank = 1;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& row = records[i];
    if (row.size() != 3) throw Error(Errc::SchemaError, "bad aggregate csv row");
    try {
      if (std::stoi(row[0]) != expected_rank)
        throw Error(Errc::SchemaError, "aggregate csv ranks out of order");
      int id = std::stoi(row[1]);
      if (id < 1 || id > kCatalogSize)
        throw Error(Errc::UnknownProjectId, "aggregate csv id out of range");
      if (result.scores.count(id))
        throw Error(Errc::DuplicateId, "aggregate csv repeats id");
      result.scores[id] = std::stod(row[2]);
      result.ranking.push_back(id);
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw Error(Errc::SchemaError, "non-numeric aggregate csv field");
    }
    ++expected_rank;
  }
  if (static_cast<int>(result.ranking.size()) != kCatalogSize)
    throw Error(Errc::SchemaError, "aggregate csv must list all 24 projects");
  return result;
}

}  // namespace pbvote
