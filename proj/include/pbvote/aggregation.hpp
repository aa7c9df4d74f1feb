#pragma once

#include <iosfwd>
#include <map>
#include <vector>

#include "pbvote/parsing.hpp"

namespace pbvote {

struct AggregateResult {
  std::map<int, double> scores;  // canonical id -> total, all 24 ids present
  std::vector<int> ranking;      // descending score, ties by ascending id
  VotingMethod method;
  int n_ballots = 0;
};

/// Positions 1..depth receive depth..1 points (depth 5: 5,4,3,2,1).
std::map<int, int> borda_points(const std::vector<int>& ranking);

/// Scales a raw allocation so the points sum to target (default 10),
/// preserving proportions. Throws ZeroAllocation without positive mass.
std::map<int, double> normalize_cumulative(const std::map<int, double>& allocation,
                                           double target = 10.0);

AggregateResult tally(const std::vector<Ballot>& ballots);

/// A ballot's score contribution per project: 1 per approval, Borda points
/// for ranked, normalized points for cumulative. Shared by tally and the
/// vote-mass metrics.
std::map<int, double> vote_mass(const Ballot& ballot);

void write_aggregate_csv(std::ostream& out, const AggregateResult& result);
AggregateResult read_aggregate_csv(std::istream& in, const VotingMethod& method);

}  // namespace pbvote
