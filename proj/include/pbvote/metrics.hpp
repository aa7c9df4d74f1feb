#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pbvote/aggregation.hpp"
#include "pbvote/catalog.hpp"
#include "pbvote/parsing.hpp"
#include "pbvote/persona.hpp"

namespace pbvote {

/// Score map over a fixed id set; Kendall's tau reads the values as the
/// x_i / y_i of the sgn formula.
struct Ranking {
  std::map<int, double> scores;
};

/// Rank positions (1 = top) derived from an aggregate; the deterministic
/// tie-break makes tau between two aggregates reproducible.
Ranking rank_positions(const AggregateResult& result);

/// tau-a: 2/(n(n-1)) * sum_{i<j} sgn(x_i-x_j) sgn(y_i-y_j); tied pairs
/// contribute 0. Computed by sort + merge inversion counting, exact.
double kendall_tau(const Ranking& a, const Ranking& b);

struct VoteSet {
  std::set<int> ids;
};

double jaccard(const VoteSet& a, const VoteSet& b);
double jaccard_distance(const VoteSet& a, const VoteSet& b);

enum class PairedMode { MatchedById, AllPairs };

struct PairedJaccard {
  std::vector<double> values;
  double mean = 0.0;
};

using LabeledVotes = std::vector<std::pair<std::string, VoteSet>>;

PairedJaccard paired_jaccard(const LabeledVotes& group_a,
                             const LabeledVotes& group_b,
                             PairedMode mode);

/// Mean pairwise Jaccard dissimilarity among distinct voters of one group.
double within_group_dissimilarity(const LabeledVotes& group);

struct SelfAlignment {
  double district_share = 0.0;
  double category_share = 0.0;
};

SelfAlignment self_alignment(const Ballot& ballot,
                             const SurveyRecord& persona_record,
                             const ProjectCatalog& catalog);

enum class ProjectAttribute { District, Category, Cost };

/// Vote-mass shares per attribute value; shares sum to 1.
std::map<std::string, double> attribute_distribution(const std::vector<Ballot>& ballots,
                                                     const ProjectCatalog& catalog,
                                                     ProjectAttribute attribute);

/// Percentage of approval ballots per selection count; sums to 100.
std::map<int, double> selection_count_histogram(const std::vector<Ballot>& ballots);

struct StatResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Sample Pearson r with two-sided p from t = r*sqrt((n-2)/(1-r^2)),
/// n-2 degrees of freedom.
StatResult pearson_r(std::span<const double> x, std::span<const double> y);

/// Welch two-sample t-test (two-sided); pooled variance behind the flag
/// for sensitivity checks.
StatResult t_test(std::span<const double> a, std::span<const double> b,
                  bool pooled = false);

// Numeric internals, exposed for cross-checking against quadrature oracles.
double regularized_incomplete_beta(double a, double b, double x);
double student_t_two_sided_p(double t, double df);

}  // namespace pbvote
