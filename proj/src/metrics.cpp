#include "pbvote/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pbvote {

Ranking rank_positions(const AggregateResult& result) {
  Ranking ranking;
  for (std::size_t pos = 0; pos < result.ranking.size(); ++pos)
    ranking.scores[result.ranking[pos]] = static_cast<double>(pos + 1);
  return ranking;
}

namespace {

// Strict inversions in y (y_i > y_j for i < j) by merge sort; equal values
// merge without counting, so ties contribute nothing.
long long count_inversions(std::vector<double>& y, std::vector<double>& scratch,
                           std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  std::size_t mid = lo + (hi - lo) / 2;
  long long inversions = count_inversions(y, scratch, lo, mid) +
                         count_inversions(y, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (y[j] < y[i]) {
      inversions += static_cast<long long>(mid - i);
      scratch[k++] = y[j++];
    } else {
      scratch[k++] = y[i++];
    }
  }
  while (i < mid) scratch[k++] = y[i++];
  while (j < hi) scratch[k++] = y[j++];
  std::copy(scratch.begin() + static_cast<long>(lo), scratch.begin() + static_cast<long>(hi),
            y.begin() + static_cast<long>(lo));
  return inversions;
}

long long tied_pairs(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  long long pairs = 0;
  std::size_t i = 0;
  while (i < values.size()) {
    std::size_t j = i;
    while (j < values.size() && values[j] == values[i]) ++j;
    long long run = static_cast<long long>(j - i);
    pairs += run * (run - 1) / 2;
    i = j;
  }
  return pairs;
}

}  // namespace

double kendall_tau(const Ranking& a, const Ranking& b) {
  if (a.scores.size() != b.scores.size() || a.scores.size() < 2)
    throw Error(Errc::DomainMismatch, "tau needs two rankings over the same ids, n >= 2");
  std::vector<std::pair<double, double>> xy;
  xy.reserve(a.scores.size());
  for (const auto& [id, x] : a.scores) {
    auto it = b.scores.find(id);
    if (it == b.scores.end())
      throw Error(Errc::DomainMismatch, "rankings cover different ids");
    xy.emplace_back(x, it->second);
  }

  long long n = static_cast<long long>(xy.size());
  long long n0 = n * (n - 1) / 2;
  std::sort(xy.begin(), xy.end());

  std::vector<double> x(xy.size()), y(xy.size());
  for (std::size_t i = 0; i < xy.size(); ++i) {
    x[i] = xy[i].first;
    y[i] = xy[i].second;
  }
  long long n1 = tied_pairs(x);
  long long n2 = tied_pairs(y);
  // pairs tied in both x and y
  long long n3 = 0;
  {
    std::size_t i = 0;
    while (i < xy.size()) {
      std::size_t j = i;
      while (j < xy.size() && xy[j] == xy[i]) ++j;
      long long run = static_cast<long long>(j - i);
      n3 += run * (run - 1) / 2;
      i = j;
    }
  }

  std::vector<double> scratch(y.size());
  long long discordant = count_inversions(y, scratch, 0, y.size());
  long long concordant = n0 - n1 - n2 + n3 - discordant;
  return static_cast<double>(concordant - discordant) / static_cast<double>(n0);
}

double jaccard(const VoteSet& a, const VoteSet& b) {
  if (a.ids.empty() && b.ids.empty())
    throw Error(Errc::BothEmpty, "Jaccard of two empty sets is undefined");
  std::size_t intersection = 0;
  for (int id : a.ids) intersection += b.ids.count(id);
  std::size_t unions = a.ids.size() + b.ids.size() - intersection;
  return static_cast<double>(intersection) / static_cast<double>(unions);
}

double jaccard_distance(const VoteSet& a, const VoteSet& b) {
  return 1.0 - jaccard(a, b);
}

PairedJaccard paired_jaccard(const LabeledVotes& group_a, const LabeledVotes& group_b,
                             PairedMode mode) {
  if (group_a.empty() || group_b.empty())
    throw Error(Errc::DegenerateInput, "paired Jaccard needs non-empty groups");
  PairedJaccard out;
  if (mode == PairedMode::MatchedById) {
    auto a = group_a, b = group_b;
    auto by_id = [](const auto& l, const auto& r) { return l.first < r.first; };
    std::sort(a.begin(), a.end(), by_id);
    std::sort(b.begin(), b.end(), by_id);
    if (a.size() != b.size())
      throw Error(Errc::IdMismatch, "matched pairing needs identical voter id sets");
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].first != b[i].first)
        throw Error(Errc::IdMismatch, "matched pairing needs identical voter id sets");
      out.values.push_back(jaccard(a[i].second, b[i].second));
    }
  } else {
    for (const auto& [ida, va] : group_a)
      for (const auto& [idb, vb] : group_b) out.values.push_back(jaccard(va, vb));
  }
  double sum = 0.0;
  for (double v : out.values) sum += v;
  out.mean = sum / static_cast<double>(out.values.size());
  return out;
}

double within_group_dissimilarity(const LabeledVotes& group) {
  if (group.size() < 2) return 0.0;
  double sum = 0.0;
  long long pairs = 0;
  for (std::size_t i = 0; i < group.size(); ++i)
    for (std::size_t j = i + 1; j < group.size(); ++j) {
      sum += jaccard_distance(group[i].second, group[j].second);
      ++pairs;
    }
  return sum / static_cast<double>(pairs);
}

SelfAlignment self_alignment(const Ballot& ballot, const SurveyRecord& persona_record,
                             const ProjectCatalog& catalog) {
  auto mass = vote_mass(ballot);
  double total = 0.0, district_mass = 0.0, category_mass = 0.0;
  Category top_category = topic_to_category(top_topic(persona_record));
  for (const auto& [id, m] : mass) {
    const Project& project = catalog.by_id(id);
    total += m;
    if (project.district == persona_record.district) district_mass += m;
    if (project.category == top_category) category_mass += m;
  }
  if (total <= 0.0) throw Error(Errc::ZeroAllocation, "ballot carries no vote mass");
  return {district_mass / total, category_mass / total};
}

std::map<std::string, double> attribute_distribution(const std::vector<Ballot>& ballots,
                                                     const ProjectCatalog& catalog,
                                                     ProjectAttribute attribute) {
  if (ballots.empty()) throw Error(Errc::EmptyBallotSet, "no ballots");
  std::map<std::string, double> shares;
  // every attribute value appears, even with zero mass
  for (const auto& project : catalog.projects) {
    switch (attribute) {
      case ProjectAttribute::District: shares[to_string(project.district)]; break;
      case ProjectAttribute::Category: shares[to_string(project.category)]; break;
      case ProjectAttribute::Cost: shares[std::to_string(project.cost)]; break;
    }
  }
  double total = 0.0;
  for (const auto& ballot : ballots)
    for (const auto& [id, m] : vote_mass(ballot)) {
      const Project& project = catalog.by_id(id);
      std::string key;
      switch (attribute) {
        case ProjectAttribute::District: key = to_string(project.district); break;
        case ProjectAttribute::Category: key = to_string(project.category); break;
        case ProjectAttribute::Cost: key = std::to_string(project.cost); break;
      }
      shares[key] += m;
      total += m;
    }
  if (total <= 0.0) throw Error(Errc::ZeroAllocation, "ballots carry no vote mass");
  for (auto& [key, mass] : shares) mass /= total;
  return shares;
}

std::map<int, double> selection_count_histogram(const std::vector<Ballot>& ballots) {
  if (ballots.empty()) throw Error(Errc::EmptyBallotSet, "no ballots");
  std::map<int, double> histogram;
  for (const auto& ballot : ballots) {
    if (ballot.method.kind != VotingMethod::Kind::Approval &&
        ballot.method.kind != VotingMethod::Kind::KApproval)
      throw Error(Errc::MethodMismatch, "histogram applies to approval ballots");
    histogram[static_cast<int>(ballot.approvals.size())] += 1.0;
  }
  for (auto& [count, freq] : histogram)
    freq = 100.0 * freq / static_cast<double>(ballots.size());
  return histogram;
}

namespace {

// Continued fraction for the regularized incomplete beta (Lentz's method).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double eps = 3e-16;
  constexpr double fpmin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || std::isnan(x))
    throw Error(Errc::DegenerateInput, "incomplete beta needs a,b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw Error(Errc::DegenerateInput, "t-distribution needs df > 0");
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  double x = df / (df + t * t);
  return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

namespace {

double mean_of(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

// unbiased sample variance (n-1 denominator)
double variance_of(std::span<const double> v, double mean) {
  double sum = 0.0;
  for (double x : v) sum += (x - mean) * (x - mean);
  return sum / static_cast<double>(v.size() - 1);
}

}  // namespace

StatResult pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw Error(Errc::DegenerateInput, "Pearson r needs equal-length samples, n >= 3");
  double n = static_cast<double>(x.size());
  double mx = mean_of(x), my = mean_of(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw Error(Errc::DegenerateInput, "Pearson r undefined for constant samples");
  double r = sxy / std::sqrt(sxx * syy);
  r = std::clamp(r, -1.0, 1.0);
  StatResult result;
  result.statistic = r;
  if (std::abs(r) == 1.0) {
    result.p_value = 0.0;
  } else {
    double t = r * std::sqrt((n - 2.0) / (1.0 - r * r));
    result.p_value = student_t_two_sided_p(t, n - 2.0);
  }
  return result;
}

StatResult t_test(std::span<const double> a, std::span<const double> b, bool pooled) {
  if (a.size() < 2 || b.size() < 2)
    throw Error(Errc::DegenerateInput, "t-test needs at least 2 values per sample");
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double ma = mean_of(a), mb = mean_of(b);
  double va = variance_of(a, ma), vb = variance_of(b, mb);

  double t, df;
  if (pooled) {
    double sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    double se = std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
    if (se <= 0.0)
      throw Error(Errc::DegenerateInput, "t-test undefined with zero variance");
    t = (ma - mb) / se;
    df = na + nb - 2.0;
  } else {
    double wa = va / na, wb = vb / nb;
    double se = std::sqrt(wa + wb);
    if (se <= 0.0)
      throw Error(Errc::DegenerateInput, "t-test undefined with zero variance");
    t = (ma - mb) / se;
    df = (wa + wb) * (wa + wb) /
         (wa * wa / (na - 1.0) + wb * wb / (nb - 1.0));
  }
  return {t, student_t_two_sided_p(t, df)};
}

}  // namespace pbvote
