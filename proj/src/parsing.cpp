#include "pbvote/parsing.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

namespace pbvote {
namespace {

using json = nlohmann::json;

const std::string kRepairNames[] = {
    "DeduplicatedId", "TruncatedToK", "PaddedRejected", "OutOfRangeDropped",
    "OverAllocation",
};

struct IdToken {
  int displayed_id = 0;   // -1 when the digits overflow int
  std::size_t begin = 0;  // offset of '#'
  std::size_t end = 0;    // one past the digits
};

// All "#<digits>" tokens in appearance order.
std::vector<IdToken> extract_id_tokens(const std::string& text) {
  static const std::regex token_re("#(\\d+)");
  std::vector<IdToken> tokens;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), token_re);
       it != std::sregex_iterator(); ++it) {
    IdToken tok;
    try {
      tok.displayed_id = std::stoi((*it)[1].str());
    } catch (const std::exception&) {
      tok.displayed_id = -1;
    }
    tok.begin = static_cast<std::size_t>(it->position(0));
    tok.end = tok.begin + static_cast<std::size_t>(it->length(0));
    tokens.push_back(tok);
  }
  return tokens;
}

void add_repair(ParseReport& report, Repair r) {
  if (!report.has(r)) report.repairs.push_back(r);
}

// Maps displayed ids to canonical, dropping unknown ids and duplicates
// (first occurrence wins). Order preserved.
std::vector<int> to_canonical_sequence(const std::vector<IdToken>& tokens,
                                       const PresentedList& list, ParseReport& report) {
  std::vector<int> canonical;
  std::set<int> seen;
  for (const auto& tok : tokens) {
    int d = tok.displayed_id;
    if (d < 1 || d > kCatalogSize || list.to_canonical[d] == 0) {
      add_repair(report, Repair::OutOfRangeDropped);
      continue;
    }
    int c = list.to_canonical[d];
    if (!seen.insert(c).second) {
      add_repair(report, Repair::DeduplicatedId);
      continue;
    }
    canonical.push_back(c);
  }
  return canonical;
}

}  // namespace

const std::string& to_string(Repair r) { return kRepairNames[static_cast<int>(r)]; }

Repair parse_repair(const std::string& name) {
  for (int i = 0; i < 5; ++i)
    if (name == kRepairNames[i]) return static_cast<Repair>(i);
  throw Error(Errc::SchemaError, "unknown repair '" + name + "'");
}

bool ParseReport::has(Repair r) const {
  return std::find(repairs.begin(), repairs.end(), r) != repairs.end();
}

std::pair<Ballot, ParseReport> parse_approvals(const std::string& text,
                                               const PresentedList& list,
                                               std::optional<int> k) {
  if (text.empty()) throw ParseError(Errc::NoVotesFound, "empty response", {});
  ParseReport report;
  auto tokens = extract_id_tokens(text);
  report.raw_id_count = static_cast<int>(tokens.size());
  auto ids = to_canonical_sequence(tokens, list, report);
  if (ids.empty()) throw ParseError(Errc::NoVotesFound, "no valid project ids", report);

  if (k) {
    if (static_cast<int>(ids.size()) > *k) {
      ids.resize(static_cast<std::size_t>(*k));
      add_repair(report, Repair::TruncatedToK);
    } else if (static_cast<int>(ids.size()) < *k) {
      // Fabricating the missing picks would bias outcomes; reject instead.
      add_repair(report, Repair::PaddedRejected);
      throw ParseError(Errc::TooFewVotes,
                       "got " + std::to_string(ids.size()) + " ids, want " +
                           std::to_string(*k),
                       report);
    }
  }

  Ballot ballot;
  ballot.method = k ? VotingMethod{VotingMethod::Kind::KApproval, *k}
                    : VotingMethod{VotingMethod::Kind::Approval};
  ballot.approvals.insert(ids.begin(), ids.end());
  return {std::move(ballot), std::move(report)};
}

std::pair<Ballot, ParseReport> parse_cumulative(const std::string& text,
                                                const PresentedList& list) {
  if (text.empty()) throw ParseError(Errc::NoVotesFound, "empty response", {});
  ParseReport report;
  auto tokens = extract_id_tokens(text);
  report.raw_id_count = static_cast<int>(tokens.size());
  if (tokens.empty()) throw ParseError(Errc::NoVotesFound, "no valid project ids", report);

  // Accepted point spellings, searched in the text span between one id token
  // and the next: "#5: 4" (colon right after the id) and "#5 - 4 points" /
  // "#5 - <name> ... - 4 points" (first "<number> points" in the span).
  static const std::regex colon_re("^\\s*:\\s*(\\d+(?:\\.\\d+)?)");
  static const std::regex points_re("(\\d+(?:\\.\\d+)?)\\s*points?\\b");

  std::map<int, double> allocation;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    int d = tokens[i].displayed_id;
    if (d < 1 || d > kCatalogSize || list.to_canonical[d] == 0) {
      add_repair(report, Repair::OutOfRangeDropped);
      continue;
    }
    std::size_t span_end = i + 1 < tokens.size() ? tokens[i + 1].begin : text.size();
    std::string span = text.substr(tokens[i].end, span_end - tokens[i].end);
    std::smatch m;
    double points = -1.0;
    if (std::regex_search(span, m, colon_re) || std::regex_search(span, m, points_re))
      points = std::stod(m[1].str());
    if (points < 0) continue;  // id mentioned without a point count
    int canonical = list.to_canonical[d];
    if (allocation.count(canonical)) add_repair(report, Repair::DeduplicatedId);
    allocation[canonical] = points;  // last mention wins
  }
  if (allocation.empty())
    throw ParseError(Errc::NonNumericPoints, "project ids present but no point counts",
                     report);

  double sum = 0.0;
  for (const auto& [id, pts] : allocation) sum += pts;
  if (sum <= 0.0)
    throw ParseError(Errc::NoVotesFound, "all allocations zero", report);
  if (std::abs(sum - 10.0) > 1e-9) add_repair(report, Repair::OverAllocation);

  Ballot ballot;
  ballot.method = VotingMethod{VotingMethod::Kind::Cumulative};
  ballot.allocation = std::move(allocation);
  return {std::move(ballot), std::move(report)};
}

std::pair<Ballot, ParseReport> parse_ranked(const std::string& text,
                                            const PresentedList& list, int depth) {
  if (text.empty()) throw ParseError(Errc::NoVotesFound, "empty response", {});
  ParseReport report;
  auto tokens = extract_id_tokens(text);
  report.raw_id_count = static_cast<int>(tokens.size());

  // An explicit numbered list ("1. #a ... 5. #e") restates the intended
  // order and wins over token appearance order.
  static const std::regex pair_re("(\\d+)\\s*[.)]\\s*#(\\d+)");
  std::vector<std::pair<int, IdToken>> numbered;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), pair_re);
       it != std::sregex_iterator(); ++it) {
    try {
      IdToken tok;
      tok.displayed_id = std::stoi((*it)[2].str());
      numbered.emplace_back(std::stoi((*it)[1].str()), tok);
    } catch (const std::exception&) {
      // overflow in either number: ignore the pair
    }
  }

  std::vector<IdToken> ordered;
  if (numbered.size() >= 2) {
    std::stable_sort(numbered.begin(), numbered.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [rank, tok] : numbered) ordered.push_back(tok);
  } else {
    ordered = tokens;
  }

  auto ids = to_canonical_sequence(ordered, list, report);
  if (ids.empty()) throw ParseError(Errc::NoVotesFound, "no valid project ids", report);
  if (static_cast<int>(ids.size()) < depth) {
    add_repair(report, Repair::PaddedRejected);
    throw ParseError(Errc::TooFewVotes,
                     "got " + std::to_string(ids.size()) + " distinct ids, want " +
                         std::to_string(depth),
                     report);
  }
  if (static_cast<int>(ids.size()) > depth) {
    ids.resize(static_cast<std::size_t>(depth));
    add_repair(report, Repair::TruncatedToK);
  }

  Ballot ballot;
  ballot.method = VotingMethod{VotingMethod::Kind::Ranked, depth};
  ballot.ranking = std::move(ids);
  return {std::move(ballot), std::move(report)};
}

std::pair<Ballot, ParseReport> parse_response(const std::string& text,
                                              const PresentedList& list,
                                              const VotingMethod& method) {
  switch (method.kind) {
    case VotingMethod::Kind::Approval:
      return parse_approvals(text, list, std::nullopt);
    case VotingMethod::Kind::KApproval:
      return parse_approvals(text, list, method.k);
    case VotingMethod::Kind::Cumulative:
      return parse_cumulative(text, list);
    case VotingMethod::Kind::Ranked:
      return parse_ranked(text, list, method.k);
  }
  throw Error(Errc::BadEnumValue, "bad method enum");
}

namespace {

std::string format_points(double points) {
  if (points == std::floor(points) && std::abs(points) < 1e15)
    return std::to_string(static_cast<long long>(points));
  std::ostringstream out;
  out << points;
  return out.str();
}

}  // namespace

std::string format_ballot(const Ballot& ballot) {
  std::ostringstream out;
  switch (ballot.method.kind) {
    case VotingMethod::Kind::Approval:
    case VotingMethod::Kind::KApproval: {
      bool first = true;
      for (int id : ballot.approvals) {
        if (!first) out << ", ";
        out << '#' << id;
        first = false;
      }
      break;
    }
    case VotingMethod::Kind::Cumulative: {
      bool first = true;
      for (const auto& [id, pts] : ballot.allocation) {
        if (!first) out << '\n';
        out << '#' << id << ": " << format_points(pts);
        first = false;
      }
      break;
    }
    case VotingMethod::Kind::Ranked: {
      bool first = true;
      for (int id : ballot.ranking) {
        if (!first) out << ',';
        out << '#' << id;
        first = false;
      }
      break;
    }
  }
  return out.str();
}

std::string ballot_to_jsonl(const Ballot& ballot, const ParseReport& report) {
  json content;
  switch (ballot.method.kind) {
    case VotingMethod::Kind::Approval:
    case VotingMethod::Kind::KApproval:
      content["approvals"] = ballot.approvals;
      break;
    case VotingMethod::Kind::Cumulative: {
      json alloc = json::object();
      for (const auto& [id, pts] : ballot.allocation) alloc[std::to_string(id)] = pts;
      content["allocation"] = std::move(alloc);
      break;
    }
    case VotingMethod::Kind::Ranked:
      content["ranking"] = ballot.ranking;
      break;
  }
  json repairs = json::array();
  for (Repair r : report.repairs) repairs.push_back(to_string(r));
  json line = {{"voter_id", ballot.voter_id},
               {"method", method_code(ballot.method)},
               {"content", std::move(content)},
               {"repairs", std::move(repairs)},
               {"raw_id_count", report.raw_id_count}};
  return line.dump();
}

std::pair<Ballot, ParseReport> ballot_from_jsonl(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, std::string("bad ballot JSONL: ") + e.what());
  }
  Ballot ballot;
  ParseReport report;
  try {
    ballot.voter_id = j.at("voter_id").get<std::string>();
    ballot.method = parse_method(j.at("method").get<std::string>());
    const json& content = j.at("content");
    if (content.contains("approvals"))
      ballot.approvals = content["approvals"].get<std::set<int>>();
    if (content.contains("allocation"))
      for (const auto& [key, value] : content["allocation"].items())
        ballot.allocation[std::stoi(key)] = value.get<double>();
    if (content.contains("ranking"))
      ballot.ranking = content["ranking"].get<std::vector<int>>();
    for (const auto& r : j.value("repairs", json::array()))
      report.repairs.push_back(parse_repair(r.get<std::string>()));
    report.raw_id_count = j.value("raw_id_count", 0);
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, std::string("bad ballot JSONL: ") + e.what());
  }
  return {std::move(ballot), std::move(report)};
}

}  // namespace pbvote
