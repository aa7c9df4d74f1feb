#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pbvote/catalog.hpp"
#include "pbvote/errors.hpp"
#include "pbvote/prompting.hpp"

namespace pbvote {

/// One voter's parsed vote, always in canonical id space.
struct Ballot {
  std::string voter_id;
  VotingMethod method;
  std::set<int> approvals;          // Approval / KApproval
  std::map<int, double> allocation; // Cumulative, raw points as parsed
  std::vector<int> ranking;         // Ranked, most preferred first
};

enum class Repair {
  DeduplicatedId,
  TruncatedToK,
  PaddedRejected,   // under-length response rejected instead of padded
  OutOfRangeDropped,
  OverAllocation,   // cumulative points sum != budget
};

const std::string& to_string(Repair r);
Repair parse_repair(const std::string& name);

struct ParseReport {
  std::vector<Repair> repairs;
  int raw_id_count = 0;  // "#<digits>" tokens found before any repair

  bool has(Repair r) const;
};

/// Thrown when a response cannot yield a usable ballot; carries the report
/// so run statistics still see the attempted repairs.
class ParseError : public Error {
 public:
  ParseError(Errc code, const std::string& message, ParseReport report)
      : Error(code, message), report_(std::move(report)) {}

  const ParseReport& report() const { return report_; }

 private:
  ParseReport report_;
};

std::pair<Ballot, ParseReport> parse_approvals(const std::string& text,
                                               const PresentedList& list,
                                               std::optional<int> k);
std::pair<Ballot, ParseReport> parse_cumulative(const std::string& text,
                                                const PresentedList& list);
std::pair<Ballot, ParseReport> parse_ranked(const std::string& text,
                                            const PresentedList& list,
                                            int depth = 5);

/// Dispatches on method (KApproval -> parse_approvals with k, etc.).
std::pair<Ballot, ParseReport> parse_response(const std::string& text,
                                              const PresentedList& list,
                                              const VotingMethod& method);

/// Canonical text form of a ballot, parseable back to the same ballot
/// (canonical ids; only meaningful against an Original list).
std::string format_ballot(const Ballot& ballot);

std::string ballot_to_jsonl(const Ballot& ballot, const ParseReport& report);
std::pair<Ballot, ParseReport> ballot_from_jsonl(const std::string& line);

}  // namespace pbvote
