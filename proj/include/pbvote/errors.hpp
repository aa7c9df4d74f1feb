#pragma once

#include <stdexcept>
#include <string>

namespace pbvote {

enum class Errc {
  // catalog
  DuplicateId,
  MissingCombination,
  BadEnumValue,
  UnknownDisplayedId,
  // persona
  InvalidScoreSum,
  // agents
  RemoteUnavailable,
  CacheMiss,
  CredentialMissing,
  // parsing
  NoVotesFound,
  TooFewVotes,
  NonNumericPoints,
  // aggregation
  ZeroAllocation,
  MixedMethods,
  EmptyBallotSet,
  // metrics
  DomainMismatch,
  BothEmpty,
  IdMismatch,
  DegenerateInput,
  // harness
  SchemaError,
  UnknownProjectId,
  MethodMismatch,
  BackendFailure,
  SurveyTooSmall,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace pbvote
