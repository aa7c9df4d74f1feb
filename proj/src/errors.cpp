#include "pbvote/errors.hpp"

namespace pbvote {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::MissingCombination: return "MissingCombination";
    case Errc::BadEnumValue: return "BadEnumValue";
    case Errc::UnknownDisplayedId: return "UnknownDisplayedId";
    case Errc::InvalidScoreSum: return "InvalidScoreSum";
    case Errc::RemoteUnavailable: return "RemoteUnavailable";
    case Errc::CacheMiss: return "CacheMiss";
    case Errc::CredentialMissing: return "CredentialMissing";
    case Errc::NoVotesFound: return "NoVotesFound";
    case Errc::TooFewVotes: return "TooFewVotes";
    case Errc::NonNumericPoints: return "NonNumericPoints";
    case Errc::ZeroAllocation: return "ZeroAllocation";
    case Errc::MixedMethods: return "MixedMethods";
    case Errc::EmptyBallotSet: return "EmptyBallotSet";
    case Errc::DomainMismatch: return "DomainMismatch";
    case Errc::BothEmpty: return "BothEmpty";
    case Errc::IdMismatch: return "IdMismatch";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::SchemaError: return "SchemaError";
    case Errc::UnknownProjectId: return "UnknownProjectId";
    case Errc::MethodMismatch: return "MethodMismatch";
    case Errc::BackendFailure: return "BackendFailure";
    case Errc::SurveyTooSmall: return "SurveyTooSmall";
  }
  return "UnknownError";
}

}  // namespace pbvote
