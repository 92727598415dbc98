#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vbpg {

/// Failure categories shared by every stage. The CLI maps these onto exit
/// codes (usage = 1, data validation = 2, numerical = 3).
enum class ErrorKind {
  Usage,
  MissingInput,
  MissingColumn,
  BadEvalCode,
  BadZone,
  BadSkill,
  BadField,
  OrphanContact,
  AmbiguousLibero,
  IncompleteLineup,
  InconsistentWinner,
  NonAlternatingPossession,
  UnencodableContact,
  MissingState,
  NoSupport,
  UnlabelableOutcome,
  NoAlignment,
  UnknownFactor,
  UnknownModel,
  UnknownEntity,
  MissingRatio,
  Singular,
  NotConverged,
  NonConvergent,
  DegenerateSeason,
  InsufficientClassData,
  InvalidConfig,
};

inline constexpr std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return "Usage";
    case ErrorKind::MissingInput: return "MissingInput";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::BadEvalCode: return "BadEvalCode";
    case ErrorKind::BadZone: return "BadZone";
    case ErrorKind::BadSkill: return "BadSkill";
    case ErrorKind::BadField: return "BadField";
    case ErrorKind::OrphanContact: return "OrphanContact";
    case ErrorKind::AmbiguousLibero: return "AmbiguousLibero";
    case ErrorKind::IncompleteLineup: return "IncompleteLineup";
    case ErrorKind::InconsistentWinner: return "InconsistentWinner";
    case ErrorKind::NonAlternatingPossession: return "NonAlternatingPossession";
    case ErrorKind::UnencodableContact: return "UnencodableContact";
    case ErrorKind::MissingState: return "MissingState";
    case ErrorKind::NoSupport: return "NoSupport";
    case ErrorKind::UnlabelableOutcome: return "UnlabelableOutcome";
    case ErrorKind::NoAlignment: return "NoAlignment";
    case ErrorKind::UnknownFactor: return "UnknownFactor";
    case ErrorKind::UnknownModel: return "UnknownModel";
    case ErrorKind::UnknownEntity: return "UnknownEntity";
    case ErrorKind::MissingRatio: return "MissingRatio";
    case ErrorKind::Singular: return "Singular";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::NonConvergent: return "NonConvergent";
    case ErrorKind::DegenerateSeason: return "DegenerateSeason";
    case ErrorKind::InsufficientClassData: return "InsufficientClassData";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Exit code category for a failure kind.
inline constexpr int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage:
    case ErrorKind::MissingInput:
      return 1;
    case ErrorKind::Singular:
    case ErrorKind::NotConverged:
    case ErrorKind::NonConvergent:
      return 3;
    default:
      return 2;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace vbpg
