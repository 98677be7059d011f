#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rankone {

enum class ErrorCode {
  InvalidArgument,
  AllWeightsZero,
  DenominatorVanishes,
  AtomAtLambda,
  EmptyModel,
  AtAtom,
  NotInSupport,
  NotPurePoint,
  NotApplicable,
  NumericalFailure,
  ParseError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AllWeightsZero: return "AllWeightsZero";
    case ErrorCode::DenominatorVanishes: return "DenominatorVanishes";
    case ErrorCode::AtomAtLambda: return "AtomAtLambda";
    case ErrorCode::EmptyModel: return "EmptyModel";
    case ErrorCode::AtAtom: return "AtAtom";
    case ErrorCode::NotInSupport: return "NotInSupport";
    case ErrorCode::NotPurePoint: return "NotPurePoint";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define RANKONE_THROW_UNLESS(cond, code, msg) \
  do {                                        \
    if (!(cond)) throw ::rankone::Error((code), (msg)); \
  } while (false)

}  // namespace rankone
