#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shortkern {

enum class ErrorCode {
  NotPsd,
  NotContraction,
  DimensionMismatch,
  DegenerateBasis,
  IndexOutOfRange,
  ScheduleExhausted,
  EffectNotSupportedInU,
  NotConverged,
  ConfigError,
  NumericalError,
  DegenerateFit,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPsd: return "NotPsd";
    case ErrorCode::NotContraction: return "NotContraction";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateBasis: return "DegenerateBasis";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ScheduleExhausted: return "ScheduleExhausted";
    case ErrorCode::EffectNotSupportedInU: return "EffectNotSupportedInU";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::NumericalError: return "NumericalError";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
  }
  return "Unknown";
}

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

inline void require_same_dim(long a, long b, std::string_view where) {
  if (a != b) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(where) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace detail
}  // namespace shortkern
