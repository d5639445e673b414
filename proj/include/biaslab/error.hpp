#pragma once

#include <stdexcept>
#include <string>

namespace biaslab {

enum class ErrorKind {
  Parameter,      // out-of-domain argument
  Validation,     // malformed spec/config/name resolution
  EmptyData,      // nothing left to compute on
  Degenerate,     // zero variance, single class, constant column
  SingularDesign, // rank-deficient design matrix
  Sampling,       // population too small for the requested draw
  Stratification,
  Lookup,         // unknown term / series / column
  WeakInstrument,
  Decomposition,  // matrix not PSD
  Rank,
  Level,          // ordered response with an empty level
  Io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::EmptyData: return "empty-data";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::SingularDesign: return "singular-design";
    case ErrorKind::Sampling: return "sampling";
    case ErrorKind::Stratification: return "stratification";
    case ErrorKind::Lookup: return "lookup";
    case ErrorKind::WeakInstrument: return "weak-instrument";
    case ErrorKind::Decomposition: return "decomposition";
    case ErrorKind::Rank: return "rank";
    case ErrorKind::Level: return "level";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable kind so
/// harnesses can tag replicate failures without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace biaslab
