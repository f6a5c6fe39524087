#pragma once

#include <stdexcept>
#include <string>

namespace clearing {

// Process exit codes used by the command-line tool. Each error class below
// maps to exactly one of them.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kValidation = 2,
  kCapacity = 3,
  kParse = 4,
  kIo = 5,
  kMarketInfeasible = 6,
  kIterationLimit = 7,
  kNoPriceExists = 8,
  kBudgetExceeded = 9,
  kInternal = 10,
};

class ClearingError : public std::runtime_error {
 public:
  ClearingError(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

class ParseError : public ClearingError {
 public:
  explicit ParseError(const std::string& what)
      : ClearingError(ExitCode::kParse, "parse error: " + what) {}
};

class ValidationError : public ClearingError {
 public:
  explicit ValidationError(const std::string& what)
      : ClearingError(ExitCode::kValidation, "validation error: " + what) {}
};

// Raised when installed capacity cannot cover demand in some period.
class CapacityError : public ClearingError {
 public:
  explicit CapacityError(const std::string& what)
      : ClearingError(ExitCode::kCapacity, "capacity screen failed: " + what) {}
};

class IoError : public ClearingError {
 public:
  explicit IoError(const std::string& what)
      : ClearingError(ExitCode::kIo, "i/o error: " + what) {}
};

class MarketInfeasible : public ClearingError {
 public:
  explicit MarketInfeasible(const std::string& what)
      : ClearingError(ExitCode::kMarketInfeasible, "market infeasible: " + what) {}
};

class NoPriceExists : public ClearingError {
 public:
  explicit NoPriceExists(const std::string& what)
      : ClearingError(ExitCode::kNoPriceExists, "no price exists: " + what) {}
};

class BudgetExceeded : public ClearingError {
 public:
  explicit BudgetExceeded(const std::string& what)
      : ClearingError(ExitCode::kBudgetExceeded, "oracle budget exceeded: " + what) {}
};

class InternalError : public ClearingError {
 public:
  explicit InternalError(const std::string& what)
      : ClearingError(ExitCode::kInternal, "internal error: " + what) {}
};

}  // namespace clearing
