#pragma once

#include <stdexcept>
#include <string>

namespace mflq {

enum class Errc {
  DimensionMismatch,
  NonFinite,
  AsymmetryExceedsTolerance,
  NotZeroSum,
  SingularLyapunov,
  SingularOperator,
  UnstableOperator,
  NotSolved,
  ResolventSingular,
  RangeConditionFailed,
  UnstableHomogeneousSystem,
  NonFiniteState,
  Schema,
};

const char* to_string(Errc c);

// Every library failure carries a machine-readable code; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace mflq
