#pragma once

#include <stdexcept>
#include <string>

namespace otap {

enum class Errc {
  ShapeMismatch,
  NonFiniteEntry,
  InvalidMode,
  InvalidOrder,
  SizeMismatch,
  ColsMismatch,
  ConvergenceFailure,
  ZeroMatrix,
  ZeroTensor,
  RankTooLarge,
  DegenerateInitializer,
  DegenerateSigma,
  InfeasibleInit,
  TooManyColumns,
  ParseError,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace otap
