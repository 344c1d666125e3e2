#pragma once

#include <stdexcept>
#include <string>

namespace subnetmle {

enum class ErrorKind {
  Dimension,
  SingularOperator,
  InvalidTopology,
  Index,
  Partition,
  Separation,
  Divergence,
  WellPosedness,
  Channel,
  InsufficientObservation,
  Domain,
  Rank,
  Init,
  UndefinedFit,
  Pole,
  Config,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Exception carrying a machine-readable kind; the C API maps kinds to status codes.
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

}  // namespace subnetmle
