#pragma once

#include <stdexcept>
#include <string>

namespace latentflow {

enum class ErrorKind {
  Rank,
  Dim,
  Index,
  Shape,
  Config,
  State,
  Degenerate,
  Numerical,
  Data,
  Usage,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

#define LATENTFLOW_DEFINE_ERROR(Name, Kind)                 \
  class Name : public Error {                               \
   public:                                                  \
    explicit Name(const std::string& what)                  \
        : Error(ErrorKind::Kind, #Name ": " + what) {}      \
  };

LATENTFLOW_DEFINE_ERROR(RankError, Rank)
LATENTFLOW_DEFINE_ERROR(DimError, Dim)
LATENTFLOW_DEFINE_ERROR(IndexError, Index)
LATENTFLOW_DEFINE_ERROR(ShapeError, Shape)
LATENTFLOW_DEFINE_ERROR(ConfigError, Config)
LATENTFLOW_DEFINE_ERROR(StateError, State)
LATENTFLOW_DEFINE_ERROR(DegenerateError, Degenerate)
LATENTFLOW_DEFINE_ERROR(NumericalError, Numerical)
LATENTFLOW_DEFINE_ERROR(DataError, Data)
LATENTFLOW_DEFINE_ERROR(UsageError, Usage)

#undef LATENTFLOW_DEFINE_ERROR

/// Process exit code used by the CLI for an error of this kind:
/// 2 usage, 3 data, 4 numerical, 1 anything else.
int exit_code(ErrorKind kind);

}  // namespace latentflow
