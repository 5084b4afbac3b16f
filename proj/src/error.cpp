#include "latentflow/error.hpp"

namespace latentflow {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Rank: return "rank";
    case ErrorKind::Dim: return "dim";
    case ErrorKind::Index: return "index";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Config: return "config";
    case ErrorKind::State: return "state";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Data: return "data";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::Index:
      return 2;
    case ErrorKind::Data:
    case ErrorKind::Config:
      return 3;
    case ErrorKind::Numerical:
      return 4;
    default:
      return 1;
  }
}

}  // namespace latentflow
