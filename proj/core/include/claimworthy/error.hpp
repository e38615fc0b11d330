#pragma once

#include <stdexcept>
#include <string>

namespace claimworthy {

// Error categories. The CLI maps these onto process exit codes
// (config -> 2, backend/protocol/request -> 3, dataset -> 4).
enum class ErrorKind {
  Config,
  Dataset,
  Validation,
  NotBuiltin,
  Budget,
  InsufficientData,
  Backend,
  Protocol,
  Request,
  Cache,
  Train,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Dataset: return "dataset";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::NotBuiltin: return "not-builtin";
    case ErrorKind::Budget: return "budget";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::Backend: return "backend";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::Request: return "request";
    case ErrorKind::Cache: return "cache";
    case ErrorKind::Train: return "train";
    case ErrorKind::Internal: return "internal";
  }
  return "unknown";
}

}  // namespace claimworthy
