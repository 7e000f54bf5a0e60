#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spmts {

enum class ErrorCode {
  parse,
  validation,
  degenerate_prior,
  empty_subgraph,
  invalid_pose,
  empty_sub_prior,
  invalid_plan,
  dead_end,
  invalid_spec,
  protocol,
  not_found,
  optimizer,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse: return "parse_error";
    case ErrorCode::validation: return "validation_error";
    case ErrorCode::degenerate_prior: return "degenerate_prior";
    case ErrorCode::empty_subgraph: return "empty_subgraph";
    case ErrorCode::invalid_pose: return "invalid_pose";
    case ErrorCode::empty_sub_prior: return "empty_sub_prior";
    case ErrorCode::invalid_plan: return "invalid_plan";
    case ErrorCode::dead_end: return "dead_end";
    case ErrorCode::invalid_spec: return "invalid_spec";
    case ErrorCode::protocol: return "protocol_error";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::optimizer: return "optimizer_error";
  }
  return "error";
}

// Every failure raised by the library carries a code so callers (the CLI and
// the session service) can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace spmts
