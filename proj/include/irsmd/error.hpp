#pragma once

#include <stdexcept>
#include <string>

namespace irsmd {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  infeasible_point,
  io,
  parse,
  validation,
  unsupported,
  certificate,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require_dimension(std::size_t got, std::size_t expected, const char* what) {
  if (got != expected) {
    fail(ErrorCode::dimension_mismatch, std::string(what) + ": expected dimension " +
                                            std::to_string(expected) + ", got " +
                                            std::to_string(got));
  }
}

}  // namespace irsmd
