#pragma once

#include <stdexcept>
#include <string>

namespace ritherm {

enum class ErrorCode {
  InvalidArgument = 1,
  Dimension,
  Contract,
  Numerical,
  Parse,
  Io,
  Degenerate,
  NonErgodic,
  InvalidWindow,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, const std::string& what, ErrorCode code = ErrorCode::InvalidArgument) {
  if (!ok) throw Error(code, what);
}

}  // namespace ritherm
