#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smpriv {

// Error categories; the CLI maps each one to a distinct exit code.
enum class ErrorKind {
  Config,      // invalid configuration or architecture
  Usage,       // API misuse: shape mismatch, stale tape, bad argument
  Numeric,     // non-finite value encountered
  Parse,       // malformed input file
  Degenerate,  // input for which the quantity is undefined
  Io,          // missing or unwritable file
};

std::string_view kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace smpriv
