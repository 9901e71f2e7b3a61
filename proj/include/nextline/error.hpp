#pragma once

#include <stdexcept>
#include <string>

namespace nextline {

/// Failure classes surfaced by the library. Each maps to one CLI exit code
/// and one HTTP status, so callers can dispatch on the class alone.
enum class ErrorKind {
  Input,         // bad user input: missing dirs, empty corpus, blank query
  Config,        // invalid parameters
  Parse,         // malformed text file (edge shards, walk dumps)
  Format,        // malformed binary artifact
  Build,         // value cannot be stored (binary16 overflow, duplicate key)
  Io,
  Training,      // numerical failure during training
  Distribution,  // walk step from an isolated node
  Query,         // dimension mismatch and similar search misuse
  Store,         // corrupted or inconsistent map store
  Integrity,     // bundle artifacts disagree with each other
  Internal,      // pipeline bug
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace nextline
