#include "nextline/error.hpp"

namespace nextline {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return "input error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Build: return "build error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::Training: return "training error";
    case ErrorKind::Distribution: return "distribution error";
    case ErrorKind::Query: return "query error";
    case ErrorKind::Store: return "store error";
    case ErrorKind::Integrity: return "integrity error";
    case ErrorKind::Internal: return "internal error";
  }
  return "error";
}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace nextline
