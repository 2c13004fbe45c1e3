#include "smpriv/errors.hpp"

namespace smpriv {

std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace smpriv
