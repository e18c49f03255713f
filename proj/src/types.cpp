#include "nearcloak/types.hpp"

namespace nearcloak {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::domain: return "domain";
    case ErrorKind::interface: return "interface";
    case ErrorKind::mesh: return "mesh";
    case ErrorKind::singularity: return "singularity";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::resource: return "resource";
    case ErrorKind::conditioning: return "conditioning";
    case ErrorKind::resonance: return "resonance";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::domain:
    case ErrorKind::interface:
    case ErrorKind::mesh:
      return 1;
    case ErrorKind::resonance:
      return 3;
    default:
      return 2;
  }
}

}  // namespace nearcloak
