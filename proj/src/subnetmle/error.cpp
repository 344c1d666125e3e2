#include "subnetmle/error.hpp"

namespace subnetmle {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::SingularOperator: return "singular_operator";
    case ErrorKind::InvalidTopology: return "invalid_topology";
    case ErrorKind::Index: return "index";
    case ErrorKind::Partition: return "partition";
    case ErrorKind::Separation: return "separation";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::WellPosedness: return "well_posedness";
    case ErrorKind::Channel: return "channel";
    case ErrorKind::InsufficientObservation: return "insufficient_observation";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Rank: return "rank";
    case ErrorKind::Init: return "init";
    case ErrorKind::UndefinedFit: return "undefined_fit";
    case ErrorKind::Pole: return "pole";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace subnetmle
