#include "movingout/errors.hpp"

namespace movingout {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidAction: return "InvalidAction";
    case ErrorKind::kMapValidation: return "MapValidation";
    case ErrorKind::kExhaustedSampling: return "ExhaustedSampling";
    case ErrorKind::kDecodeError: return "DecodeError";
    case ErrorKind::kDegenerateEpisode: return "DegenerateEpisode";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kEmptyDataset: return "EmptyDataset";
    case ErrorKind::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::kLayoutMismatch: return "LayoutMismatch";
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kSchemaVersion: return "SchemaVersionError";
    case ErrorKind::kWidthMismatch: return "WidthMismatch";
    case ErrorKind::kInfeasibleSplit: return "InfeasibleSplit";
    case ErrorKind::kUsage: return "UsageError";
    case ErrorKind::kReplayDivergence: return "ReplayDivergence";
    case ErrorKind::kBadRequest: return "BadRequest";
    case ErrorKind::kIO: return "IOError";
  }
  return "Error";
}

}  // namespace movingout
