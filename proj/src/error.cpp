#include "spike/error.hpp"

namespace spike {

const char* error_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NoBracket: return "NoBracket";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::UnsupportedMoment: return "UnsupportedMoment";
    case ErrorKind::QuadratureUnstable: return "QuadratureUnstable";
    case ErrorKind::OutOfChart: return "OutOfChart";
    case ErrorKind::SingularMetric: return "SingularMetric";
    case ErrorKind::DegenerateLandscape: return "DegenerateLandscape";
    case ErrorKind::ChartOverflow: return "ChartOverflow";
    case ErrorKind::DegenerateH: return "DegenerateH";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EigenNotConverged: return "EigenNotConverged";
    case ErrorKind::MeshTooCoarse: return "MeshTooCoarse";
    case ErrorKind::LinearSolveFailed: return "LinearSolveFailed";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::ConvergedToTrivial: return "ConvergedToTrivial";
  }
  return "Unknown";
}

}  // namespace spike
