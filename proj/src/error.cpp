#include "bmisil/error.hpp"

namespace bmisil {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnsupportedMagic: return "UnsupportedMagic";
        case ErrorCode::MaxvalNot255: return "MaxvalNot255";
        case ErrorCode::TruncatedData: return "TruncatedData";
        case ErrorCode::WrongKind: return "WrongKind";
        case ErrorCode::NoForeground: return "NoForeground";
        case ErrorCode::OutOfBounds: return "OutOfBounds";
        case ErrorCode::BinaryBilinear: return "BinaryBilinear";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DegenerateHistogram: return "DegenerateHistogram";
        case ErrorCode::EvenStructuringElement: return "EvenStructuringElement";
        case ErrorCode::NoBackground: return "NoBackground";
        case ErrorCode::AngleOutOfRange: return "AngleOutOfRange";
        case ErrorCode::ShiftOutOfRange: return "ShiftOutOfRange";
        case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
        case ErrorCode::BoundsInverted: return "BoundsInverted";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NonIntegralOutput: return "NonIntegralOutput";
        case ErrorCode::OddSpatialDims: return "OddSpatialDims";
        case ErrorCode::EmptyBatch: return "EmptyBatch";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::DivergedLoss: return "DivergedLoss";
        case ErrorCode::WrongImageSize: return "WrongImageSize";
        case ErrorCode::EmptyGrid: return "EmptyGrid";
        case ErrorCode::ModelFormat: return "ModelFormat";
        case ErrorCode::NonPositiveInput: return "NonPositiveInput";
        case ErrorCode::ManifestParseError: return "ManifestParseError";
        case ErrorCode::DegenerateRange: return "DegenerateRange";
        case ErrorCode::EmptySubset: return "EmptySubset";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace bmisil
