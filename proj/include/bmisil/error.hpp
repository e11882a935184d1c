#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bmisil {

enum class ErrorCode {
    // raster
    UnsupportedMagic,
    MaxvalNot255,
    TruncatedData,
    WrongKind,
    NoForeground,
    OutOfBounds,
    BinaryBilinear,
    InvalidArgument,
    // imgops
    DegenerateHistogram,
    EvenStructuringElement,
    NoBackground,
    // augment / optimize
    AngleOutOfRange,
    ShiftOutOfRange,
    NonFiniteObjective,
    BoundsInverted,
    // nn
    ShapeMismatch,
    NonIntegralOutput,
    OddSpatialDims,
    EmptyBatch,
    EmptyDataset,
    DivergedLoss,
    WrongImageSize,
    EmptyGrid,
    ModelFormat,
    // dataset
    NonPositiveInput,
    ManifestParseError,
    DegenerateRange,
    EmptySubset,
    // eval
    ZeroVariance,
    LengthMismatch,
    EmptyInput,
    // io
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace bmisil
