#pragma once

#include "bmisil/optimize.hpp"
#include "bmisil/raster.hpp"
#include "bmisil/rng.hpp"

#include <functional>

namespace bmisil::augment {

using raster::RasterImage;

struct AugmentParams {
    double rotation_deg = 2.0;
    double width_shift_frac = 0.02;
    bool hflip = true;

    void validate() const;
    friend bool operator==(const AugmentParams&, const AugmentParams&) = default;
};

inline constexpr double kMaxRotationDeg = 45.0;
inline constexpr double kMaxShiftFrac = 0.5;

/// Nearest-neighbour rotation about ((W-1)/2, (H-1)/2) by inverse mapping.
/// Positive angles turn the content clockwise as displayed (row 0 at the
/// top). Pixels that map outside the frame become background. Requires
/// |deg| <= 45.
RasterImage rotate(const RasterImage& img, double deg);

/// Same mapping without the angle limit.
RasterImage rotate_unbounded(const RasterImage& img, double deg);

/// Horizontal translation by round(frac * W) pixels, positive = right.
RasterImage width_shift(const RasterImage& img, double frac);

RasterImage hflip(const RasterImage& img);

/// rotate(U(-r, r)) -> width_shift(U(-s, s)) -> hflip with probability 0.5.
/// Draws exactly three uniforms (two when hflip is disabled).
RasterImage sample_augmented(const RasterImage& img, const AugmentParams& p, Rng& rng);

struct AugmentBounds {
    double rotation_low = 0.0;
    double rotation_high = 10.0;
    double shift_low = 0.0;
    double shift_high = 0.1;
};

struct AugmentSearchResult {
    AugmentParams params;
    double value = 0.0;
};

/// Basin hopping over (rotation_deg, width_shift_frac); `hflip` is taken from
/// `fixed_hflip` and not searched.
AugmentSearchResult optimize_augmentation(const std::function<double(const AugmentParams&)>& objective,
                                          const AugmentBounds& bounds,
                                          const opt::BasinHoppingConfig& bh, bool fixed_hflip = true);

}  // namespace bmisil::augment
