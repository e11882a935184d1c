#include "bmisil/augment.hpp"

#include "bmisil/error.hpp"

#include <cmath>
#include <numbers>

namespace bmisil::augment {

using raster::kBackground;
using raster::PixelKind;

void AugmentParams::validate() const {
    if (!(rotation_deg >= 0.0 && rotation_deg <= kMaxRotationDeg)) {
        fail(ErrorCode::AngleOutOfRange, "rotation_deg must be in [0, 45]");
    }
    if (!(width_shift_frac >= 0.0 && width_shift_frac <= kMaxShiftFrac)) {
        fail(ErrorCode::ShiftOutOfRange, "width_shift_frac must be in [0, 0.5]");
    }
}

namespace {

void require_binary(const RasterImage& img, const char* op) {
    if (img.kind() != PixelKind::Binary) fail(ErrorCode::WrongKind, std::string(op) + " expects Binary");
}

}  // namespace

RasterImage rotate_unbounded(const RasterImage& img, double deg) {
    require_binary(img, "rotate");
    if (!std::isfinite(deg)) fail(ErrorCode::AngleOutOfRange, "rotation angle must be finite");
    if (deg == 0.0) return img;
    const int w = img.width();
    const int h = img.height();
    const double cx = (w - 1) / 2.0;
    const double cy = (h - 1) / 2.0;
    const double theta = deg * std::numbers::pi / 180.0;
    const double cs = std::cos(theta);
    const double sn = std::sin(theta);
    RasterImage out(w, h, PixelKind::Binary, kBackground);
    for (int r = 0; r < h; ++r) {
        const double dy = r - cy;
        for (int c = 0; c < w; ++c) {
            const double dx = c - cx;
            const double sx = cx + cs * dx + sn * dy;
            const double sy = cy - sn * dx + cs * dy;
            const int sc = static_cast<int>(std::floor(sx + 0.5));
            const int sr = static_cast<int>(std::floor(sy + 0.5));
            if (sc >= 0 && sc < w && sr >= 0 && sr < h) out.at(r, c) = img.at(sr, sc);
        }
    }
    return out;
}

RasterImage rotate(const RasterImage& img, double deg) {
    if (!(std::abs(deg) <= kMaxRotationDeg)) {
        fail(ErrorCode::AngleOutOfRange, "rotation must be within +/-45 degrees");
    }
    return rotate_unbounded(img, deg);
}

RasterImage width_shift(const RasterImage& img, double frac) {
    require_binary(img, "width_shift");
    if (!(std::abs(frac) <= kMaxShiftFrac)) {
        fail(ErrorCode::ShiftOutOfRange, "width shift must be within +/-0.5");
    }
    const int w = img.width();
    const int dx = static_cast<int>(std::lround(frac * w));
    if (dx == 0) return img;
    RasterImage out(w, img.height(), PixelKind::Binary, kBackground);
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < w; ++c) {
            const int sc = c - dx;
            if (sc >= 0 && sc < w) out.at(r, c) = img.at(r, sc);
        }
    }
    return out;
}

RasterImage hflip(const RasterImage& img) {
    require_binary(img, "hflip");
    RasterImage out = img;
    const int w = img.width();
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < w; ++c) out.at(r, c) = img.at(r, w - 1 - c);
    }
    return out;
}

RasterImage sample_augmented(const RasterImage& img, const AugmentParams& p, Rng& rng) {
    p.validate();
    const double theta = (2.0 * rng.uniform() - 1.0) * p.rotation_deg;
    const double shift = (2.0 * rng.uniform() - 1.0) * p.width_shift_frac;
    RasterImage out = width_shift(rotate(img, theta), shift);
    if (p.hflip && rng.uniform() < 0.5) out = hflip(out);
    return out;
}

AugmentSearchResult optimize_augmentation(const std::function<double(const AugmentParams&)>& objective,
                                          const AugmentBounds& bounds,
                                          const opt::BasinHoppingConfig& bh, bool fixed_hflip) {
    const std::vector<double> low{bounds.rotation_low, bounds.shift_low};
    const std::vector<double> high{bounds.rotation_high, bounds.shift_high};
    auto to_params = [fixed_hflip](std::span<const double> x) {
        return AugmentParams{x[0], x[1], fixed_hflip};
    };
    const std::vector<double> x0{(low[0] + high[0]) / 2.0, (low[1] + high[1]) / 2.0};
    const auto res = opt::basin_hopping(
        [&](std::span<const double> x) { return objective(to_params(x)); }, x0, low, high, bh);
    return {to_params(res.x), res.f};
}

}  // namespace bmisil::augment
