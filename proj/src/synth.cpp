#include "bmisil/synth.hpp"

#include "bmisil/error.hpp"
#include "bmisil/imgops.hpp"
#include "bmisil/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace bmisil::synth {

using raster::kBackground;
using raster::kForeground;
using raster::PixelKind;

double waist_half_width(double body_factor) { return 4.0 + 14.0 * body_factor; }

namespace {

struct Figure {
    double cx = 0, top = 0, h = 0;
    double head_cy = 0, head_rx = 0, head_ry = 0;
    double neck_half = 0, neck_top = 0;
    double shoulder_y = 0, waist_y = 0, shoulder_half = 0, waist_half = 0;
    double arm_width = 0, arm_gap = 0, arm_len_left = 0, arm_len_right = 0;
    double leg_width = 0, leg_gap = 0, foot_y = 0;

    bool contains(double x, double y) const {
        const double dx = x - cx;
        const double hx = dx / head_rx;
        const double hy = (y - head_cy) / head_ry;
        if (hx * hx + hy * hy <= 1.0) return true;
        if (std::abs(dx) <= neck_half && y >= neck_top && y <= shoulder_y + 1.0) return true;
        if (y >= shoulder_y && y <= waist_y) {
            const double t = (y - shoulder_y) / (waist_y - shoulder_y);
            if (std::abs(dx) <= shoulder_half + t * (waist_half - shoulder_half)) return true;
        }
        // Arms hang beside the torso, joined to it by a shoulder cap.
        const double arm_inner = shoulder_half + arm_gap;
        const double arm_outer = arm_inner + arm_width;
        const double arm_len = dx < 0 ? arm_len_left : arm_len_right;
        if (std::abs(dx) >= arm_inner && std::abs(dx) <= arm_outer && y >= shoulder_y &&
            y <= shoulder_y + arm_len) {
            return true;
        }
        if (std::abs(dx) <= arm_outer && y >= shoulder_y && y <= shoulder_y + 3.5) return true;
        if (y >= waist_y - 1.0 && y <= foot_y) {
            const double inner = leg_gap / 2.0;
            if (std::abs(dx) >= inner && std::abs(dx) <= inner + leg_width) return true;
        }
        return false;
    }
};

}  // namespace

RasterImage generate_silhouette(const BodyParams& p) {
    if (!(p.body_factor >= 0.0 && p.body_factor <= 1.0)) {
        fail(ErrorCode::InvalidArgument, "body_factor must be in [0, 1]");
    }
    if (p.height_px < 32 || p.height_px > kCanvas - 2) {
        fail(ErrorCode::InvalidArgument, "height_px must be in [32, 62]");
    }
    const double b = p.body_factor;
    const double h = p.height_px;
    Rng rng(p.seed);

    Figure f;
    f.h = h;
    f.top = (kCanvas - p.height_px) / 2.0;
    f.cx = (kCanvas - 1) / 2.0 + rng.uniform(-3.0, 3.0);
    f.head_ry = 0.075 * h;
    f.head_cy = f.top + f.head_ry;
    f.head_rx = 0.058 * h + 0.8 * b;
    f.neck_half = 0.03 * h + 0.5;
    f.neck_top = f.head_cy;
    f.shoulder_y = f.top + 0.17 * h;
    f.waist_y = f.top + 0.52 * h;
    f.shoulder_half = 6.5 + 7.0 * b;
    f.waist_half = waist_half_width(b);
    f.arm_width = 3.2 + 2.0 * b;
    f.arm_gap = rng.uniform(0.0, 1.5);
    f.arm_len_left = 0.36 * h + rng.uniform(-2.0, 2.0);
    f.arm_len_right = 0.36 * h + rng.uniform(-2.0, 2.0);
    f.leg_width = 4.0 + 5.0 * b;
    f.leg_gap = rng.uniform(1.0, 2.5);
    f.foot_y = f.top + h - 1.0;

    const double lean = rng.uniform(-1.5, 1.5) * std::numbers::pi / 180.0;
    const double cs = std::cos(lean);
    const double sn = std::sin(lean);
    const double pivot_y = f.top + h / 2.0;

    RasterImage img(kCanvas, kCanvas, PixelKind::Binary, kBackground);
    for (int r = 0; r < kCanvas; ++r) {
        for (int c = 0; c < kCanvas; ++c) {
            const double dx = c - f.cx;
            const double dy = r - pivot_y;
            const double x = f.cx + cs * dx + sn * dy;
            const double y = pivot_y - sn * dx + cs * dy;
            if (f.contains(x, y)) img.at(r, c) = kForeground;
        }
    }
    // Rasterisation at a lean can in principle detach a sliver; keep the body.
    return imgops::keep_largest_component(img, imgops::Connectivity::Eight);
}

RasterImage render_photo(const RasterImage& mask, std::uint64_t seed, const PhotoOptions& opts) {
    if (mask.kind() != PixelKind::Binary) fail(ErrorCode::WrongKind, "render_photo expects a Binary mask");
    Rng rng(seed);
    const int w = mask.width();
    const int h = mask.height();
    int floor_row = -1;
    if (opts.floor_line && mask.foreground_count() > 0) {
        floor_row = raster::foreground_bbox(mask).max_row + 2;
        if (floor_row >= h) floor_row = -1;
    }
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const std::size_t i = (static_cast<std::size_t>(r) * w + c) * 3;
            if (mask.is_foreground(r, c)) {
                const double base[3] = {55.0, 45.0, 40.0};
                for (int k = 0; k < 3; ++k) {
                    px[i + k] = static_cast<std::uint8_t>(std::lround(base[k] + rng.uniform(-10.0, 10.0)));
                }
            } else if (r == floor_row) {
                for (int k = 0; k < 3; ++k) {
                    px[i + k] = static_cast<std::uint8_t>(std::lround(60.0 + rng.uniform(-5.0, 5.0)));
                }
            } else {
                const double g = 240.0 + rng.uniform(-6.0, 6.0);
                for (int k = 0; k < 3; ++k) px[i + k] = static_cast<std::uint8_t>(std::lround(g));
            }
        }
    }
    return RasterImage(w, h, PixelKind::Rgb8, std::move(px));
}

void SynthDatasetSpec::validate() const {
    if (n < 0) fail(ErrorCode::InvalidArgument, "n must be >= 0");
    if (!(bmi_min < bmi_max) || !(bmi_min > 0.0)) fail(ErrorCode::InvalidArgument, "bmi range must be 0 < min < max");
    if (!(noise_sd >= 0.0)) fail(ErrorCode::InvalidArgument, "noise_sd must be >= 0");
}

SynthDataset generate_dataset(const SynthDatasetSpec& spec) {
    spec.validate();
    SynthDataset ds;
    for (int i = 0; i < spec.n; ++i) {
        Rng rng(Rng::derive(spec.seed, static_cast<std::uint64_t>(i)));
        const double b = rng.uniform();
        const double noise = spec.noise_sd > 0.0 ? spec.noise_sd * rng.normal() : 0.0;
        const double bmi =
            std::clamp(spec.bmi_min + b * (spec.bmi_max - spec.bmi_min) + noise, spec.bmi_min, spec.bmi_max);
        const std::uint64_t body_seed = rng.next_u64();
        RasterImage mask = generate_silhouette({b, 56, body_seed});

        char name[32];
        std::snprintf(name, sizeof name, "synth_%03d.%s", i, spec.photo_mode ? "ppm" : "pgm");
        dataset::ParticipantRecord rec;
        rec.image_path = name;
        rec.bmi = bmi;
        ds.records.push_back(std::move(rec));
        ds.body_factors.push_back(b);
        if (spec.photo_mode) {
            ds.images.push_back(render_photo(mask, rng.next_u64(), {spec.floor_line}));
        } else {
            ds.images.push_back(mask);
        }
        ds.masks.push_back(std::move(mask));
    }
    return ds;
}

}  // namespace bmisil::synth
