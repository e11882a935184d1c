#pragma once

#include "bmisil/dataset.hpp"
#include "bmisil/raster.hpp"

#include <cstdint>
#include <vector>

namespace bmisil::synth {

using raster::RasterImage;

struct BodyParams {
    /// 0 = leanest, 1 = widest.
    double body_factor = 0.5;
    int height_px = 56;
    std::uint64_t seed = 0;
};

inline constexpr int kCanvas = 64;

/// Torso half-width at the waist: 4 + 14 b pixels.
double waist_half_width(double body_factor);

/// 64x64 humanoid: ellipse head, trapezoid torso, rectangular arms and legs.
/// The seed drives pose nuisance (horizontal offset, limb jitter, a small
/// lean) that carries no BMI information. Always one 8-connected component.
RasterImage generate_silhouette(const BodyParams& p);

struct PhotoOptions {
    bool floor_line = false;
};

/// Rgb8 pseudo-photo of `mask`: gray-240 background, dark subject, mild
/// per-pixel noise, optional 1-px floor marking one blank row below the feet.
RasterImage render_photo(const RasterImage& mask, std::uint64_t seed, const PhotoOptions& opts = {});

struct SynthDatasetSpec {
    int n = 161;
    std::uint64_t seed = 0;
    double bmi_min = 16.0;
    double bmi_max = 40.0;
    double noise_sd = 0.5;
    bool photo_mode = false;
    bool floor_line = false;

    void validate() const;
};

struct SynthDataset {
    std::vector<RasterImage> images;
    /// image_path holds the suggested file name (`synth_000.pgm` / `.ppm`).
    std::vector<dataset::ParticipantRecord> records;
    std::vector<double> body_factors;
    /// Generating masks; equal to `images` unless photo_mode.
    std::vector<RasterImage> masks;
};

SynthDataset generate_dataset(const SynthDatasetSpec& spec);

}  // namespace bmisil::synth
