#pragma once

#include "bmisil/imgops.hpp"
#include "bmisil/raster.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bmisil::silhouette {

using raster::RasterImage;

struct ExtractParams {
    /// Fixed threshold; Otsu when empty.
    std::optional<int> fixed_threshold;
    /// Subject darker than the background: invert after thresholding.
    bool subject_darker = true;
    int opening_se_w = 3;
    int opening_se_h = 3;
    /// Components whose deepest interior L1 distance is below this are dropped.
    int min_thickness = 2;
    imgops::Connectivity connectivity = imgops::Connectivity::Eight;

    void validate() const;
};

struct StandardizeParams {
    int standard_width = 256;
    int pad_margin = 8;
    static constexpr int kFinalSize = 64;

    void validate() const;
};

/// Photo -> single-component subject mask.
RasterImage extract_silhouette(const RasterImage& photo, const ExtractParams& p);

/// Drops components thinner than `min_thickness` (max interior distance).
RasterImage drop_thin_components(const RasterImage& mask, int min_thickness,
                                 imgops::Connectivity conn);

/// Intermediate images of `standardize`, in application order.
struct StandardizeTrace {
    raster::BoundingBox bbox;
    RasterImage cropped;
    RasterImage width_normalized;
    RasterImage padded;
    RasterImage result;
};

/// crop to bbox -> aspect-preserving resize to standard_width -> pad with
/// background -> nearest resize to 64x64.
RasterImage standardize(const RasterImage& sil, const StandardizeParams& p);
StandardizeTrace standardize_traced(const RasterImage& sil, const StandardizeParams& p);

struct BatchFailure {
    std::string path;
    std::string reason;
};

struct BatchReport {
    int ok = 0;
    int failed = 0;
    std::vector<std::string> outputs;
    std::vector<BatchFailure> failures;
};

/// Reads a CSV manifest whose first column is `path` (relative to the
/// manifest), writes `<stem>_sil.pgm` into out_dir for every row, and a
/// `manifest.csv` listing the outputs with any extra input columns carried over.
BatchReport process_batch(const std::string& manifest_path, const std::string& out_dir,
                          const ExtractParams& ep, const StandardizeParams& sp);

}  // namespace bmisil::silhouette
