#pragma once

#include "bmisil/raster.hpp"

#include <cstdint>
#include <vector>

namespace bmisil::imgops {

using raster::BoundingBox;
using raster::RasterImage;

enum class Connectivity { Four = 4, Eight = 8 };

/// Component labels, 0 = background, 1..count in first raster-encounter order.
struct LabelMap {
    int width = 0;
    int height = 0;
    std::vector<int> labels;
    int count = 0;

    int at(int row, int col) const noexcept {
        return labels[static_cast<std::size_t>(row) * width + col];
    }
};

struct Centroid {
    double row = 0.0;
    double col = 0.0;
};

struct RegionProps {
    int label = 0;
    std::size_t area = 0;
    BoundingBox bbox;
    Centroid centroid;
};

/// City-block distance from each pixel to the nearest background pixel.
struct DistanceMap {
    int width = 0;
    int height = 0;
    std::vector<int> dist;

    int at(int row, int col) const noexcept {
        return dist[static_cast<std::size_t>(row) * width + col];
    }
};

/// pixel > t becomes foreground.
RasterImage threshold_fixed(const RasterImage& img, int t);

/// Smallest t in [0, 254] maximising w0*w1*(mu0-mu1)^2, class 0 = pixels <= t.
int otsu_threshold(const RasterImage& img);

/// Rectangular structuring element of odd size, origin at its centre.
/// Out-of-image pixels count as background.
RasterImage erode(const RasterImage& img, int se_w, int se_h);
RasterImage dilate(const RasterImage& img, int se_w, int se_h);
RasterImage opening(const RasterImage& img, int se_w, int se_h);

/// Exact L1 distance transform (two raster passes). Distances are measured to
/// background pixels inside the image only.
DistanceMap distance_transform(const RasterImage& img);

LabelMap connected_components(const RasterImage& img, Connectivity conn);

std::vector<RegionProps> region_properties(const LabelMap& lm);

/// Keeps the largest component; ties go to the smallest label.
RasterImage keep_largest_component(const RasterImage& img, Connectivity conn);

}  // namespace bmisil::imgops
