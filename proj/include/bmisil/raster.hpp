#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bmisil::raster {

enum class PixelKind { Gray8, Rgb8, Binary };

constexpr std::size_t bytes_per_pixel(PixelKind kind) noexcept {
    return kind == PixelKind::Rgb8 ? 3 : 1;
}

inline constexpr std::uint8_t kForeground = 255;
inline constexpr std::uint8_t kBackground = 0;

/// Row-major image value. Binary images hold only 0 and 255 (255 = foreground).
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, PixelKind kind, std::uint8_t fill = 0);
    RasterImage(int width, int height, PixelKind kind, std::vector<std::uint8_t> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    PixelKind kind() const noexcept { return kind_; }
    bool empty() const noexcept { return pixels_.empty(); }

    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    std::span<std::uint8_t> pixels() noexcept { return pixels_; }

    /// Single-channel access (Gray8 / Binary).
    std::uint8_t at(int row, int col) const noexcept {
        return pixels_[static_cast<std::size_t>(row) * width_ + col];
    }
    std::uint8_t& at(int row, int col) noexcept {
        return pixels_[static_cast<std::size_t>(row) * width_ + col];
    }

    bool is_foreground(int row, int col) const noexcept { return at(row, col) == kForeground; }

    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    /// Number of 255 pixels; meaningful for Binary.
    std::size_t foreground_count() const noexcept;

    friend bool operator==(const RasterImage&, const RasterImage&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    PixelKind kind_ = PixelKind::Gray8;
    std::vector<std::uint8_t> pixels_;
};

/// Inclusive pixel box.
struct BoundingBox {
    int min_row = 0;
    int min_col = 0;
    int max_row = 0;
    int max_col = 0;

    int width() const noexcept { return max_col - min_col + 1; }
    int height() const noexcept { return max_row - min_row + 1; }
    bool contains(double row, double col) const noexcept {
        return row >= min_row && row <= max_row && col >= min_col && col <= max_col;
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

enum class ResizeMethod { Nearest, Bilinear };

// PNM (P2/P3/P5/P6, maxval 255). Gray8 and Binary are written as P5, Rgb8 as P6.
RasterImage read_pnm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_pnm(const RasterImage& img);

RasterImage load_pnm(const std::string& path);
void save_pnm(const RasterImage& img, const std::string& path);

/// Gray8 -> Binary reinterpretation; any nonzero pixel becomes foreground.
RasterImage to_binary(const RasterImage& img);

/// BT.601 luma, rounded half-up.
RasterImage to_grayscale(const RasterImage& img);

RasterImage invert(const RasterImage& img);

BoundingBox foreground_bbox(const RasterImage& img);

RasterImage crop(const RasterImage& img, const BoundingBox& box);

/// Nearest maps output (r, c) to source (floor((r+0.5)*H/h), floor((c+0.5)*W/w)).
/// Bilinear uses the same pixel-center alignment with edge clamping.
RasterImage resize(const RasterImage& img, int new_width, int new_height, ResizeMethod method);

RasterImage pad(const RasterImage& img, int margin, std::uint8_t fill);

// Density conversion and resolution standardisation only touch DPI metadata,
// which PNM does not carry. They are kept as named identity steps.
inline RasterImage convert_density(const RasterImage& img) { return img; }
inline RasterImage standardize_resolution(const RasterImage& img) { return img; }

}  // namespace bmisil::raster
