#include "bmisil/raster.hpp"

#include "bmisil/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

namespace bmisil::raster {

RasterImage::RasterImage(int width, int height, PixelKind kind, std::uint8_t fill)
    : width_(width), height_(height), kind_(kind) {
    if (width < 1 || height < 1) {
        fail(ErrorCode::InvalidArgument, "image dimensions must be >= 1");
    }
    if (kind == PixelKind::Binary && fill != kForeground && fill != kBackground) {
        fail(ErrorCode::InvalidArgument, "binary fill must be 0 or 255");
    }
    pixels_.assign(pixel_count() * bytes_per_pixel(kind), fill);
}

RasterImage::RasterImage(int width, int height, PixelKind kind, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), kind_(kind), pixels_(std::move(pixels)) {
    if (width < 1 || height < 1) {
        fail(ErrorCode::InvalidArgument, "image dimensions must be >= 1");
    }
    if (pixels_.size() != pixel_count() * bytes_per_pixel(kind)) {
        fail(ErrorCode::InvalidArgument, "pixel buffer length does not match dimensions");
    }
    if (kind == PixelKind::Binary &&
        std::any_of(pixels_.begin(), pixels_.end(),
                    [](std::uint8_t p) { return p != kForeground && p != kBackground; })) {
        fail(ErrorCode::InvalidArgument, "binary image contains values other than 0/255");
    }
}

std::size_t RasterImage::foreground_count() const noexcept {
    return static_cast<std::size_t>(std::count(pixels_.begin(), pixels_.end(), kForeground));
}

namespace {

class PnmCursor {
public:
    explicit PnmCursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void skip_whitespace_and_comments() {
        while (pos_ < bytes_.size()) {
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    // Returns false at end of data.
    bool read_uint(unsigned long& out) {
        skip_whitespace_and_comments();
        if (pos_ >= bytes_.size()) return false;
        if (!std::isdigit(bytes_[pos_])) {
            fail(ErrorCode::InvalidArgument, "expected decimal integer in PNM data");
        }
        unsigned long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1'000'000'000UL) fail(ErrorCode::InvalidArgument, "PNM integer too large");
            ++pos_;
        }
        out = value;
        return true;
    }

    unsigned long header_uint() {
        unsigned long v = 0;
        if (!read_uint(v)) fail(ErrorCode::TruncatedData, "PNM header ends early");
        return v;
    }

    std::size_t pos() const noexcept { return pos_; }
    void advance(std::size_t n) noexcept { pos_ += n; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

RasterImage read_pnm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P') {
        fail(ErrorCode::UnsupportedMagic, "not a PNM file");
    }
    const char type = static_cast<char>(bytes[1]);
    if (type != '2' && type != '3' && type != '5' && type != '6') {
        fail(ErrorCode::UnsupportedMagic, std::string("unsupported PNM magic P") + type);
    }
    const bool ascii = type == '2' || type == '3';
    const PixelKind kind = (type == '2' || type == '5') ? PixelKind::Gray8 : PixelKind::Rgb8;

    PnmCursor cur(bytes);
    cur.advance(2);
    const auto width = cur.header_uint();
    const auto height = cur.header_uint();
    const auto maxval = cur.header_uint();
    if (width < 1 || height < 1 || width > 65535 || height > 65535) {
        fail(ErrorCode::InvalidArgument, "PNM dimensions out of range");
    }
    if (maxval != 255) {
        fail(ErrorCode::MaxvalNot255, "maxval is " + std::to_string(maxval));
    }

    const std::size_t samples = width * height * bytes_per_pixel(kind);
    std::vector<std::uint8_t> pixels(samples);
    if (ascii) {
        for (std::size_t i = 0; i < samples; ++i) {
            unsigned long v = 0;
            if (!cur.read_uint(v)) {
                fail(ErrorCode::TruncatedData, "expected " + std::to_string(samples) +
                                                   " samples, got " + std::to_string(i));
            }
            if (v > 255) fail(ErrorCode::InvalidArgument, "sample exceeds maxval");
            pixels[i] = static_cast<std::uint8_t>(v);
        }
    } else {
        // Exactly one whitespace byte separates maxval from the raster.
        if (cur.remaining() == 0) fail(ErrorCode::TruncatedData, "missing raster data");
        cur.advance(1);
        if (cur.remaining() < samples) {
            fail(ErrorCode::TruncatedData, "expected " + std::to_string(samples) +
                                               " bytes, got " + std::to_string(cur.remaining()));
        }
        std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(cur.pos()), samples,
                    pixels.begin());
    }
    return RasterImage(static_cast<int>(width), static_cast<int>(height), kind, std::move(pixels));
}

std::vector<std::uint8_t> write_pnm(const RasterImage& img) {
    const char* magic = img.kind() == PixelKind::Rgb8 ? "P6" : "P5";
    const std::string header = std::string(magic) + "\n" + std::to_string(img.width()) + " " +
                               std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels().begin(), img.pixels().end());
    return out;
}

RasterImage load_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return read_pnm(bytes);
}

void save_pnm(const RasterImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    const auto bytes = write_pnm(img);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

RasterImage to_binary(const RasterImage& img) {
    if (img.kind() == PixelKind::Rgb8) fail(ErrorCode::WrongKind, "to_binary needs one channel");
    std::vector<std::uint8_t> px(img.pixels().begin(), img.pixels().end());
    for (auto& p : px) p = p ? kForeground : kBackground;
    return RasterImage(img.width(), img.height(), PixelKind::Binary, std::move(px));
}

RasterImage to_grayscale(const RasterImage& img) {
    if (img.kind() != PixelKind::Rgb8) fail(ErrorCode::WrongKind, "to_grayscale expects Rgb8");
    const auto src = img.pixels();
    std::vector<std::uint8_t> px(img.pixel_count());
    for (std::size_t i = 0; i < px.size(); ++i) {
        const double luma = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
        px[i] = static_cast<std::uint8_t>(std::clamp(std::floor(luma + 0.5), 0.0, 255.0));
    }
    return RasterImage(img.width(), img.height(), PixelKind::Gray8, std::move(px));
}

RasterImage invert(const RasterImage& img) {
    if (img.kind() == PixelKind::Rgb8) fail(ErrorCode::WrongKind, "invert expects Gray8 or Binary");
    std::vector<std::uint8_t> px(img.pixels().begin(), img.pixels().end());
    for (auto& p : px) p = static_cast<std::uint8_t>(255 - p);
    return RasterImage(img.width(), img.height(), img.kind(), std::move(px));
}

BoundingBox foreground_bbox(const RasterImage& img) {
    if (img.kind() != PixelKind::Binary) fail(ErrorCode::WrongKind, "foreground_bbox expects Binary");
    BoundingBox box{img.height(), img.width(), -1, -1};
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            if (!img.is_foreground(r, c)) continue;
            box.min_row = std::min(box.min_row, r);
            box.min_col = std::min(box.min_col, c);
            box.max_row = std::max(box.max_row, r);
            box.max_col = std::max(box.max_col, c);
        }
    }
    if (box.max_row < 0) fail(ErrorCode::NoForeground, "image has no foreground pixels");
    return box;
}

RasterImage crop(const RasterImage& img, const BoundingBox& box) {
    if (box.min_row < 0 || box.min_col < 0 || box.max_row >= img.height() ||
        box.max_col >= img.width() || box.min_row > box.max_row || box.min_col > box.max_col) {
        fail(ErrorCode::OutOfBounds, "crop box outside image");
    }
    const std::size_t bpp = bytes_per_pixel(img.kind());
    const std::size_t row_bytes = static_cast<std::size_t>(box.width()) * bpp;
    std::vector<std::uint8_t> px;
    px.reserve(row_bytes * box.height());
    const auto src = img.pixels();
    for (int r = box.min_row; r <= box.max_row; ++r) {
        const auto begin = src.begin() + static_cast<std::ptrdiff_t>(
                                             (static_cast<std::size_t>(r) * img.width() + box.min_col) * bpp);
        px.insert(px.end(), begin, begin + static_cast<std::ptrdiff_t>(row_bytes));
    }
    return RasterImage(box.width(), box.height(), img.kind(), std::move(px));
}

namespace {

// floor((i + 0.5) * src / dst) in exact integer arithmetic.
int nearest_source(int i, int src, int dst) {
    return static_cast<int>((static_cast<long long>(2 * i + 1) * src) / (2LL * dst));
}

}  // namespace

RasterImage resize(const RasterImage& img, int new_width, int new_height, ResizeMethod method) {
    if (new_width < 1 || new_height < 1) fail(ErrorCode::InvalidArgument, "resize target must be >= 1");
    if (method == ResizeMethod::Bilinear && img.kind() == PixelKind::Binary) {
        fail(ErrorCode::BinaryBilinear, "bilinear resize would break the binary invariant");
    }
    const int w = img.width();
    const int h = img.height();
    const std::size_t bpp = bytes_per_pixel(img.kind());
    const auto src = img.pixels();
    std::vector<std::uint8_t> px(static_cast<std::size_t>(new_width) * new_height * bpp);

    if (method == ResizeMethod::Nearest) {
        std::vector<int> col_map(new_width);
        for (int c = 0; c < new_width; ++c) col_map[c] = nearest_source(c, w, new_width);
        for (int r = 0; r < new_height; ++r) {
            const int sr = nearest_source(r, h, new_height);
            for (int c = 0; c < new_width; ++c) {
                const std::size_t s = (static_cast<std::size_t>(sr) * w + col_map[c]) * bpp;
                const std::size_t d = (static_cast<std::size_t>(r) * new_width + c) * bpp;
                for (std::size_t k = 0; k < bpp; ++k) px[d + k] = src[s + k];
            }
        }
    } else {
        const double sy = static_cast<double>(h) / new_height;
        const double sx = static_cast<double>(w) / new_width;
        for (int r = 0; r < new_height; ++r) {
            const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
            const int y0 = static_cast<int>(fy);
            const int y1 = std::min(y0 + 1, h - 1);
            const double wy = fy - y0;
            for (int c = 0; c < new_width; ++c) {
                const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
                const int x0 = static_cast<int>(fx);
                const int x1 = std::min(x0 + 1, w - 1);
                const double wx = fx - x0;
                for (std::size_t k = 0; k < bpp; ++k) {
                    auto at = [&](int y, int x) {
                        return static_cast<double>(src[(static_cast<std::size_t>(y) * w + x) * bpp + k]);
                    };
                    const double top = at(y0, x0) * (1.0 - wx) + at(y0, x1) * wx;
                    const double bottom = at(y1, x0) * (1.0 - wx) + at(y1, x1) * wx;
                    const double v = top * (1.0 - wy) + bottom * wy;
                    px[(static_cast<std::size_t>(r) * new_width + c) * bpp + k] =
                        static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
                }
            }
        }
    }
    return RasterImage(new_width, new_height, img.kind(), std::move(px));
}

RasterImage pad(const RasterImage& img, int margin, std::uint8_t fill) {
    if (margin < 0) fail(ErrorCode::InvalidArgument, "pad margin must be >= 0");
    if (margin == 0) return img;
    const int w = img.width() + 2 * margin;
    const int h = img.height() + 2 * margin;
    RasterImage out(w, h, img.kind(), fill);
    const std::size_t bpp = bytes_per_pixel(img.kind());
    const std::size_t row_bytes = static_cast<std::size_t>(img.width()) * bpp;
    auto dst = out.pixels();
    const auto src = img.pixels();
    for (int r = 0; r < img.height(); ++r) {
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(r * row_bytes), row_bytes,
                    dst.begin() + static_cast<std::ptrdiff_t>(
                                      (static_cast<std::size_t>(r + margin) * w + margin) * bpp));
    }
    return out;
}

}  // namespace bmisil::raster
