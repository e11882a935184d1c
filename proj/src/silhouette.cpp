#include "bmisil/silhouette.hpp"

#include "bmisil/csv.hpp"
#include "bmisil/error.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace bmisil::silhouette {

namespace fs = std::filesystem;
using raster::kBackground;
using raster::kForeground;
using raster::PixelKind;

void ExtractParams::validate() const {
    if (fixed_threshold && (*fixed_threshold < 0 || *fixed_threshold > 255)) {
        fail(ErrorCode::InvalidArgument, "fixed threshold must be in [0, 255]");
    }
    if (opening_se_w < 1 || opening_se_h < 1 || opening_se_w % 2 == 0 || opening_se_h % 2 == 0) {
        fail(ErrorCode::EvenStructuringElement, "opening structuring element must be odd");
    }
    if (min_thickness < 0) fail(ErrorCode::InvalidArgument, "min_thickness must be >= 0");
}

void StandardizeParams::validate() const {
    if (pad_margin < 0) fail(ErrorCode::InvalidArgument, "pad_margin must be >= 0");
    if (standard_width <= 2 * pad_margin) {
        fail(ErrorCode::InvalidArgument, "standard_width must exceed twice the pad margin");
    }
}

RasterImage drop_thin_components(const RasterImage& mask, int min_thickness,
                                 imgops::Connectivity conn) {
    if (min_thickness <= 0 || mask.foreground_count() == mask.pixel_count()) return mask;
    const auto dm = imgops::distance_transform(mask);
    const auto lm = imgops::connected_components(mask, conn);
    std::vector<int> depth(lm.count + 1, 0);
    for (std::size_t i = 0; i < lm.labels.size(); ++i) {
        depth[lm.labels[i]] = std::max(depth[lm.labels[i]], dm.dist[i]);
    }
    std::vector<std::uint8_t> px(mask.pixel_count());
    for (std::size_t i = 0; i < px.size(); ++i) {
        const int l = lm.labels[i];
        px[i] = (l != 0 && depth[l] >= min_thickness) ? kForeground : kBackground;
    }
    return RasterImage(mask.width(), mask.height(), PixelKind::Binary, std::move(px));
}

RasterImage extract_silhouette(const RasterImage& photo, const ExtractParams& p) {
    p.validate();
    const RasterImage gray =
        photo.kind() == PixelKind::Rgb8 ? raster::to_grayscale(photo) : photo;
    if (gray.kind() != PixelKind::Gray8) {
        fail(ErrorCode::WrongKind, "extract_silhouette expects an Rgb8 or Gray8 photo");
    }
    const int t = p.fixed_threshold ? *p.fixed_threshold : imgops::otsu_threshold(gray);
    RasterImage mask = imgops::threshold_fixed(gray, t);
    if (p.subject_darker) mask = raster::invert(mask);
    mask = imgops::opening(mask, p.opening_se_w, p.opening_se_h);
    mask = drop_thin_components(mask, p.min_thickness, p.connectivity);
    return imgops::keep_largest_component(mask, p.connectivity);
}

StandardizeTrace standardize_traced(const RasterImage& sil, const StandardizeParams& p) {
    p.validate();
    if (sil.kind() != PixelKind::Binary) fail(ErrorCode::WrongKind, "standardize expects Binary");
    StandardizeTrace tr;
    // Inversion, density and resolution steps are identities for an already
    // foreground-is-255 mask without DPI metadata.
    const RasterImage base = raster::standardize_resolution(raster::convert_density(sil));
    tr.bbox = raster::foreground_bbox(base);
    tr.cropped = raster::crop(base, tr.bbox);

    const long long w = tr.cropped.width();
    const long long h = tr.cropped.height();
    const long long sw = p.standard_width;
    // round-half-up(h * sw / w)
    const int new_h = static_cast<int>(std::max(1LL, (2 * h * sw + w) / (2 * w)));
    tr.width_normalized =
        raster::resize(tr.cropped, p.standard_width, new_h, raster::ResizeMethod::Nearest);
    tr.padded = raster::pad(tr.width_normalized, p.pad_margin, kBackground);
    tr.result = raster::resize(tr.padded, StandardizeParams::kFinalSize,
                               StandardizeParams::kFinalSize, raster::ResizeMethod::Nearest);
    return tr;
}

RasterImage standardize(const RasterImage& sil, const StandardizeParams& p) {
    return standardize_traced(sil, p).result;
}

BatchReport process_batch(const std::string& manifest_path, const std::string& out_dir,
                          const ExtractParams& ep, const StandardizeParams& sp) {
    ep.validate();
    sp.validate();
    const csv::Table table = csv::read(manifest_path);
    const int path_col = table.column("path");
    if (path_col < 0) fail(ErrorCode::ManifestParseError, "manifest has no 'path' column");

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) fail(ErrorCode::IoError, "cannot create " + out_dir);

    const fs::path base = fs::path(manifest_path).parent_path();
    auto rows = table.rows;
    std::stable_sort(rows.begin(), rows.end(), [path_col](const auto& a, const auto& b) {
        return a.second[path_col] < b.second[path_col];
    });

    BatchReport report;
    std::vector<std::vector<std::string>> out_rows;
    for (const auto& [line, fields] : rows) {
        const fs::path rel = fields[path_col];
        const fs::path in_path = rel.is_absolute() ? rel : base / rel;
        const std::string out_name = rel.stem().string() + "_sil.pgm";
        try {
            const RasterImage photo = raster::load_pnm(in_path.string());
            const RasterImage sil = standardize(extract_silhouette(photo, ep), sp);
            raster::save_pnm(sil, (fs::path(out_dir) / out_name).string());
            ++report.ok;
            report.outputs.push_back(out_name);
            auto out_fields = fields;
            out_fields[path_col] = out_name;
            out_rows.push_back(std::move(out_fields));
        } catch (const Error& e) {
            ++report.failed;
            report.failures.push_back({fields[path_col], e.what()});
        }
    }

    std::ofstream mf(fs::path(out_dir) / "manifest.csv");
    if (!mf) fail(ErrorCode::IoError, "cannot write manifest in " + out_dir);
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        mf << (i ? "," : "") << table.header[i];
    }
    mf << '\n';
    for (const auto& r : out_rows) {
        for (std::size_t i = 0; i < r.size(); ++i) mf << (i ? "," : "") << r[i];
        mf << '\n';
    }
    if (!mf) fail(ErrorCode::IoError, "write failed in " + out_dir);
    return report;
}

}  // namespace bmisil::silhouette
