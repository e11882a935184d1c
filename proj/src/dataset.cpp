#include "bmisil/dataset.hpp"

#include "bmisil/csv.hpp"
#include "bmisil/error.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace bmisil::dataset {

namespace fs = std::filesystem;

void SplitSpec::validate() const {
    if (train_fraction < 0 || val_fraction < 0 || test_fraction < 0) {
        fail(ErrorCode::InvalidArgument, "split fractions must be nonnegative");
    }
    if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
        fail(ErrorCode::InvalidArgument, "split fractions must sum to 1");
    }
}

double compute_bmi(double mass_kg, double height_m) {
    if (!(mass_kg > 0.0) || !(height_m > 0.0)) {
        fail(ErrorCode::NonPositiveInput, "mass and height must be positive");
    }
    return mass_kg / (height_m * height_m);
}

std::vector<ParticipantRecord> load_manifest(const std::string& path) {
    const csv::Table t = csv::read(path);
    const int path_col = t.column("path");
    const int bmi_col = t.column("bmi");
    const int mass_col = t.column("mass_kg");
    const int height_col = t.column("height_m");
    const bool bmi_form = path_col == 0 && bmi_col == 1 && t.header.size() == 2;
    const bool anthro_form =
        path_col == 0 && mass_col == 1 && height_col == 2 && t.header.size() == 3;
    if (!bmi_form && !anthro_form) {
        fail(ErrorCode::ManifestParseError,
             "header must be 'path,bmi' or 'path,mass_kg,height_m' in " + path);
    }

    const fs::path base = fs::absolute(fs::path(path)).parent_path();
    std::vector<ParticipantRecord> records;
    records.reserve(t.rows.size());
    for (const auto& [line, f] : t.rows) {
        ParticipantRecord r;
        if (f[0].empty()) fail(ErrorCode::ManifestParseError, "line " + std::to_string(line) + ": empty path");
        const fs::path p = f[0];
        r.image_path = (p.is_absolute() ? p : base / p).lexically_normal().string();
        if (bmi_form) {
            r.bmi = csv::parse_number(f[1], line);
            if (!(r.bmi > 0.0)) {
                fail(ErrorCode::ManifestParseError, "line " + std::to_string(line) + ": bmi must be positive");
            }
        } else {
            r.mass_kg = csv::parse_number(f[1], line);
            r.height_m = csv::parse_number(f[2], line);
            if (!(*r.mass_kg > 0.0) || !(*r.height_m > 0.0)) {
                fail(ErrorCode::ManifestParseError,
                     "line " + std::to_string(line) + ": mass and height must be positive");
            }
            r.bmi = compute_bmi(*r.mass_kg, *r.height_m);
        }
        records.push_back(std::move(r));
    }
    return records;
}

void save_manifest(const std::string& path, const std::vector<ParticipantRecord>& records) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    out << "path,bmi\n";
    char buf[64];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%.17g", r.bmi);
        out << r.image_path << ',' << buf << '\n';
    }
    if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

double normalize(double bmi, const NormMeta& meta) {
    return (bmi - meta.bmi_min) / (meta.bmi_max - meta.bmi_min);
}

double denormalize(double target, const NormMeta& meta) {
    return meta.bmi_min + target * (meta.bmi_max - meta.bmi_min);
}

void apply_normalization(std::vector<LabeledSample>& samples, const NormMeta& meta) {
    if (!(meta.bmi_max > meta.bmi_min)) fail(ErrorCode::DegenerateRange, "bmi_max must exceed bmi_min");
    for (auto& s : samples) s.target = normalize(s.bmi, meta);
}

NormMeta normalize_targets(std::vector<LabeledSample>& samples, std::optional<NormMeta> explicit_range) {
    NormMeta meta;
    if (explicit_range) {
        meta = *explicit_range;
    } else {
        if (samples.empty()) fail(ErrorCode::DegenerateRange, "no samples to fit a range");
        const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end(),
                                                  [](const auto& a, const auto& b) { return a.bmi < b.bmi; });
        meta = {lo->bmi, hi->bmi};
    }
    if (!(meta.bmi_max > meta.bmi_min)) fail(ErrorCode::DegenerateRange, "bmi range is empty");
    apply_normalization(samples, meta);
    return meta;
}

SplitSizes split_sizes(std::size_t n, const SplitSpec& spec) {
    spec.validate();
    const auto val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.val_fraction));
    const auto test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.test_fraction));
    if (val + test >= n || val == 0 || test == 0) {
        fail(ErrorCode::EmptySubset, "split of " + std::to_string(n) + " items leaves an empty subset");
    }
    return {n - val - test, val, test};
}

std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(perm[i - 1], perm[rng.below(i)]);
    }
    return perm;
}

std::vector<LabeledSample> load_samples(const std::vector<ParticipantRecord>& records) {
    std::vector<LabeledSample> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        RasterImage img = raster::load_pnm(r.image_path);
        if (img.kind() != raster::PixelKind::Binary) {
            // PGM carries no binary flag; accept gray files restricted to {0, 255}.
            img = RasterImage(img.width(), img.height(), raster::PixelKind::Binary,
                              std::vector<std::uint8_t>(img.pixels().begin(), img.pixels().end()));
        }
        out.push_back({std::move(img), r.bmi, 0.0});
    }
    return out;
}

}  // namespace bmisil::dataset
