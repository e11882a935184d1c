#pragma once

#include "bmisil/raster.hpp"
#include "bmisil/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bmisil::dataset {

using raster::RasterImage;

struct ParticipantRecord {
    std::string image_path;
    std::optional<double> mass_kg;
    std::optional<double> height_m;
    double bmi = 0.0;
};

/// Min-max normalisation constants for BMI targets.
struct NormMeta {
    double bmi_min = 0.0;
    double bmi_max = 1.0;

    friend bool operator==(const NormMeta&, const NormMeta&) = default;
};

struct LabeledSample {
    RasterImage image;
    double bmi = 0.0;
    double target = 0.0;
};

struct SplitSpec {
    double train_fraction = 0.5;
    double val_fraction = 0.25;
    double test_fraction = 0.25;
    std::uint64_t seed = 0;

    void validate() const;
};

/// mass / height^2 in kg/m^2.
double compute_bmi(double mass_kg, double height_m);

/// CSV with header `path,mass_kg,height_m` or `path,bmi`. Relative paths are
/// resolved against the manifest's directory.
std::vector<ParticipantRecord> load_manifest(const std::string& path);

/// Writes the `path,bmi` form.
void save_manifest(const std::string& path, const std::vector<ParticipantRecord>& records);

/// Fits the range from the given samples (unless `explicit_range` is set) and
/// fills every target.
NormMeta normalize_targets(std::vector<LabeledSample>& samples,
                           std::optional<NormMeta> explicit_range = std::nullopt);

/// Fills targets with an existing range; values outside the range map outside [0, 1].
void apply_normalization(std::vector<LabeledSample>& samples, const NormMeta& meta);

double normalize(double bmi, const NormMeta& meta);
double denormalize(double target, const NormMeta& meta);

struct SplitSizes {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
};

/// val = round(n * val_fraction), test = round(n * test_fraction), rest to train.
SplitSizes split_sizes(std::size_t n, const SplitSpec& spec);

/// Seeded shuffle permutation used by `split`.
std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed);

template <typename T>
struct Split {
    std::vector<T> train;
    std::vector<T> val;
    std::vector<T> test;
};

/// Seeded shuffle, then contiguous train | val | test partition.
template <typename T>
Split<T> split(const std::vector<T>& items, const SplitSpec& spec) {
    const SplitSizes sz = split_sizes(items.size(), spec);
    const auto perm = split_permutation(items.size(), spec.seed);
    Split<T> out;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        const T& item = items[perm[i]];
        if (i < sz.train) {
            out.train.push_back(item);
        } else if (i < sz.train + sz.val) {
            out.val.push_back(item);
        } else {
            out.test.push_back(item);
        }
    }
    return out;
}

/// Loads each record's image (must be 64x64 with values 0/255) into a sample.
std::vector<LabeledSample> load_samples(const std::vector<ParticipantRecord>& records);

}  // namespace bmisil::dataset
