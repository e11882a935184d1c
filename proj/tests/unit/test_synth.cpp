#include "bmisil/error.hpp"
#include "bmisil/eval.hpp"
#include "bmisil/imgops.hpp"
#include "bmisil/silhouette.hpp"
#include "bmisil/synth.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace bmisil;
using namespace bmisil::synth;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no exception";
    return ErrorCode::IoError;
}

}  // namespace

TEST(Synth, WaistWidth) {
    EXPECT_EQ(waist_half_width(0.0), 4.0);
    EXPECT_EQ(waist_half_width(1.0), 18.0);
    EXPECT_EQ(waist_half_width(0.5), 11.0);
}

TEST(Synth, SilhouetteShapeAndConnectivity) {
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const auto img = generate_silhouette({rng.uniform(), 56, rng.next_u64()});
        EXPECT_EQ(img.width(), kCanvas);
        EXPECT_EQ(img.height(), kCanvas);
        EXPECT_EQ(img.kind(), raster::PixelKind::Binary);
        EXPECT_EQ(imgops::connected_components(img, imgops::Connectivity::Eight).count, 1);
        const auto b = raster::foreground_bbox(img);
        EXPECT_GT(b.min_row, 0);
        EXPECT_LT(b.max_row, kCanvas - 1);
    }
}

TEST(Synth, AreaIncreasesWithBodyFactor) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::size_t prev = 0;
        for (double b : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const std::size_t area = generate_silhouette({b, 56, seed}).foreground_count();
            EXPECT_GT(area, prev) << "seed " << seed << " b " << b;
            prev = area;
        }
    }
}

TEST(Synth, Deterministic) {
    EXPECT_EQ(generate_silhouette({0.3, 56, 9}), generate_silhouette({0.3, 56, 9}));
    EXPECT_NE(generate_silhouette({0.3, 56, 9}), generate_silhouette({0.3, 56, 10}));
    SynthDatasetSpec spec;
    spec.n = 20;
    spec.seed = 4;
    spec.photo_mode = true;
    const auto a = generate_dataset(spec);
    const auto b = generate_dataset(spec);
    EXPECT_EQ(a.images, b.images);
    for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(a.records[i].bmi, b.records[i].bmi);
}

TEST(Synth, BodyParamValidation) {
    EXPECT_EQ(code_of([] { generate_silhouette({1.5, 56, 0}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { generate_silhouette({0.5, 70, 0}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { render_photo(raster::RasterImage(8, 8, raster::PixelKind::Gray8), 0); }),
              ErrorCode::WrongKind);
}

TEST(SynthDataset, EmptyAndInvalid) {
    SynthDatasetSpec spec;
    spec.n = 0;
    const auto d = generate_dataset(spec);
    EXPECT_TRUE(d.images.empty());
    EXPECT_TRUE(d.records.empty());
    spec.n = -1;
    EXPECT_EQ(code_of([&] { generate_dataset(spec); }), ErrorCode::InvalidArgument);
    spec = {};
    spec.bmi_min = 40;
    spec.bmi_max = 16;
    EXPECT_EQ(code_of([&] { generate_dataset(spec); }), ErrorCode::InvalidArgument);
}

TEST(SynthDataset, LabelsInRangeAndCorrelated) {
    SynthDatasetSpec spec;
    spec.seed = 7;
    const auto d = generate_dataset(spec);
    ASSERT_EQ(d.records.size(), 161u);
    std::vector<double> bmi;
    for (const auto& r : d.records) {
        EXPECT_GE(r.bmi, 16.0);
        EXPECT_LE(r.bmi, 40.0);
        bmi.push_back(r.bmi);
    }
    EXPECT_GT(eval::pearson_r(d.body_factors, bmi), 0.95);
    EXPECT_EQ(d.records[0].image_path, "synth_000.pgm");
    EXPECT_EQ(d.records[160].image_path, "synth_160.pgm");
}

TEST(SynthDataset, AreaQuartilesIncreaseWithBmi) {
    for (std::uint64_t seed : {7u, 8u, 9u, 10u}) {
        SynthDatasetSpec spec;
        spec.seed = seed;
        const auto d = generate_dataset(spec);
        std::vector<std::size_t> order(d.records.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](auto a, auto b) { return d.records[a].bmi < d.records[b].bmi; });
        double prev = 0.0;
        for (int q = 0; q < 4; ++q) {
            const std::size_t lo = order.size() * static_cast<std::size_t>(q) / 4;
            const std::size_t hi = order.size() * static_cast<std::size_t>(q + 1) / 4;
            double sum = 0.0;
            for (std::size_t k = lo; k < hi; ++k) sum += static_cast<double>(d.images[order[k]].foreground_count());
            const double mean = sum / static_cast<double>(hi - lo);
            EXPECT_GT(mean, prev) << "seed " << seed << " quartile " << q;
            prev = mean;
        }
    }
}

TEST(SynthDataset, PhotoModeRoundTrip) {
    SynthDatasetSpec spec;
    spec.n = 60;
    spec.seed = 3;
    spec.photo_mode = true;
    spec.floor_line = true;
    const auto d = generate_dataset(spec);
    for (std::size_t i = 0; i < d.images.size(); ++i) {
        EXPECT_EQ(d.images[i].kind(), raster::PixelKind::Rgb8);
        EXPECT_EQ(d.records[i].image_path.substr(d.records[i].image_path.size() - 4), ".ppm");
        const auto sil = silhouette::extract_silhouette(d.images[i], {});
        std::size_t diff = 0;
        for (std::size_t k = 0; k < sil.pixels().size(); ++k) diff += sil.pixels()[k] != d.masks[i].pixels()[k];
        EXPECT_LT(static_cast<double>(diff) / static_cast<double>(d.masks[i].foreground_count()), 0.02) << i;
    }
}

TEST(SynthDataset, StandardizeKeepsDimensions) {
    const auto img = generate_silhouette({0.5, 56, 1});
    EXPECT_EQ(silhouette::standardize(img, {}).width(), 64);
    EXPECT_EQ(silhouette::standardize(img, {}).height(), 64);
}
