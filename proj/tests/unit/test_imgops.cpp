#include "bmisil/error.hpp"
#include "bmisil/imgops.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

using namespace bmisil;
using namespace bmisil::imgops;
using bmisil::raster::PixelKind;

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

RasterImage binary(int w, int h, const std::vector<int>& on) {
    RasterImage img(w, h, PixelKind::Binary);
    for (std::size_t i = 0; i < on.size(); ++i) img.pixels()[i] = on[i] ? 255 : 0;
    return img;
}

RasterImage block(int w, int h, int r0, int c0, int bh, int bw) {
    RasterImage img(w, h, PixelKind::Binary);
    for (int r = r0; r < r0 + bh; ++r)
        for (int c = c0; c < c0 + bw; ++c) img.at(r, c) = 255;
    return img;
}

}  // namespace

TEST(Threshold, FixedExamples) {
    const RasterImage g(3, 1, PixelKind::Gray8, std::vector<std::uint8_t>{0, 100, 200});
    EXPECT_EQ(threshold_fixed(g, 100), binary(3, 1, {0, 0, 1}));
    EXPECT_EQ(threshold_fixed(g, 255), binary(3, 1, {0, 0, 0}));
    const RasterImage g01(2, 1, PixelKind::Gray8, std::vector<std::uint8_t>{0, 1});
    EXPECT_EQ(threshold_fixed(g01, 0), binary(2, 1, {0, 1}));
    EXPECT_EQ(code_of([] { threshold_fixed(RasterImage(1, 1, PixelKind::Binary), 3); }), ErrorCode::WrongKind);
}

TEST(Otsu, BimodalPlateauPicksSmallest) {
    RasterImage g(16, 1, PixelKind::Gray8);
    for (int i = 0; i < 16; ++i) g.pixels()[i] = i < 8 ? 50 : 200;
    EXPECT_EQ(otsu_threshold(g), 50);
}

TEST(Otsu, ConstantImageIsDegenerate) {
    EXPECT_EQ(code_of([] { otsu_threshold(RasterImage(4, 4, PixelKind::Gray8, 9)); }), ErrorCode::DegenerateHistogram);
}

TEST(Otsu, MatchesExhaustiveOracle) {
    Rng rng(101);
    for (int i = 0; i < 100; ++i) {
        const int levels = i % 3 == 0 ? 4 : 256;
        auto g = oracle::random_gray(rng, 16, 16, levels);
        g.pixels()[0] = 0;
        g.pixels()[1] = 255;
        EXPECT_EQ(otsu_threshold(g), oracle::otsu_exhaustive(g)) << "image " << i;
    }
}

TEST(Morphology, ErodeExamples) {
    RasterImage single(3, 3, PixelKind::Binary);
    single.at(1, 1) = 255;
    EXPECT_EQ(erode(single, 3, 3).foreground_count(), 0u);
    EXPECT_EQ(erode(single, 1, 1), single);
    EXPECT_EQ(erode(block(9, 9, 2, 2, 5, 5), 3, 3), block(9, 9, 3, 3, 3, 3));
}

TEST(Morphology, DilateExamples) {
    RasterImage single(3, 3, PixelKind::Binary);
    single.at(1, 1) = 255;
    EXPECT_EQ(dilate(single, 3, 3), RasterImage(3, 3, PixelKind::Binary, 255));
    EXPECT_EQ(dilate(single, 1, 1), single);
}

TEST(Morphology, EvenElementRejected) {
    const RasterImage img(3, 3, PixelKind::Binary);
    EXPECT_EQ(code_of([&] { erode(img, 2, 3); }), ErrorCode::EvenStructuringElement);
    EXPECT_EQ(code_of([&] { dilate(img, 3, 0); }), ErrorCode::EvenStructuringElement);
    EXPECT_EQ(code_of([&] { opening(img, 4, 4); }), ErrorCode::EvenStructuringElement);
}

TEST(Morphology, MatchesDirectDefinition) {
    Rng rng(7);
    for (int i = 0; i < 60; ++i) {
        const auto img = oracle::random_binary(rng, oracle::random_size(rng, 1, 24), oracle::random_size(rng, 1, 24), 0.6);
        const int sw = 2 * oracle::random_size(rng, 0, 3) + 1, sh = 2 * oracle::random_size(rng, 0, 3) + 1;
        EXPECT_EQ(erode(img, sw, sh), oracle::morph_direct(img, sw, sh, true));
        EXPECT_EQ(dilate(img, sw, sh), oracle::morph_direct(img, sw, sh, false));
    }
}

TEST(Morphology, DualityUnderInversion) {
    // Both operators treat out-of-frame pixels as background, so the dual is
    // taken on a frame padded by the element radius and compared inside it.
    Rng rng(13);
    for (int i = 0; i < 60; ++i) {
        const int w = oracle::random_size(rng, 16, 32), h = oracle::random_size(rng, 16, 32);
        const auto img = oracle::random_binary(rng, w, h, 0.5);
        const int se = 2 * oracle::random_size(rng, 0, 2) + 1;
        const int m = se / 2;
        const auto padded = raster::pad(img, m, 0);
        const auto dual = raster::crop(raster::invert(erode(raster::invert(padded), se, se)), {m, m, m + h - 1, m + w - 1});
        EXPECT_EQ(dilate(img, se, se), dual) << "image " << i;
    }
}

TEST(Morphology, OpeningExamples) {
    RasterImage single(5, 5, PixelKind::Binary);
    single.at(2, 2) = 255;
    EXPECT_EQ(opening(single, 3, 3).foreground_count(), 0u);
    const auto b = block(9, 9, 2, 2, 5, 5);
    EXPECT_EQ(opening(b, 3, 3), b);
}

TEST(Morphology, OpeningIdempotentAndAntiExtensive) {
    Rng rng(19);
    for (int i = 0; i < 50; ++i) {
        const auto img = oracle::random_blobs(rng, 24, 24, 4);
        const auto o = opening(img, 3, 3);
        EXPECT_EQ(opening(o, 3, 3), o);
        for (std::size_t k = 0; k < o.pixels().size(); ++k) {
            ASSERT_LE(o.pixels()[k], img.pixels()[k]);
        }
    }
}

TEST(DistanceTransform, Examples) {
    RasterImage ring(3, 3, PixelKind::Binary, 255);
    ring.at(1, 1) = 0;
    const auto d = distance_transform(ring);
    EXPECT_EQ(d.dist, (std::vector<int>{2, 1, 2, 1, 0, 1, 2, 1, 2}));
    const auto z = distance_transform(RasterImage(4, 3, PixelKind::Binary));
    EXPECT_EQ(z.dist, std::vector<int>(12, 0));
    EXPECT_EQ(code_of([] { distance_transform(RasterImage(2, 2, PixelKind::Binary, 255)); }), ErrorCode::NoBackground);
}

TEST(DistanceTransform, MatchesBfsOracle) {
    Rng rng(41);
    for (int i = 0; i < 100; ++i) {
        auto img = oracle::random_binary(rng, oracle::random_size(rng, 1, 24), oracle::random_size(rng, 1, 24), 0.85);
        img.pixels()[rng.below(img.pixels().size())] = 0;
        const auto d = distance_transform(img);
        EXPECT_EQ(d.dist, oracle::bfs_distance(img)) << "image " << i;
    }
}

TEST(DistanceTransform, LipschitzInvariant) {
    Rng rng(43);
    const auto img = oracle::random_blobs(rng, 30, 30, 3);
    auto bg = img;
    bg.at(0, 0) = 0;
    const auto d = distance_transform(bg);
    for (int r = 0; r < 30; ++r) {
        for (int c = 0; c < 30; ++c) {
            EXPECT_EQ(d.at(r, c) == 0, !bg.is_foreground(r, c));
            if (c + 1 < 30) {
                EXPECT_LE(std::abs(d.at(r, c) - d.at(r, c + 1)), 1);
            }
            if (r + 1 < 30) {
                EXPECT_LE(std::abs(d.at(r, c) - d.at(r + 1, c)), 1);
            }
        }
    }
}

TEST(Components, Examples) {
    EXPECT_EQ(connected_components(RasterImage(5, 5, PixelKind::Binary), Connectivity::Eight).count, 0);
    const auto diag = binary(2, 2, {1, 0, 0, 1});
    EXPECT_EQ(connected_components(diag, Connectivity::Four).count, 2);
    EXPECT_EQ(connected_components(diag, Connectivity::Eight).count, 1);
}

TEST(Components, RasterEncounterOrder) {
    // The U in columns 0-2 only joins in the last row; the bar in column 4 is
    // a separate component met later in row 0.
    const auto u = binary(5, 3, {1, 0, 1, 0, 1,  //
                                 1, 0, 1, 0, 1,  //
                                 1, 1, 1, 0, 1});
    const auto lm = connected_components(u, Connectivity::Four);
    EXPECT_EQ(lm.count, 2);
    EXPECT_EQ(lm.at(0, 0), 1);
    EXPECT_EQ(lm.at(0, 2), 1);
    EXPECT_EQ(lm.at(0, 4), 2);
}

TEST(Components, PartitionMatchesFloodFill) {
    Rng rng(53);
    for (int i = 0; i < 100; ++i) {
        const auto img = oracle::random_binary(rng, 32, 32, 0.45);
        for (int conn : {4, 8}) {
            int count = 0;
            const auto expect = oracle::flood_fill_labels(img, conn, &count);
            const auto lm = connected_components(img, static_cast<Connectivity>(conn));
            EXPECT_EQ(lm.count, count);
            EXPECT_TRUE(oracle::same_partition(lm.labels, expect)) << "image " << i << " conn " << conn;
            int seen = 0;
            for (int l : lm.labels) {
                if (l > seen) {
                    EXPECT_EQ(l, seen + 1);
                    seen = l;
                }
            }
        }
    }
}

TEST(RegionProps, Examples) {
    RasterImage one(6, 5, PixelKind::Binary);
    one.at(2, 3) = 255;
    auto props = region_properties(connected_components(one, Connectivity::Eight));
    ASSERT_EQ(props.size(), 1u);
    EXPECT_EQ(props[0].area, 1u);
    EXPECT_EQ(props[0].bbox, (raster::BoundingBox{2, 3, 2, 3}));
    EXPECT_DOUBLE_EQ(props[0].centroid.row, 2.0);
    EXPECT_DOUBLE_EQ(props[0].centroid.col, 3.0);

    props = region_properties(connected_components(block(4, 4, 0, 0, 2, 2), Connectivity::Eight));
    ASSERT_EQ(props.size(), 1u);
    EXPECT_EQ(props[0].area, 4u);
    EXPECT_DOUBLE_EQ(props[0].centroid.row, 0.5);
    EXPECT_DOUBLE_EQ(props[0].centroid.col, 0.5);
}

TEST(RegionProps, AreasSumToForeground) {
    Rng rng(59);
    for (int i = 0; i < 30; ++i) {
        const auto img = oracle::random_binary(rng, 20, 20, 0.4);
        const auto props = region_properties(connected_components(img, Connectivity::Four));
        std::size_t total = 0;
        for (std::size_t k = 0; k < props.size(); ++k) {
            EXPECT_EQ(props[k].label, static_cast<int>(k) + 1);
            EXPECT_GE(props[k].area, 1u);
            EXPECT_TRUE(props[k].bbox.contains(props[k].centroid.row, props[k].centroid.col));
            total += props[k].area;
        }
        EXPECT_EQ(total, img.foreground_count());
    }
}

TEST(KeepLargest, Examples) {
    const auto b = block(8, 8, 1, 1, 3, 3);
    EXPECT_EQ(keep_largest_component(b, Connectivity::Eight), b);

    auto noisy = binary(6, 2, {1, 1, 0, 0, 0, 1,  //
                               1, 0, 0, 0, 0, 0});
    EXPECT_EQ(keep_largest_component(noisy, Connectivity::Eight), binary(6, 2, {1, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0}));

    const auto tie = binary(5, 1, {0, 1, 0, 1, 0});
    EXPECT_EQ(keep_largest_component(tie, Connectivity::Four), binary(5, 1, {0, 1, 0, 0, 0}));
    EXPECT_EQ(code_of([] { keep_largest_component(RasterImage(3, 3, PixelKind::Binary), Connectivity::Four); }),
              ErrorCode::NoForeground);
}

TEST(Imgops, OutputsStayBinary) {
    Rng rng(61);
    for (int i = 0; i < 20; ++i) {
        const auto img = oracle::random_binary(rng, 12, 12, 0.5);
        for (const auto& out : {erode(img, 3, 3), dilate(img, 3, 1), opening(img, 1, 3)}) {
            EXPECT_EQ(out.kind(), PixelKind::Binary);
            for (auto p : out.pixels()) ASSERT_TRUE(p == 0 || p == 255);
        }
    }
}
