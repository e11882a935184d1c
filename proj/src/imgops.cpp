#include "bmisil/imgops.hpp"

#include "bmisil/error.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>

namespace bmisil::imgops {

using raster::kBackground;
using raster::kForeground;
using raster::PixelKind;

namespace {

void require_kind(const RasterImage& img, PixelKind kind, const char* op) {
    if (img.kind() != kind) fail(ErrorCode::WrongKind, std::string(op) + ": unexpected pixel kind");
}

void require_odd_se(int se_w, int se_h) {
    if (se_w < 1 || se_h < 1 || se_w % 2 == 0 || se_h % 2 == 0) {
        fail(ErrorCode::EvenStructuringElement, "structuring element must be odd and >= 1");
    }
}

// Separable min/max filter. A rectangular SE decomposes exactly into a
// horizontal pass followed by a vertical pass.
RasterImage rank_filter(const RasterImage& img, int se_w, int se_h, bool erode_mode) {
    require_kind(img, PixelKind::Binary, erode_mode ? "erode" : "dilate");
    require_odd_se(se_w, se_h);
    const int w = img.width();
    const int h = img.height();
    const int rx = se_w / 2;
    const int ry = se_h / 2;
    // Erosion: a window touching the border sees background.
    const std::uint8_t hit = erode_mode ? kBackground : kForeground;
    const std::uint8_t miss = erode_mode ? kForeground : kBackground;

    std::vector<std::uint8_t> tmp(img.pixel_count());
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            std::uint8_t v = miss;
            for (int dc = -rx; dc <= rx; ++dc) {
                const int cc = c + dc;
                if (cc < 0 || cc >= w) {
                    if (erode_mode) { v = hit; break; }
                    continue;
                }
                if (img.at(r, cc) == hit) { v = hit; break; }
            }
            tmp[static_cast<std::size_t>(r) * w + c] = v;
        }
    }
    std::vector<std::uint8_t> out(img.pixel_count());
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            std::uint8_t v = miss;
            for (int dr = -ry; dr <= ry; ++dr) {
                const int rr = r + dr;
                if (rr < 0 || rr >= h) {
                    if (erode_mode) { v = hit; break; }
                    continue;
                }
                if (tmp[static_cast<std::size_t>(rr) * w + c] == hit) { v = hit; break; }
            }
            out[static_cast<std::size_t>(r) * w + c] = v;
        }
    }
    return RasterImage(w, h, PixelKind::Binary, std::move(out));
}

class UnionFind {
public:
    int make() {
        parent_.push_back(static_cast<int>(parent_.size()));
        return parent_.back();
    }
    int find(int x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) std::swap(a, b);
        parent_[a] = b;
    }

private:
    std::vector<int> parent_;
};

}  // namespace

RasterImage threshold_fixed(const RasterImage& img, int t) {
    require_kind(img, PixelKind::Gray8, "threshold_fixed");
    if (t < 0 || t > 255) fail(ErrorCode::InvalidArgument, "threshold must be in [0, 255]");
    std::vector<std::uint8_t> px(img.pixel_count());
    const auto src = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = src[i] > t ? kForeground : kBackground;
    return RasterImage(img.width(), img.height(), PixelKind::Binary, std::move(px));
}

namespace {

__extension__ typedef unsigned __int128 Unsigned128;

}  // namespace

int otsu_threshold(const RasterImage& img) {
    require_kind(img, PixelKind::Gray8, "otsu_threshold");
    std::array<std::uint64_t, 256> hist{};
    for (auto p : img.pixels()) ++hist[p];
    if (std::count_if(hist.begin(), hist.end(), [](auto n) { return n > 0; }) < 2) {
        fail(ErrorCode::DegenerateHistogram, "image has a single gray level");
    }
    const std::uint64_t total = img.pixel_count();
    std::uint64_t total_sum = 0;
    for (int v = 0; v < 256; ++v) total_sum += hist[v] * static_cast<std::uint64_t>(v);

    // sigma_b^2 is proportional to (N*s0 - n0*S)^2 / (n0*n1); compared exactly.
    std::uint64_t n0 = 0;
    std::uint64_t s0 = 0;
    bool have_best = false;
    Unsigned128 best_q = 0;
    std::uint64_t best_r = 0;
    std::uint64_t best_den = 1;
    int best_t = 0;
    for (int t = 0; t < 255; ++t) {
        n0 += hist[t];
        s0 += hist[t] * static_cast<std::uint64_t>(t);
        const std::uint64_t n1 = total - n0;
        if (n0 == 0 || n1 == 0) continue;
        const Unsigned128 a = static_cast<Unsigned128>(total) * s0;
        const Unsigned128 b = static_cast<Unsigned128>(n0) * total_sum;
        const Unsigned128 d = a > b ? a - b : b - a;
        const Unsigned128 num = d * d;
        const Unsigned128 den128 = static_cast<Unsigned128>(n0) * n1;
        const std::uint64_t den = static_cast<std::uint64_t>(den128);
        const Unsigned128 q = num / den;
        const std::uint64_t r = static_cast<std::uint64_t>(num % den);
        bool better = !have_best || q > best_q;
        if (have_best && q == best_q) {
            better = static_cast<Unsigned128>(r) * best_den > static_cast<Unsigned128>(best_r) * den;
        }
        if (better) {
            have_best = true;
            best_q = q;
            best_r = r;
            best_den = den;
            best_t = t;
        }
    }
    return best_t;
}

RasterImage erode(const RasterImage& img, int se_w, int se_h) {
    return rank_filter(img, se_w, se_h, true);
}

RasterImage dilate(const RasterImage& img, int se_w, int se_h) {
    return rank_filter(img, se_w, se_h, false);
}

RasterImage opening(const RasterImage& img, int se_w, int se_h) {
    return dilate(erode(img, se_w, se_h), se_w, se_h);
}

DistanceMap distance_transform(const RasterImage& img) {
    require_kind(img, PixelKind::Binary, "distance_transform");
    const int w = img.width();
    const int h = img.height();
    if (img.foreground_count() == img.pixel_count()) {
        fail(ErrorCode::NoBackground, "distance transform needs at least one background pixel");
    }
    constexpr int inf = std::numeric_limits<int>::max() / 2;
    DistanceMap dm{w, h, std::vector<int>(img.pixel_count())};
    auto& d = dm.dist;
    auto idx = [w](int r, int c) { return static_cast<std::size_t>(r) * w + c; };

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!img.is_foreground(r, c)) {
                d[idx(r, c)] = 0;
                continue;
            }
            int v = inf;
            if (r > 0) v = std::min(v, d[idx(r - 1, c)] + 1);
            if (c > 0) v = std::min(v, d[idx(r, c - 1)] + 1);
            d[idx(r, c)] = v;
        }
    }
    for (int r = h - 1; r >= 0; --r) {
        for (int c = w - 1; c >= 0; --c) {
            int v = d[idx(r, c)];
            if (r + 1 < h) v = std::min(v, d[idx(r + 1, c)] + 1);
            if (c + 1 < w) v = std::min(v, d[idx(r, c + 1)] + 1);
            d[idx(r, c)] = v;
        }
    }
    return dm;
}

LabelMap connected_components(const RasterImage& img, Connectivity conn) {
    require_kind(img, PixelKind::Binary, "connected_components");
    const int w = img.width();
    const int h = img.height();
    LabelMap lm{w, h, std::vector<int>(img.pixel_count(), -1), 0};
    auto& prov = lm.labels;
    auto idx = [w](int r, int c) { return static_cast<std::size_t>(r) * w + c; };

    // Already-visited neighbours in raster order.
    const bool eight = conn == Connectivity::Eight;
    UnionFind uf;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!img.is_foreground(r, c)) continue;
            int label = -1;
            auto consider = [&](int rr, int cc) {
                if (rr < 0 || cc < 0 || cc >= w) return;
                const int n = prov[idx(rr, cc)];
                if (n < 0) return;
                if (label < 0) {
                    label = n;
                } else {
                    uf.unite(label, n);
                }
            };
            consider(r, c - 1);
            consider(r - 1, c);
            if (eight) {
                consider(r - 1, c - 1);
                consider(r - 1, c + 1);
            }
            prov[idx(r, c)] = label < 0 ? uf.make() : label;
        }
    }

    std::vector<int> final_label;
    for (auto& p : prov) {
        if (p < 0) {
            p = 0;
            continue;
        }
        const int root = uf.find(p);
        if (static_cast<std::size_t>(root) >= final_label.size()) final_label.resize(root + 1, 0);
        if (final_label[root] == 0) final_label[root] = ++lm.count;
        p = final_label[root];
    }
    return lm;
}

std::vector<RegionProps> region_properties(const LabelMap& lm) {
    std::vector<RegionProps> props(lm.count);
    std::vector<double> sum_r(lm.count, 0.0);
    std::vector<double> sum_c(lm.count, 0.0);
    for (int i = 0; i < lm.count; ++i) {
        props[i].label = i + 1;
        props[i].bbox = {lm.height, lm.width, -1, -1};
    }
    for (int r = 0; r < lm.height; ++r) {
        for (int c = 0; c < lm.width; ++c) {
            const int l = lm.at(r, c);
            if (l == 0) continue;
            auto& p = props[l - 1];
            ++p.area;
            p.bbox.min_row = std::min(p.bbox.min_row, r);
            p.bbox.min_col = std::min(p.bbox.min_col, c);
            p.bbox.max_row = std::max(p.bbox.max_row, r);
            p.bbox.max_col = std::max(p.bbox.max_col, c);
            sum_r[l - 1] += r;
            sum_c[l - 1] += c;
        }
    }
    for (int i = 0; i < lm.count; ++i) {
        const double a = static_cast<double>(props[i].area);
        props[i].centroid = {sum_r[i] / a, sum_c[i] / a};
    }
    return props;
}

RasterImage keep_largest_component(const RasterImage& img, Connectivity conn) {
    const LabelMap lm = connected_components(img, conn);
    if (lm.count == 0) fail(ErrorCode::NoForeground, "no component to keep");
    const auto props = region_properties(lm);
    int keep = props.front().label;
    std::size_t best = props.front().area;
    for (const auto& p : props) {
        if (p.area > best) {
            best = p.area;
            keep = p.label;
        }
    }
    std::vector<std::uint8_t> px(img.pixel_count());
    for (std::size_t i = 0; i < px.size(); ++i) {
        px[i] = lm.labels[i] == keep ? kForeground : kBackground;
    }
    return RasterImage(img.width(), img.height(), PixelKind::Binary, std::move(px));
}

}  // namespace bmisil::imgops
