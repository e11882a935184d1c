#include "bmisil/optimize.hpp"

#include "bmisil/error.hpp"
#include "bmisil/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bmisil::opt {

void NelderMeadConfig::validate() const {
    if (max_evals < 1) fail(ErrorCode::InvalidArgument, "max_evals must be >= 1");
    if (!(reflection > 0 && expansion > 0 && contraction > 0 && shrink > 0)) {
        fail(ErrorCode::InvalidArgument, "Nelder-Mead coefficients must be positive");
    }
    if (!(expansion > reflection)) fail(ErrorCode::InvalidArgument, "expansion must exceed reflection");
    if (contraction >= 1.0 || shrink >= 1.0) {
        fail(ErrorCode::InvalidArgument, "contraction and shrink must be < 1");
    }
}

void BasinHoppingConfig::validate() const {
    local.validate();
    if (n_iterations < 1) fail(ErrorCode::InvalidArgument, "n_iterations must be >= 1");
    if (!(temperature > 0.0)) fail(ErrorCode::InvalidArgument, "temperature must be > 0");
}

namespace {

struct BudgetExhausted {};

class CountingObjective {
public:
    CountingObjective(const Objective& f, int budget) : f_(f), budget_(budget) {}

    double operator()(std::span<const double> x) {
        if (evals_ >= budget_) throw BudgetExhausted{};
        ++evals_;
        const double v = f_(x);
        if (!std::isfinite(v)) fail(ErrorCode::NonFiniteObjective, "objective returned a non-finite value");
        return v;
    }

    int evals() const noexcept { return evals_; }

private:
    const Objective& f_;
    int budget_;
    int evals_ = 0;
};

void nelder_mead_loop(CountingObjective& fn, std::vector<std::vector<double>>& simplex,
                      std::vector<double>& fv, const NelderMeadConfig& cfg) {
    const std::size_t n = fv.size() - 1;
    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    auto combine = [&](std::vector<double>& out, double t) {
        // out = centroid + t * (centroid - worst)
        const auto& worst = simplex[order[n]];
        for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + t * (centroid[j] - worst[j]);
    };

    while (true) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });

        const auto& best = simplex[order[0]];
        double diameter = 0.0;
        for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                diameter = std::max(diameter, std::abs(simplex[order[i]][j] - best[j]));
            }
        }
        const double spread = fv[order[n]] - fv[order[0]];
        if (diameter < cfg.x_tol && spread < cfg.f_tol) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[order[i]][j];
        }
        for (auto& c : centroid) c /= static_cast<double>(n);

        const std::size_t worst = order[n];
        combine(xr, cfg.reflection);
        const double fr = fn(xr);
        if (fr < fv[order[0]]) {
            combine(xe, cfg.reflection * cfg.expansion);
            const double fe = fn(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                fv[worst] = fe;
            } else {
                simplex[worst] = xr;
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[order[n - 1]]) {
            simplex[worst] = xr;
            fv[worst] = fr;
            continue;
        }
        const bool outside = fr < fv[worst];
        combine(xc, outside ? cfg.reflection * cfg.contraction : -cfg.contraction);
        const double fc = fn(xc);
        if (outside ? fc <= fr : fc < fv[worst]) {
            simplex[worst] = xc;
            fv[worst] = fc;
            continue;
        }
        const auto best_x = simplex[order[0]];
        for (std::size_t i = 1; i <= n; ++i) {
            auto& v = simplex[order[i]];
            std::vector<double> shrunk(n);
            for (std::size_t j = 0; j < n; ++j) shrunk[j] = best_x[j] + cfg.shrink * (v[j] - best_x[j]);
            fv[order[i]] = fn(shrunk);
            v = shrunk;
        }
    }
}

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, std::span<const double> x0,
                             const NelderMeadConfig& cfg) {
    cfg.validate();
    const std::size_t n = x0.size();
    if (n == 0) fail(ErrorCode::InvalidArgument, "nelder_mead needs at least one dimension");
    CountingObjective fn(f, cfg.max_evals);

    std::vector<std::vector<double>> simplex(n + 1, std::vector<double>(x0.begin(), x0.end()));
    for (std::size_t i = 0; i < n; ++i) {
        simplex[i + 1][i] += 0.05 * std::max(std::abs(x0[i]), 1.0);
    }
    std::vector<double> fv(n + 1, std::numeric_limits<double>::infinity());
    try {
        for (std::size_t i = 0; i <= n; ++i) fv[i] = fn(simplex[i]);
        nelder_mead_loop(fn, simplex, fv, cfg);
    } catch (const BudgetExhausted&) {
    }
    const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    return {simplex[best], fv[best], fn.evals()};
}

BasinHoppingResult basin_hopping(const Objective& f, std::span<const double> x0,
                                 std::span<const double> low, std::span<const double> high,
                                 const BasinHoppingConfig& cfg) {
    cfg.validate();
    const std::size_t n = x0.size();
    if (low.size() != n || high.size() != n) {
        fail(ErrorCode::InvalidArgument, "bounds dimension does not match x0");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (low[i] > high[i]) fail(ErrorCode::BoundsInverted, "low exceeds high");
        if (x0[i] < low[i] || x0[i] > high[i]) fail(ErrorCode::BoundsInverted, "x0 outside bounds");
    }
    std::vector<double> step = cfg.step_size;
    if (step.empty()) {
        step.resize(n);
        for (std::size_t i = 0; i < n; ++i) step[i] = 0.5 * (high[i] - low[i]);
    }
    if (step.size() != n) fail(ErrorCode::InvalidArgument, "step_size dimension mismatch");

    auto clamp = [&](std::vector<double> x) {
        for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], low[i], high[i]);
        return x;
    };
    auto eval = [&](std::span<const double> x) {
        const double v = f(x);
        if (!std::isfinite(v)) fail(ErrorCode::NonFiniteObjective, "objective returned a non-finite value");
        return v;
    };
    const Objective clamped = [&](std::span<const double> x) {
        return eval(clamp(std::vector<double>(x.begin(), x.end())));
    };
    auto local = [&](const std::vector<double>& start) {
        auto r = nelder_mead(clamped, start, cfg.local);
        auto x = clamp(std::move(r.x));
        return std::pair{x, r.f};
    };

    BasinHoppingResult result;
    result.x.assign(x0.begin(), x0.end());
    result.f = eval(result.x);

    auto [cur_x, cur_f] = local(result.x);
    if (cur_f < result.f) {
        result.x = cur_x;
        result.f = cur_f;
    }

    Rng rng(cfg.seed);
    for (int it = 0; it < cfg.n_iterations; ++it) {
        std::vector<double> trial = cur_x;
        for (std::size_t i = 0; i < n; ++i) trial[i] += rng.uniform(-step[i], step[i]);
        auto [new_x, new_f] = local(clamp(std::move(trial)));
        const double u = 1.0 - rng.uniform();
        const bool accept = new_f <= cur_f || u < std::exp(-(new_f - cur_f) / cfg.temperature);
        result.hops.push_back({cur_f, new_f, accept});
        if (accept) {
            cur_x = std::move(new_x);
            cur_f = new_f;
        }
        if (cur_f < result.f) {
            result.x = cur_x;
            result.f = cur_f;
        }
    }
    return result;
}

}  // namespace bmisil::opt
