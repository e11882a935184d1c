#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace bmisil::opt {

using Objective = std::function<double(std::span<const double>)>;

struct NelderMeadConfig {
    int max_evals = 200;
    double x_tol = 1e-6;
    double f_tol = 1e-6;
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;

    void validate() const;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    int evals = 0;
};

/// Initial simplex: x0 plus per-axis offsets of 0.05 * max(|x0_i|, 1).
/// Converged once the simplex diameter (max vertex distance from the best
/// vertex, infinity norm) is below x_tol and the f-spread is below f_tol.
NelderMeadResult nelder_mead(const Objective& f, std::span<const double> x0,
                             const NelderMeadConfig& cfg = {});

struct BasinHoppingConfig {
    int n_iterations = 50;
    /// Per-dimension perturbation half-width; empty means 0.5 * (high - low).
    std::vector<double> step_size;
    double temperature = 1.0;
    std::uint64_t seed = 0;
    NelderMeadConfig local;

    void validate() const;
};

struct HopRecord {
    double f_current = 0.0;
    double f_candidate = 0.0;
    bool accepted = false;
};

struct BasinHoppingResult {
    std::vector<double> x;
    double f = 0.0;
    std::vector<HopRecord> hops;
};

/// Local search from x0, then n_iterations of: uniform perturbation, clamp to
/// the box, Nelder-Mead on the box-clamped objective, Metropolis acceptance
/// exp(-(f_new - f_cur) / T). Returns the best point seen (always in bounds).
BasinHoppingResult basin_hopping(const Objective& f, std::span<const double> x0,
                                 std::span<const double> low, std::span<const double> high,
                                 const BasinHoppingConfig& cfg);

}  // namespace bmisil::opt
