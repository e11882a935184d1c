#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bmisil::eval {

double pearson_r(std::span<const double> x, std::span<const double> y);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares of y on x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

struct ErrorMetrics {
    double mae = 0.0;
    double rmse = 0.0;
};

ErrorMetrics error_metrics(std::span<const double> actual, std::span<const double> predicted);

struct EvalReport {
    double pearson_r = 0.0;
    /// Predicted regressed on actual.
    LinearFit fit;
    double mae = 0.0;
    double rmse = 0.0;
    /// False when there are fewer than two pairs or a constant side; r and fit are then unset.
    bool has_fit = false;
    std::vector<std::pair<double, double>> pairs;  // (actual, predicted)
};

/// Error metrics always; correlation and fit when defined. Throws
/// ZeroVariance only when `require_fit` is set and the fit is undefined.
EvalReport build_report(std::span<const double> actual, std::span<const double> predicted, bool require_fit = true);

/// `actual_bmi,predicted_bmi` rows, 3 decimals.
std::string scatter_csv(const EvalReport& report);

/// 640x640 predicted-vs-actual plot with y = x and fitted lines. Output is a
/// pure function of the report.
std::string scatter_svg(const EvalReport& report);

void emit_scatter(const EvalReport& report, const std::string& csv_path, const std::string& svg_path);

/// `r=<v> slope=<v> rmse=<v>` with 4 decimals.
std::string summary_line(const EvalReport& report);

}  // namespace bmisil::eval
