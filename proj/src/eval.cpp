#include "bmisil/eval.hpp"

#include "bmisil/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace bmisil::eval {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, std::size_t min_len) {
    if (x.size() != y.size()) fail(ErrorCode::LengthMismatch, "inputs differ in length");
    if (x.size() < min_len) fail(ErrorCode::EmptyInput, "not enough values");
}

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

struct Moments {
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    double mx = 0.0;
    double my = 0.0;
};

Moments centered_moments(std::span<const double> x, std::span<const double> y) {
    Moments m;
    m.mx = mean(x);
    m.my = mean(y);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - m.mx;
        const double dy = y[i] - m.my;
        m.sxx += dx * dx;
        m.syy += dy * dy;
        m.sxy += dx * dy;
    }
    return m;
}

std::string fmt3(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    // Avoid "-0.000".
    if (std::string(buf) == "-0.000") return "0.000";
    return buf;
}

}  // namespace

double pearson_r(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y, 2);
    const Moments m = centered_moments(x, y);
    if (m.sxx == 0.0 || m.syy == 0.0) fail(ErrorCode::ZeroVariance, "constant input");
    return std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0);
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y, 2);
    const Moments m = centered_moments(x, y);
    if (m.sxx == 0.0) fail(ErrorCode::ZeroVariance, "constant regressor");
    LinearFit f;
    f.slope = m.sxy / m.sxx;
    f.intercept = m.my - f.slope * m.mx;
    if (m.syy == 0.0) {
        f.r_squared = 1.0;
    } else {
        f.r_squared = (m.sxy * m.sxy) / (m.sxx * m.syy);
    }
    return f;
}

ErrorMetrics error_metrics(std::span<const double> actual, std::span<const double> predicted) {
    check_pair(actual, predicted, 1);
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double d = predicted[i] - actual[i];
        abs_sum += std::abs(d);
        sq_sum += d * d;
    }
    const double n = static_cast<double>(actual.size());
    return {abs_sum / n, std::sqrt(sq_sum / n)};
}

EvalReport build_report(std::span<const double> actual, std::span<const double> predicted, bool require_fit) {
    const ErrorMetrics em = error_metrics(actual, predicted);
    EvalReport rep;
    rep.mae = em.mae;
    rep.rmse = em.rmse;
    for (std::size_t i = 0; i < actual.size(); ++i) rep.pairs.emplace_back(actual[i], predicted[i]);
    try {
        rep.pearson_r = pearson_r(actual, predicted);
        rep.fit = linear_fit(actual, predicted);
        rep.has_fit = true;
    } catch (const Error& e) {
        if (require_fit || (e.code() != ErrorCode::ZeroVariance && e.code() != ErrorCode::EmptyInput)) throw;
    }
    return rep;
}

std::string scatter_csv(const EvalReport& report) {
    std::string out = "actual_bmi,predicted_bmi\n";
    for (const auto& [a, p] : report.pairs) out += fmt3(a) + "," + fmt3(p) + "\n";
    return out;
}

std::string scatter_svg(const EvalReport& report) {
    if (report.pairs.empty()) fail(ErrorCode::EmptyInput, "scatter plot needs at least one pair");
    constexpr double kSize = 640.0;
    constexpr double kMargin = 70.0;
    constexpr double kPlot = kSize - 2 * kMargin;

    double lo = report.pairs.front().first;
    double hi = lo;
    for (const auto& [a, p] : report.pairs) {
        lo = std::min({lo, a, p});
        hi = std::max({hi, a, p});
    }
    double pad = 0.05 * (hi - lo);
    if (pad == 0.0) pad = 1.0;
    lo -= pad;
    hi += pad;
    auto sx = [&](double v) { return kMargin + (v - lo) / (hi - lo) * kPlot; };
    auto sy = [&](double v) { return kSize - kMargin - (v - lo) / (hi - lo) * kPlot; };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" viewBox=\"0 0 640 640\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"640\" fill=\"white\"/>\n";
    s += "<rect x=\"" + fmt3(kMargin) + "\" y=\"" + fmt3(kMargin) + "\" width=\"" + fmt3(kPlot) + "\" height=\"" +
         fmt3(kPlot) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double v = lo + (hi - lo) * i / 5.0;
        s += "<line x1=\"" + fmt3(sx(v)) + "\" y1=\"" + fmt3(kSize - kMargin) + "\" x2=\"" + fmt3(sx(v)) +
             "\" y2=\"" + fmt3(kSize - kMargin + 5) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + fmt3(sx(v)) + "\" y=\"" + fmt3(kSize - kMargin + 20) +
             "\" font-size=\"12\" text-anchor=\"middle\">" + fmt3(v) + "</text>\n";
        s += "<line x1=\"" + fmt3(kMargin - 5) + "\" y1=\"" + fmt3(sy(v)) + "\" x2=\"" + fmt3(kMargin) +
             "\" y2=\"" + fmt3(sy(v)) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + fmt3(kMargin - 8) + "\" y=\"" + fmt3(sy(v) + 4) +
             "\" font-size=\"12\" text-anchor=\"end\">" + fmt3(v) + "</text>\n";
    }
    s += "<text x=\"320.000\" y=\"620.000\" font-size=\"14\" text-anchor=\"middle\">Actual BMI (kg/m2)</text>\n";
    s += "<text x=\"20.000\" y=\"320.000\" font-size=\"14\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 20.000 320.000)\">Predicted BMI (kg/m2)</text>\n";
    s += "<line x1=\"" + fmt3(sx(lo)) + "\" y1=\"" + fmt3(sy(lo)) + "\" x2=\"" + fmt3(sx(hi)) + "\" y2=\"" +
         fmt3(sy(hi)) + "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n";
    if (report.has_fit) {
        // Fitted line clipped to the plot square.
        const double y_lo = report.fit.intercept + report.fit.slope * lo;
        const double y_hi = report.fit.intercept + report.fit.slope * hi;
        s += "<line x1=\"" + fmt3(sx(lo)) + "\" y1=\"" + fmt3(sy(y_lo)) + "\" x2=\"" + fmt3(sx(hi)) + "\" y2=\"" +
             fmt3(sy(y_hi)) + "\" stroke=\"red\" clip-path=\"url(#plot)\"/>\n";
    }
    s += "<clipPath id=\"plot\"><rect x=\"" + fmt3(kMargin) + "\" y=\"" + fmt3(kMargin) + "\" width=\"" +
         fmt3(kPlot) + "\" height=\"" + fmt3(kPlot) + "\"/></clipPath>\n";
    for (const auto& [a, p] : report.pairs) {
        s += "<circle cx=\"" + fmt3(sx(a)) + "\" cy=\"" + fmt3(sy(p)) + "\" r=\"3\" fill=\"steelblue\"/>\n";
    }
    const std::string r_text = report.has_fit ? fmt3(report.pearson_r) : "n/a";
    const std::string slope_text = report.has_fit ? fmt3(report.fit.slope) : "n/a";
    s += "<text x=\"" + fmt3(kMargin + 10) + "\" y=\"" + fmt3(kMargin + 20) + "\" font-size=\"14\">r = " + r_text +
         "  slope = " + slope_text + "</text>\n";
    s += "</svg>\n";
    return s;
}

void emit_scatter(const EvalReport& report, const std::string& csv_path, const std::string& svg_path) {
    if (report.pairs.empty()) fail(ErrorCode::EmptyInput, "scatter needs at least one pair");
    const std::string svg = scatter_svg(report);
    for (const auto& [path, text] : {std::pair{csv_path, scatter_csv(report)}, std::pair{svg_path, svg}}) {
        std::ofstream out(path, std::ios::binary);
        if (!out) fail(ErrorCode::IoError, "cannot write " + path);
        out << text;
        if (!out) fail(ErrorCode::IoError, "write failed for " + path);
    }
}

std::string summary_line(const EvalReport& report) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "r=%.4f slope=%.4f rmse=%.4f", report.pearson_r, report.fit.slope, report.rmse);
    return buf;
}

}  // namespace bmisil::eval
