#include "lungbench/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lungbench/errors.hpp"
#include "lungbench/util.hpp"

namespace lungbench {

namespace {

constexpr double kWidth = 640, kHeight = 480;
constexpr double kLeft = 70, kRight = 610, kTop = 40, kBottom = 420;

std::string coord(double v) { return format_fixed(v, 2); }

void open_svg(std::ostringstream& out, std::string_view title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "  <rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" fill=\"white\"/>\n";
    out << "  <text x=\"" << (kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
    out << "  <rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << (kRight - kLeft)
        << "\" height=\"" << (kBottom - kTop) << "\" fill=\"none\" stroke=\"black\"/>\n";
}

void axis_label(std::ostringstream& out, std::string_view x_label, std::string_view y_label) {
    out << "  <text x=\"" << ((kLeft + kRight) / 2) << "\" y=\"" << (kBottom + 40)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
        << "</text>\n";
    out << "  <text x=\"20\" y=\"" << ((kTop + kBottom) / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 20 " << ((kTop + kBottom) / 2) << ")\">" << y_label
        << "</text>\n";
}

double y_of(double sens) { return kBottom - sens * (kBottom - kTop); }

void y_ticks(std::ostringstream& out) {
    for (int i = 0; i <= 10; i += 2) {
        double v = i / 10.0;
        double y = y_of(v);
        out << "  <line x1=\"" << (kLeft - 5) << "\" y1=\"" << coord(y) << "\" x2=\"" << kLeft
            << "\" y2=\"" << coord(y) << "\" stroke=\"black\"/>\n";
        out << "  <text x=\"" << (kLeft - 10) << "\" y=\"" << coord(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << format_fixed(v, 1) << "</text>\n";
    }
}

void legend(std::ostringstream& out, const std::string& text) {
    out << "  <rect x=\"" << (kLeft + 14) << "\" y=\"" << (kBottom - 42)
        << "\" width=\"300\" height=\"26\" fill=\"white\" stroke=\"black\"/>\n";
    out << "  <line x1=\"" << (kLeft + 22) << "\" y1=\"" << (kBottom - 29) << "\" x2=\""
        << (kLeft + 50) << "\" y2=\"" << (kBottom - 29)
        << "\" stroke=\"steelblue\" stroke-width=\"2\"/>\n";
    out << "  <text x=\"" << (kLeft + 58) << "\" y=\"" << (kBottom - 24)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << text << "</text>\n";
}

}  // namespace

std::string render_froc_svg(const FrocCurve& curve,
                            const std::optional<FrocBootstrap>& bootstrap,
                            std::string_view title) {
    if (curve.points.empty()) throw InputError("render: empty FROC curve");

    const double lo = std::log2(0.125), hi = std::log2(8.0);
    auto x_of = [&](double fp) {
        double v = std::clamp(std::log2(std::max(fp, 0.125)), lo, hi);
        return kLeft + (v - lo) / (hi - lo) * (kRight - kLeft);
    };

    std::ostringstream out;
    open_svg(out, title);
    axis_label(out, "False positives per scan (log scale)", "Sensitivity");
    y_ticks(out);
    for (double rate : kFixedFpRates) {
        double x = x_of(rate);
        out << "  <line x1=\"" << coord(x) << "\" y1=\"" << kBottom << "\" x2=\"" << coord(x)
            << "\" y2=\"" << (kBottom + 5) << "\" stroke=\"black\"/>\n";
        out << "  <text x=\"" << coord(x) << "\" y=\"" << (kBottom + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << format_double(rate) << "</text>\n";
    }

    // interpolated curve sampled at the fixed-rate grid plus achieved points
    out << "  <polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (int step = 0; step <= 120; ++step) {
        double fp = std::exp2(lo + (hi - lo) * step / 120.0);
        double sens = interpolate_sensitivity(curve.points, fp);
        if (!first) out << ' ';
        out << coord(x_of(fp)) << ',' << coord(y_of(sens));
        first = false;
    }
    out << "\"/>\n";
    for (std::size_t i = 0; i < kFixedFpRates.size(); ++i) {
        out << "  <circle cx=\"" << coord(x_of(kFixedFpRates[i])) << "\" cy=\""
            << coord(y_of(curve.rate_sensitivities[i])) << "\" r=\"3\" fill=\"steelblue\"/>\n";
    }

    std::string label = "CPM = " + format_fixed(curve.cpm, 3);
    if (bootstrap)
        label += " (95% CI " + format_fixed(bootstrap->cpm_ci.first, 3) + "-" +
                 format_fixed(bootstrap->cpm_ci.second, 3) + ")";
    legend(out, label);
    out << "</svg>\n";
    return out.str();
}

std::string render_roc_svg(std::span<const RocPoint> points, const AucEstimate& estimate,
                           std::string_view title) {
    if (points.empty()) throw InputError("render: empty ROC curve");

    auto x_of = [](double fpr) { return kLeft + fpr * (kRight - kLeft); };

    std::ostringstream out;
    open_svg(out, title);
    axis_label(out, "False positive rate", "True positive rate");
    y_ticks(out);
    for (int i = 0; i <= 10; i += 2) {
        double v = i / 10.0;
        double x = x_of(v);
        out << "  <line x1=\"" << coord(x) << "\" y1=\"" << kBottom << "\" x2=\"" << coord(x)
            << "\" y2=\"" << (kBottom + 5) << "\" stroke=\"black\"/>\n";
        out << "  <text x=\"" << coord(x) << "\" y=\"" << (kBottom + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << format_fixed(v, 1) << "</text>\n";
    }
    out << "  <line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight
        << "\" y2=\"" << kTop << "\" stroke=\"lightgray\" stroke-dasharray=\"4 3\"/>\n";

    out << "  <polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i) out << ' ';
        out << coord(x_of(points[i].fpr)) << ',' << coord(y_of(points[i].tpr));
    }
    out << "\"/>\n";

    std::string label = "AUC = " + format_fixed(estimate.auc, 3) + " (95% CI " +
                        format_fixed(estimate.ci_low, 3) + "-" +
                        format_fixed(estimate.ci_high, 3) + ", " +
                        (estimate.method == CiMethod::Delong ? "DeLong" : "bootstrap") + ")";
    legend(out, label);
    out << "</svg>\n";
    return out.str();
}

}  // namespace lungbench
