#include "lstmtrade/plot.hpp"

#include "lstmtrade/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace lstmtrade {

namespace {

constexpr double kWidth = 960.0;
constexpr double kHeight = 540.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 180.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_equity_svg(const std::vector<PlotSeries>& series, const std::string& title) {
    if (series.empty()) throw DataError("nothing to plot");
    double x_min = 0.0, x_max = 0.0, y_min = 1.0, y_max = 1.0;
    bool first = true;
    for (const auto& s : series) {
        if (s.curve.empty()) throw DataError("equity curve '" + s.label + "' is empty");
        const double base = s.curve.front().equity;
        if (!(base > 0.0)) throw DataError("equity curve '" + s.label + "' does not start positive");
        for (const auto& p : s.curve) {
            const double x = p.date.serial();
            const double y = p.equity / base;
            if (first) {
                x_min = x_max = x;
                first = false;
            }
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }
    if (x_max == x_min) {
        x_min -= 1.0;
        x_max += 1.0;
    }
    const double pad = std::max(0.05 * (y_max - y_min), 0.05);
    y_min -= pad;
    y_max += pad;

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
    auto py = [&](double y) { return kTop + (y_max - y) / (y_max - y_min) * plot_h; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + num(kLeft) + "\" y=\"24\" font-size=\"16\">" + escape(title) + "</text>\n";

    // Axes and grid.
    svg += "<g stroke=\"#cccccc\" stroke-width=\"1\">\n";
    constexpr int kTicks = 5;
    for (int i = 0; i <= kTicks; ++i) {
        const double y = y_min + (y_max - y_min) * i / kTicks;
        svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py(y)) + "\" x2=\"" + num(kLeft + plot_w) + "\" y2=\"" +
               num(py(y)) + "\"/>\n";
    }
    svg += "</g>\n<g fill=\"#333333\">\n";
    for (int i = 0; i <= kTicks; ++i) {
        const double y = y_min + (y_max - y_min) * i / kTicks;
        svg += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(py(y) + 4) + "\" text-anchor=\"end\">" + num(y) +
               "</text>\n";
        const double x = x_min + (x_max - x_min) * i / kTicks;
        const std::string text = Date::from_serial(static_cast<std::int32_t>(std::lround(x))).to_string();
        svg += "<text x=\"" + num(px(x)) + "\" y=\"" + num(kTop + plot_h + 20) + "\" text-anchor=\"middle\">" +
               text + "</text>\n";
    }
    svg += "</g>\n";
    svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(plot_w) + "\" height=\"" +
           num(plot_h) + "\" fill=\"none\" stroke=\"#333333\"/>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % std::size(kPalette)];
        const double base = s.curve.front().equity;
        std::string d;
        for (std::size_t i = 0; i < s.curve.size(); ++i) {
            d += (i == 0 ? "M" : " L") + num(px(s.curve[i].date.serial())) + "," + num(py(s.curve[i].equity / base));
        }
        svg += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
        const double ly = kTop + 10 + 20.0 * static_cast<double>(k);
        const double lx = kLeft + plot_w + 15;
        svg += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 20) + "\" y2=\"" + num(ly) +
               "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + num(lx + 26) + "\" y=\"" + num(ly + 4) + "\">" + escape(s.label) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace lstmtrade
