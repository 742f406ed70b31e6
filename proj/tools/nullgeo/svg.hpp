#pragma once

// Minimal static line plots.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace nullgeo::cli {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

inline std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                            const std::vector<Series>& series, bool logy = false) {
    const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    auto fy = [&](double y) { return logy ? std::log10(std::max(y, 1e-300)) : y; };
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, fy(s.y[i]));
            y1 = std::max(y1, fy(s.y[i]));
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-300) x1 = x0 + 1;
    if (y1 - y0 < 1e-12 * std::max(1.0, std::abs(y0))) {
        y0 -= 0.5 * std::max(1e-12, std::abs(y0));
        y1 += 0.5 * std::max(1e-12, std::abs(y1));
    }
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (fy(y) - y0) / (y1 - y0) * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

    std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o += "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + title + "</text>\n";
    o += "<line x1=\"" + svg_num(L) + "\" y1=\"" + svg_num(H - B) + "\" x2=\"" + svg_num(W - R) + "\" y2=\"" + svg_num(H - B) + "\" stroke=\"black\"/>\n";
    o += "<line x1=\"" + svg_num(L) + "\" y1=\"" + svg_num(T) + "\" x2=\"" + svg_num(L) + "\" y2=\"" + svg_num(H - B) + "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
        const double yp = H - B - (H - T - B) * k / 4.0;
        o += "<text x=\"" + svg_num(px(xv)) + "\" y=\"" + svg_num(H - B + 16) + "\" text-anchor=\"middle\">" + svg_num(xv) + "</text>\n";
        o += "<text x=\"" + svg_num(L - 6) + "\" y=\"" + svg_num(yp + 4) + "\" text-anchor=\"end\">" +
             (logy ? "1e" + svg_num(yv) : svg_num(yv)) + "</text>\n";
    }
    o += "<text x=\"320\" y=\"" + svg_num(H - 12) + "\" text-anchor=\"middle\">" + xlabel + "</text>\n";
    o += "<text x=\"16\" y=\"" + svg_num(H / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " + svg_num(H / 2) + ")\">" + ylabel + "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        std::string pts;
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (!std::isfinite(series[s].x[i]) || !std::isfinite(series[s].y[i])) continue;
            pts += svg_num(px(series[s].x[i])) + "," + svg_num(py(series[s].y[i])) + " ";
        }
        const char* c = colors[s % 5];
        o += "<polyline fill=\"none\" stroke=\"" + std::string(c) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        o += "<text x=\"" + svg_num(W - R - 4) + "\" y=\"" + svg_num(T + 14 * (s + 1)) + "\" text-anchor=\"end\" fill=\"" + c + "\">" +
             series[s].name + "</text>\n";
    }
    o += "</svg>\n";
    return o;
}

}  // namespace nullgeo::cli
