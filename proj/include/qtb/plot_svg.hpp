// plot_svg.hpp — self-contained vector plots for scatter and trajectory output
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "qtb/ensemble.hpp"

namespace qtb {

namespace detail {

inline std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
}

struct Frame {
    double x0, x1, y0, y1;       // data ranges
    double w = 640.0, h = 480.0; // canvas
    double m = 56.0;             // margin

    double X(double x) const { return m + (x - x0) / (x1 - x0) * (w - 2 * m); }
    double Y(double y) const { return h - m - (y - y0) / (y1 - y0) * (h - 2 * m); }

    std::string polyline(const std::vector<std::pair<double, double>>& pts,
                         const std::string& cls, const std::string& style,
                         bool close = false) const {
        std::string d;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            d += i == 0 ? "M" : "L";
            d += px(X(pts[i].first)) + " " + px(Y(pts[i].second));
        }
        if (close) d += "Z";
        return "<path class=\"" + cls + "\" d=\"" + d + "\" style=\"" + style + "\"/>\n";
    }
};

inline std::vector<std::pair<double, double>> ellipse_points(const EllipseFit& e, double cx,
                                                             double cy) {
    std::vector<std::pair<double, double>> pts;
    const int n = 180;
    pts.reserve(std::size_t(n) + 1);
    const double ca = std::cos(e.angle), sa = std::sin(e.angle);
    for (int i = 0; i <= n; ++i) {
        const double t = 2.0 * M_PI * double(i) / double(n);
        const double u = e.semi_major * std::cos(t), v = e.semi_minor * std::sin(t);
        pts.emplace_back(cx + ca * u - sa * v, cy + sa * u + ca * v);
    }
    return pts;
}

}  // namespace detail

// Scatter of (dGamma, dM) with 65%/95% confidence ellipses, the coordinate
// origin marked by a cross, the regression line, and the conditional band
// |dGamma| <= gamma_tol.
inline std::string ensemble_plot_svg(const ScatterResult& r, double gamma_tol) {
    double xr = 1e-300, yr = 1e-300;
    for (const SamplePoint& s : r.samples) {
        xr = std::max(xr, std::abs(s.dgamma));
        yr = std::max(yr, std::abs(s.dm));
    }
    for (const EllipseFit* e : {&r.ellipse65, &r.ellipse95}) {
        if (e->degenerate) continue;
        const double ext = std::max(e->semi_major, e->semi_minor);
        xr = std::max(xr, std::abs(e->center_dgamma) + ext);
        yr = std::max(yr, std::abs(e->center_dm) + ext);
    }
    detail::Frame f{-1.1 * xr, 1.1 * xr, -1.1 * yr, 1.1 * yr};

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::px(f.w) +
           "\" height=\"" + detail::px(f.h) + "\" viewBox=\"0 0 " + detail::px(f.w) + " " +
           detail::px(f.h) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // conditional band
    if (std::isfinite(gamma_tol) && gamma_tol > 0.0) {
        const double bx0 = f.X(std::max(-gamma_tol, f.x0));
        const double bx1 = f.X(std::min(gamma_tol, f.x1));
        svg += "<rect class=\"conditional-band\" x=\"" + detail::px(bx0) + "\" y=\"" +
               detail::px(f.Y(f.y1)) + "\" width=\"" + detail::px(bx1 - bx0) + "\" height=\"" +
               detail::px(f.Y(f.y0) - f.Y(f.y1)) + "\" fill=\"#c8e6f5\" opacity=\"0.6\"/>\n";
    }

    // frame and zero axes
    svg += "<rect x=\"" + detail::px(f.m) + "\" y=\"" + detail::px(f.m) + "\" width=\"" +
           detail::px(f.w - 2 * f.m) + "\" height=\"" + detail::px(f.h - 2 * f.m) +
           "\" fill=\"none\" stroke=\"#444\"/>\n";
    svg += f.polyline({{f.x0, 0.0}, {f.x1, 0.0}}, "axis", "stroke:#bbb;fill:none");
    svg += f.polyline({{0.0, f.y0}, {0.0, f.y1}}, "axis", "stroke:#bbb;fill:none");

    // scatter points
    svg += "<g class=\"samples\" fill=\"#1a6faf\" fill-opacity=\"0.55\">\n";
    for (const SamplePoint& s : r.samples)
        svg += "<circle cx=\"" + detail::px(f.X(s.dgamma)) + "\" cy=\"" + detail::px(f.Y(s.dm)) +
               "\" r=\"2\"/>\n";
    svg += "</g>\n";

    // confidence ellipses
    if (!r.ellipse65.degenerate)
        svg += f.polyline(detail::ellipse_points(r.ellipse65, r.mean_dgamma, r.mean_dm),
                          "ellipse65", "stroke:#d95f02;fill:none;stroke-width:1.5", true);
    if (!r.ellipse95.degenerate)
        svg += f.polyline(detail::ellipse_points(r.ellipse95, r.mean_dgamma, r.mean_dm),
                          "ellipse95", "stroke:#7b3294;fill:none;stroke-width:1.5", true);

    // regression line dM = slope * dGamma through the mean
    const double s = r.regression_slope;
    svg += f.polyline({{f.x0, r.mean_dm + s * (f.x0 - r.mean_dgamma)},
                       {f.x1, r.mean_dm + s * (f.x1 - r.mean_dgamma)}},
                      "regression", "stroke:#2f9e44;fill:none;stroke-dasharray:6 3");

    // origin cross
    const double cl = 0.045 * (f.x1 - f.x0), ch = 0.045 * (f.y1 - f.y0);
    svg += f.polyline({{-cl, 0.0}, {cl, 0.0}}, "origin-cross", "stroke:#000;stroke-width:1.6");
    svg += f.polyline({{0.0, -ch}, {0.0, ch}}, "origin-cross", "stroke:#000;stroke-width:1.6");

    svg += "<text x=\"" + detail::px(f.w / 2) + "\" y=\"" + detail::px(f.h - 16.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">dGamma</text>\n";
    svg += "<text x=\"18\" y=\"" + detail::px(f.h / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 18 " +
           detail::px(f.h / 2) + ")\">dM</text>\n";
    svg += "</svg>\n";
    return svg;
}

// |A(t)| trajectory polyline.
inline std::string trajectory_plot_svg(const std::vector<double>& t,
                                       const std::vector<double>& a) {
    double tmax = 1e-300;
    for (double v : t) tmax = std::max(tmax, v);
    detail::Frame f{0.0, tmax, 0.0, 1.05};

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::px(f.w) +
           "\" height=\"" + detail::px(f.h) + "\" viewBox=\"0 0 " + detail::px(f.w) + " " +
           detail::px(f.h) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<rect x=\"" + detail::px(f.m) + "\" y=\"" + detail::px(f.m) + "\" width=\"" +
           detail::px(f.w - 2 * f.m) + "\" height=\"" + detail::px(f.h - 2 * f.m) +
           "\" fill=\"none\" stroke=\"#444\"/>\n";
    std::vector<std::pair<double, double>> pts;
    pts.reserve(t.size());
    for (std::size_t i = 0; i < t.size() && i < a.size(); ++i) pts.emplace_back(t[i], a[i]);
    svg += f.polyline(pts, "trajectory", "stroke:#1a6faf;fill:none;stroke-width:1.5");
    svg += "<text x=\"" + detail::px(f.w / 2) + "\" y=\"" + detail::px(f.h - 16.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">t</text>\n";
    svg += "<text x=\"18\" y=\"" + detail::px(f.h / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 18 " +
           detail::px(f.h / 2) + ")\">|A|</text>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace qtb
