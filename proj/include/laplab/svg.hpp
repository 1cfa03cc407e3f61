#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "laplab/harness.hpp"

namespace laplab {
namespace detail {

inline std::string svg_num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

/// Small fixed colormap (dark blue -> teal -> yellow), linear in [0,1].
inline std::string heat_color(double u) {
    static const double stops[6][3] = {{68, 1, 84},    {59, 82, 139},  {33, 145, 140},
                                       {94, 201, 98},  {192, 223, 37}, {253, 231, 37}};
    u = std::clamp(u, 0.0, 1.0);
    const double pos = u * 5.0;
    const int lo = std::min(4, static_cast<int>(pos));
    const double w = pos - lo;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                  static_cast<int>(std::lround(stops[lo][0] * (1 - w) + stops[lo + 1][0] * w)),
                  static_cast<int>(std::lround(stops[lo][1] * (1 - w) + stops[lo + 1][1] * w)),
                  static_cast<int>(std::lround(stops[lo][2] * (1 - w) + stops[lo + 1][2] * w)));
    return buf;
}

struct Panel {
    double x0, y0, w, h;
};

inline void svg_text(std::ostream& os, double x, double y, const std::string& s,
                     int size = 12, const char* anchor = "middle") {
    os << "<text x=\"" << svg_num(x) << "\" y=\"" << svg_num(y) << "\" font-size=\"" << size
       << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << s << "</text>\n";
}

} // namespace detail

/// Error-field heatmap: log10(mean error) over the (log10 N, log10 eps) grid,
/// one panel per metric, with a shared style colorbar per panel. Mirrors the
/// field plots of the sweep figures.
inline std::string render_field_svg(const SweepResult& res) {
    const auto& c = res.config;
    const int n_panels = static_cast<int>(res.metric_names.size());
    const int pw = 300, ph = 300, margin = 58, gap = 66, top = 44;
    const int width = margin + n_panels * (pw + gap), height = top + ph + 62;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    const std::size_t nn = c.n_grid.size();
    std::vector<double> eps_axis = c.eps_grid;
    if (eps_axis.empty()) {
        for (const auto& r : res.records)
            if (r.replica == 0 && r.eps_index == 0) eps_axis.push_back(r.eps);
        std::sort(eps_axis.begin(), eps_axis.end());
        eps_axis.erase(std::unique(eps_axis.begin(), eps_axis.end()), eps_axis.end());
    }
    const std::size_t ne = std::max<std::size_t>(1, c.eps_grid.size());

    for (int panel = 0; panel < n_panels; ++panel) {
        const std::string& metric = res.metric_names[panel];
        const auto& grid = res.aggregates.at(metric);
        const detail::Panel P{double(margin + panel * (pw + gap)), double(top), double(pw),
                              double(ph)};

        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = 0; i < nn; ++i)
            for (std::size_t j = 0; j < ne; ++j) {
                const auto& a = grid[i][j];
                if (a.count > 0 && a.mean > 0) {
                    lo = std::min(lo, std::log10(a.mean));
                    hi = std::max(hi, std::log10(a.mean));
                }
            }
        if (!(hi > lo)) { lo = -1; hi = 1; }

        detail::svg_text(os, P.x0 + P.w / 2, 18, "log10 mean " + metric + "  (" +
                         to_string(c.manifold) + ", " + to_string(c.laplacian) + ")", 13);
        const double cw = P.w / double(nn), chh = P.h / double(ne);
        for (std::size_t i = 0; i < nn; ++i)
            for (std::size_t j = 0; j < ne; ++j) {
                const auto& a = grid[i][j];
                std::string fill = "#dddddd";
                if (a.count > 0 && a.mean > 0)
                    fill = detail::heat_color((std::log10(a.mean) - lo) / (hi - lo));
                // eps increases upward
                os << "<rect x=\"" << detail::svg_num(P.x0 + i * cw) << "\" y=\""
                   << detail::svg_num(P.y0 + P.h - (j + 1) * chh) << "\" width=\""
                   << detail::svg_num(cw) << "\" height=\"" << detail::svg_num(chh)
                   << "\" fill=\"" << fill << "\"/>\n";
            }
        os << "<rect x=\"" << detail::svg_num(P.x0) << "\" y=\"" << detail::svg_num(P.y0)
           << "\" width=\"" << detail::svg_num(P.w) << "\" height=\"" << detail::svg_num(P.h)
           << "\" fill=\"none\" stroke=\"black\"/>\n";

        char lbl[64];
        std::snprintf(lbl, sizeof(lbl), "%d", c.n_grid.front());
        detail::svg_text(os, P.x0, P.y0 + P.h + 16, lbl, 11);
        std::snprintf(lbl, sizeof(lbl), "%d", c.n_grid.back());
        detail::svg_text(os, P.x0 + P.w, P.y0 + P.h + 16, lbl, 11);
        detail::svg_text(os, P.x0 + P.w / 2, P.y0 + P.h + 34, "N (log grid)", 12);
        if (!eps_axis.empty()) {
            std::snprintf(lbl, sizeof(lbl), "%.3g", eps_axis.front());
            detail::svg_text(os, P.x0 - 6, P.y0 + P.h, lbl, 11, "end");
            std::snprintf(lbl, sizeof(lbl), "%.3g", eps_axis.back());
            detail::svg_text(os, P.x0 - 6, P.y0 + 10, lbl, 11, "end");
            detail::svg_text(os, P.x0 - 44, P.y0 + P.h / 2, "eps", 12);
        }

        // colorbar
        const double bx = P.x0 + P.w + 12;
        for (int s = 0; s < 100; ++s)
            os << "<rect x=\"" << detail::svg_num(bx) << "\" y=\""
               << detail::svg_num(P.y0 + P.h * (1.0 - (s + 1) / 100.0)) << "\" width=\"12\" height=\""
               << detail::svg_num(P.h / 100.0 + 0.5) << "\" fill=\""
               << detail::heat_color(s / 99.0) << "\"/>\n";
        std::snprintf(lbl, sizeof(lbl), "%.2f", hi);
        detail::svg_text(os, bx + 16, P.y0 + 10, lbl, 10, "start");
        std::snprintf(lbl, sizeof(lbl), "%.2f", lo);
        detail::svg_text(os, bx + 16, P.y0 + P.h, lbl, 10, "start");
    }
    os << "</svg>\n";
    return os.str();
}

/// Best-error-vs-N log-log scatter with the fitted line, one series per
/// metric.
inline std::string render_best_svg(const SweepResult& res) {
    const auto& c = res.config;
    const int width = 560, height = 420, margin = 64;
    const double pw = width - 2.0 * margin, ph = height - 2.0 * margin;

    struct Series {
        std::string metric;
        std::vector<double> xs, ys;
        std::optional<SlopeFit> fit;
    };
    std::vector<Series> series;
    double lx0 = std::numeric_limits<double>::infinity(), lx1 = -lx0;
    double ly0 = lx0, ly1 = -lx0;
    for (const auto& metric : res.metric_names) {
        Series s;
        s.metric = metric;
        const auto& best = res.best_eps_index.at(metric);
        for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
            if (best[i] < 0) continue;
            const auto& a = res.aggregates.at(metric)[i][best[i]];
            if (!(a.mean > 0)) continue;
            s.xs.push_back(std::log10(double(c.n_grid[i])));
            s.ys.push_back(std::log10(a.mean));
            lx0 = std::min(lx0, s.xs.back());
            lx1 = std::max(lx1, s.xs.back());
            ly0 = std::min(ly0, s.ys.back());
            ly1 = std::max(ly1, s.ys.back());
        }
        if (auto it = res.best_slope.find(metric); it != res.best_slope.end()) s.fit = it->second;
        if (!s.xs.empty()) series.push_back(std::move(s));
    }
    if (series.empty()) { lx0 = 0; lx1 = 1; ly0 = 0; ly1 = 1; }
    if (!(lx1 > lx0)) { lx0 -= 0.5; lx1 += 0.5; }
    if (!(ly1 > ly0)) { ly0 -= 0.5; ly1 += 0.5; }
    const double padx = 0.06 * (lx1 - lx0), pady = 0.10 * (ly1 - ly0);
    lx0 -= padx; lx1 += padx; ly0 -= pady; ly1 += pady;

    auto X = [&](double lx) { return margin + (lx - lx0) / (lx1 - lx0) * pw; };
    auto Y = [&](double ly) { return margin + ph - (ly - ly0) / (ly1 - ly0) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << detail::svg_num(pw)
       << "\" height=\"" << detail::svg_num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    detail::svg_text(os, width / 2.0, 24,
                     "best mean error vs N  (" + to_string(c.experiment) + ", " +
                         to_string(c.manifold) + ", " + to_string(c.laplacian) + ")", 13);
    detail::svg_text(os, width / 2.0, height - 14, "log10 N", 12);
    detail::svg_text(os, 16, margin + ph / 2, "log10 err", 12, "start");

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    int ci = 0;
    double legend_y = margin + 16;
    for (const auto& s : series) {
        const char* col = colors[ci++ % 4];
        for (std::size_t i = 0; i < s.xs.size(); ++i)
            os << "<circle cx=\"" << detail::svg_num(X(s.xs[i])) << "\" cy=\""
               << detail::svg_num(Y(s.ys[i])) << "\" r=\"4\" fill=\"" << col << "\"/>\n";
        if (s.fit) {
            const double yA = s.fit->slope * (lx0 + padx) + s.fit->intercept;
            const double yB = s.fit->slope * (lx1 - padx) + s.fit->intercept;
            os << "<line x1=\"" << detail::svg_num(X(lx0 + padx)) << "\" y1=\""
               << detail::svg_num(Y(yA)) << "\" x2=\"" << detail::svg_num(X(lx1 - padx))
               << "\" y2=\"" << detail::svg_num(Y(yB)) << "\" stroke=\"" << col
               << "\" stroke-dasharray=\"5,3\"/>\n";
            char lbl[96];
            std::snprintf(lbl, sizeof(lbl), "%s: slope %.3f (r2 %.3f)", s.metric.c_str(),
                          s.fit->slope, s.fit->r2);
            os << "<text x=\"" << detail::svg_num(margin + pw - 8) << "\" y=\""
               << detail::svg_num(legend_y) << "\" font-size=\"11\" font-family=\"sans-serif\""
               << " text-anchor=\"end\" fill=\"" << col << "\">" << lbl << "</text>\n";
            legend_y += 15;
        }
    }
    os << "</svg>\n";
    return os.str();
}

inline void write_svgs(const SweepResult& res, const std::string& field_path,
                       const std::string& best_path) {
    std::ofstream f(field_path, std::ios::binary);
    if (!f) throw std::runtime_error("write_svgs: cannot open " + field_path);
    f << render_field_svg(res);
    std::ofstream g(best_path, std::ios::binary);
    if (!g) throw std::runtime_error("write_svgs: cannot open " + best_path);
    g << render_best_svg(res);
}

} // namespace laplab
