#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "disent/analysis.hpp"
#include "disent/csv.hpp"
#include "disent/errors.hpp"

namespace disent {

// Hand-built SVG output: pure text, no timestamps and no randomness, so two
// renders of the same data are byte identical and diffable in tests.

namespace svg {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string escape(const std::string& s) {
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

inline std::string rgb(double r, double g, double b) {
    auto clamp255 = [](double x) {
        return std::to_string(static_cast<int>(std::lround(std::clamp(x, 0.0, 255.0))));
    };
    return "rgb(" + clamp255(r) + "," + clamp255(g) + "," + clamp255(b) + ")";
}

// t in [0,1]: white to a deep blue
inline std::string sequential_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return rgb(255 + (31 - 255) * t, 255 + (119 - 255) * t, 255 + (180 - 255) * t);
}

// t in [-1,1]: red through white to blue
inline std::string diverging_color(double t) {
    t = std::clamp(t, -1.0, 1.0);
    if (t < 0.0) return rgb(255 + (214 - 255) * -t, 255 + (39 - 255) * -t, 255 + (40 - 255) * -t);
    return sequential_color(t);
}

struct Doc {
    double width = 0, height = 0;
    std::string body;

    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& extra = "") {
        body += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
                "\" height=\"" + num(h) + "\" fill=\"" + fill + "\"" + extra + "/>\n";
    }
    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0) {
        body += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
                "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
                num(width) + "\"/>\n";
    }
    void path(const std::string& d, const std::string& stroke, double width = 1.5) {
        body += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
                num(width) + "\"/>\n";
    }
    void circle(double x, double y, double r, const std::string& fill) {
        body += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"" + num(r) +
                "\" fill=\"" + fill + "\"/>\n";
    }
    void text(double x, double y, const std::string& s, double size = 11.0,
              const std::string& anchor = "start", const std::string& extra = "") {
        body += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
                "\" font-family=\"monospace\" text-anchor=\"" + anchor + "\"" + extra + ">" +
                escape(s) + "</text>\n";
    }

    std::string str() const {
        std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) +
                          "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) + " " +
                          num(height) + "\">\n";
        out += "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" "
               "patternUnits=\"userSpaceOnUse\"><path d=\"M0 6L6 0\" stroke=\"#999\" "
               "stroke-width=\"1\"/></pattern></defs>\n";
        out += "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) +
               "\" fill=\"white\"/>\n";
        out += body;
        out += "</svg>\n";
        return out;
    }
};

} // namespace svg

// Grid heatmap with labeled axes; missing cells get the hatch pattern. A
// matrix with negative entries switches to the diverging palette centred at
// zero, everything else maps [0, max(1, top)] onto the sequential one.
inline std::string svg_heatmap(const NamedMatrix& m, const std::string& title) {
    const int rows = m.values.rows(), cols = m.values.cols();
    if (rows < 1 || cols < 1) throw argument_error("svg_heatmap: empty matrix");

    const double cell = 46.0, left = 130.0, top = 48.0, bottom = 78.0, right = 16.0;
    svg::Doc doc;
    doc.width = left + cell * cols + right;
    doc.height = top + cell * rows + bottom;
    doc.text(left, 24.0, title, 14.0);

    bool any_negative = false;
    double top_abs = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            if (m.is_missing(r, c)) continue;
            any_negative = any_negative || m.values(r, c) < 0.0;
            top_abs = std::max(top_abs, std::abs(m.values(r, c)));
        }
    const double scale = std::max(1.0, top_abs);

    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double x = left + c * cell, y = top + r * cell;
            if (m.is_missing(r, c)) {
                doc.rect(x, y, cell, cell, "url(#hatch)", " stroke=\"#bbb\"");
                continue;
            }
            const double v = m.values(r, c);
            std::string fill = any_negative ? svg::diverging_color(v / scale)
                                            : svg::sequential_color(v / scale);
            doc.rect(x, y, cell, cell, fill, " stroke=\"#bbb\"");
            const bool dark = !any_negative ? v / scale > 0.6 : std::abs(v) / scale > 0.6;
            doc.text(x + cell / 2, y + cell / 2 + 4, svg::num(v), 10.0, "middle",
                     dark ? " fill=\"white\"" : " fill=\"#222\"");
        }
    }
    for (int r = 0; r < rows; ++r) {
        doc.text(left - 8, top + r * cell + cell / 2 + 4, m.row_names[r], 11.0, "end");
    }
    for (int c = 0; c < cols; ++c) {
        const double x = left + c * cell + cell / 2, y = top + rows * cell + 16;
        doc.text(x, y, m.col_names[c], 11.0, "end",
                 " transform=\"rotate(-45 " + svg::num(x) + " " + svg::num(y) + ")\"");
    }
    return doc.str();
}

// Two step series over the threshold axis: mixed components and connected
// factors. Steps are drawn with horizontal-then-vertical segments so the
// plot is exactly piecewise constant.
inline std::string svg_step_plot(const std::vector<GroupsCurvePoint>& curve,
                                 const std::string& title) {
    if (curve.empty()) throw argument_error("svg_step_plot: empty curve");
    std::vector<GroupsCurvePoint> pts = curve;
    std::sort(pts.begin(), pts.end(),
              [](const GroupsCurvePoint& a, const GroupsCurvePoint& b) {
                  return a.threshold < b.threshold;
              });

    const double left = 56.0, top = 44.0, w = 420.0, h = 220.0, bottom = 54.0;
    svg::Doc doc;
    doc.width = left + w + 180.0;
    doc.height = top + h + bottom;
    doc.text(left, 24.0, title, 14.0);

    double t_lo = pts.front().threshold, t_hi = pts.back().threshold;
    if (t_hi <= t_lo) t_hi = t_lo + 1.0;
    int y_hi = 1;
    for (const auto& p : pts) {
        y_hi = std::max({y_hi, p.components_gt_one, p.factors_connected});
    }

    auto sx = [&](double t) { return left + (t - t_lo) / (t_hi - t_lo) * w; };
    auto sy = [&](int v) { return top + h - static_cast<double>(v) / y_hi * h; };

    doc.line(left, top + h, left + w, top + h, "#444");
    doc.line(left, top, left, top + h, "#444");
    for (int v = 0; v <= y_hi; ++v) {
        doc.text(left - 8, sy(v) + 4, std::to_string(v), 10.0, "end");
        doc.line(left - 4, sy(v), left, sy(v), "#444");
    }
    doc.text(left, top + h + 30, svg::num(t_lo), 10.0, "middle");
    doc.text(left + w, top + h + 30, svg::num(t_hi), 10.0, "middle");
    doc.text(left + w / 2, top + h + 44, "threshold", 11.0, "middle");

    auto step_path = [&](auto value_of) {
        std::string d = "M" + svg::num(sx(pts[0].threshold)) + " " +
                        svg::num(sy(value_of(pts[0])));
        for (std::size_t i = 1; i < pts.size(); ++i) {
            d += "H" + svg::num(sx(pts[i].threshold));
            d += "V" + svg::num(sy(value_of(pts[i])));
        }
        return d;
    };
    doc.path(step_path([](const GroupsCurvePoint& p) { return p.components_gt_one; }),
             "rgb(31,119,180)");
    doc.path(step_path([](const GroupsCurvePoint& p) { return p.factors_connected; }),
             "rgb(214,39,40)");
    doc.line(left + w + 16, top + 10, left + w + 40, top + 10, "rgb(31,119,180)", 2.0);
    doc.text(left + w + 46, top + 14, "mixed components", 10.0);
    doc.line(left + w + 16, top + 28, left + w + 40, top + 28, "rgb(214,39,40)", 2.0);
    doc.text(left + w + 46, top + 32, "factors connected", 10.0);
    return doc.str();
}

// Accuracy against training-set size, log-10 x axis. Points must be
// positive-x with y in [0,1]; use for downstream curves.
inline std::string svg_line_plot(const std::vector<std::pair<double, double>>& points,
                                 const std::string& title, const std::string& x_label,
                                 const std::string& y_label) {
    if (points.empty()) throw argument_error("svg_line_plot: no points");
    std::vector<std::pair<double, double>> pts = points;
    std::sort(pts.begin(), pts.end());
    for (const auto& [x, y] : pts) {
        if (!(x > 0.0) || !std::isfinite(y)) {
            throw argument_error("svg_line_plot: points must have positive x and finite y");
        }
    }

    const double left = 56.0, top = 44.0, w = 420.0, h = 220.0, bottom = 54.0;
    svg::Doc doc;
    doc.width = left + w + 40.0;
    doc.height = top + h + bottom;
    doc.text(left, 24.0, title, 14.0);

    double x_lo = std::log10(pts.front().first), x_hi = std::log10(pts.back().first);
    if (x_hi <= x_lo) x_hi = x_lo + 1.0;
    auto sx = [&](double x) { return left + (std::log10(x) - x_lo) / (x_hi - x_lo) * w; };
    auto sy = [&](double y) { return top + h - std::clamp(y, 0.0, 1.0) * h; };

    doc.line(left, top + h, left + w, top + h, "#444");
    doc.line(left, top, left, top + h, "#444");
    for (int i = 0; i <= 4; ++i) {
        double y = i / 4.0;
        doc.text(left - 8, sy(y) + 4, svg::num(y), 10.0, "end");
        doc.line(left - 4, sy(y), left, sy(y), "#444");
    }
    for (const auto& [x, y] : pts) {
        doc.text(sx(x), top + h + 30, svg::num(x), 10.0, "middle");
        doc.line(sx(x), top + h, sx(x), top + h + 4, "#444");
    }
    doc.text(left + w / 2, top + h + 44, x_label, 11.0, "middle");
    doc.text(left, top + h + 44, y_label, 11.0);

    std::string d;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        d += (i ? "L" : "M") + svg::num(sx(pts[i].first)) + " " +
             svg::num(sy(pts[i].second));
    }
    doc.path(d, "rgb(31,119,180)");
    for (const auto& [x, y] : pts) {
        doc.circle(sx(x), sy(y), 3.0, "rgb(31,119,180)");
    }
    return doc.str();
}

// Merge tree over 1 - threshold so the earliest (highest-threshold) merge
// sits lowest, classic agglomerative layout. Factors that never merge stay
// as isolated leaves.
inline std::string svg_dendrogram(const Dendrogram& d, const std::vector<std::string>& names,
                                  const std::string& title) {
    const int k = d.n_factors;
    if (k < 1) throw argument_error("svg_dendrogram: empty dendrogram");
    if (static_cast<int>(names.size()) != k) {
        throw argument_error("svg_dendrogram: need one name per factor");
    }

    const double left = 56.0, top = 44.0, h = 240.0, spacing = 92.0, bottom = 64.0;
    svg::Doc doc;
    doc.width = left + spacing * k + 40.0;
    doc.height = top + h + bottom;
    doc.text(left, 24.0, title, 14.0);

    // distance = 1 - threshold: leaves at distance 0 (bottom), merges above
    auto dy = [&](double threshold) { return top + h - (1.0 - threshold) * h; };

    std::vector<double> cx(k), cy(k);
    std::vector<int> root(k);
    std::vector<std::vector<int>> members(k);
    for (int i = 0; i < k; ++i) {
        cx[i] = left + spacing * i + spacing / 2;
        cy[i] = top + h;
        root[i] = i;
        members[i] = {i};
        doc.text(cx[i], top + h + 18, names[i], 11.0, "middle");
    }
    doc.line(left, top, left, top + h, "#444");
    for (double t : {0.0, 0.5, 1.0}) {
        doc.text(left - 8, dy(t) + 4, svg::num(t), 10.0, "end");
        doc.line(left - 4, dy(t), left, dy(t), "#444");
    }
    doc.text(16.0, top - 10.0, "merge threshold", 10.0);

    for (const auto& m : d.merges) {
        int ra = root[m.factor_a], rb = root[m.factor_b];
        if (ra == rb) continue;
        const double y = dy(m.threshold);
        doc.line(cx[ra], cy[ra], cx[ra], y, "#333", 1.5);
        doc.line(cx[rb], cy[rb], cx[rb], y, "#333", 1.5);
        doc.line(cx[ra], y, cx[rb], y, "#333", 1.5);
        doc.text((cx[ra] + cx[rb]) / 2, y - 4, svg::num(m.threshold), 9.0, "middle");

        double nx = 0.0;
        std::vector<int> merged = members[ra];
        merged.insert(merged.end(), members[rb].begin(), members[rb].end());
        for (int i : merged) nx += (left + spacing * i + spacing / 2) / merged.size();
        for (int i : merged) root[i] = ra;
        members[ra] = merged;
        cx[ra] = nx;
        cy[ra] = y;
    }
    return doc.str();
}

// Pairwise metric scatter grid over models matched by (dataset, encoder,
// seed, budget); the diagonal carries the metric names.
inline std::string svg_scatter_grid(const ScoreTable& t, const std::vector<std::string>& metrics,
                                    const std::string& title) {
    if (metrics.size() < 2) throw argument_error("svg_scatter_grid: need >= 2 metrics");
    const int k = static_cast<int>(metrics.size());

    std::vector<std::map<detail::SeriesKey, double>> series;
    for (const auto& m : metrics) series.push_back(detail::extract_series(t, {m, "", m}));

    const double panel = 120.0, gap = 14.0, left = 62.0, top = 48.0;
    svg::Doc doc;
    doc.width = left + k * (panel + gap) + 20.0;
    doc.height = top + k * (panel + gap) + 30.0;
    doc.text(left, 24.0, title, 14.0);

    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            const double x0 = left + j * (panel + gap), y0 = top + i * (panel + gap);
            if (i == j) {
                doc.rect(x0, y0, panel, panel, "#f4f4f4", " stroke=\"#bbb\"");
                doc.text(x0 + panel / 2, y0 + panel / 2 + 4, metrics[i], 11.0, "middle");
                continue;
            }
            doc.rect(x0, y0, panel, panel, "white", " stroke=\"#bbb\"");
            std::vector<double> xs, ys;
            for (const auto& [key, vy] : series[i]) {
                auto it = series[j].find(key);
                if (it == series[j].end()) continue;
                xs.push_back(it->second);
                ys.push_back(vy);
            }
            if (xs.empty()) {
                doc.rect(x0, y0, panel, panel, "url(#hatch)", " stroke=\"#bbb\"");
                continue;
            }
            double xlo = *std::min_element(xs.begin(), xs.end());
            double xhi = *std::max_element(xs.begin(), xs.end());
            double ylo = *std::min_element(ys.begin(), ys.end());
            double yhi = *std::max_element(ys.begin(), ys.end());
            if (xhi <= xlo) xhi = xlo + 1.0;
            if (yhi <= ylo) yhi = ylo + 1.0;
            for (std::size_t p = 0; p < xs.size(); ++p) {
                const double px = x0 + 6 + (xs[p] - xlo) / (xhi - xlo) * (panel - 12);
                const double py = y0 + panel - 6 - (ys[p] - ylo) / (yhi - ylo) * (panel - 12);
                doc.circle(px, py, 2.4, "rgb(31,119,180)");
            }
        }
    }
    for (int j = 0; j < k; ++j) {
        doc.text(left + j * (panel + gap) + panel / 2, doc.height - 8, metrics[j], 10.0, "middle");
    }
    for (int i = 0; i < k; ++i) {
        const double y = top + i * (panel + gap) + panel / 2;
        doc.text(left - 8, y + 4, metrics[i], 10.0, "end");
    }
    return doc.str();
}

} // namespace disent
