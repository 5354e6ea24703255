#pragma once

// Static SVG figures from a study summary: TPR/FPR boxplots by sample size and
// prior for the separation study, and a prior-vs-prior scatter of normalized
// parent counts (with the identity diagonal) for the Lindley study.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "abn/experiments.hpp"

namespace abn::svg {

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline const char* color(std::size_t i) {
    static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    return palette[i % 5];
}

struct Panel {
    double x, y, w, h;
    double top = 1.0;  // value at the upper edge; both axes span [0, top]
    double to_x(double v) const { return x + v / top * w; }
    double to_y(double v) const { return y + h - v / top * h; }
};

inline std::string axes(const Panel& p, const std::string& title) {
    std::string s = "<g class=\"axes\">";
    s += "<rect x=\"" + num(p.x) + "\" y=\"" + num(p.y) + "\" width=\"" + num(p.w) + "\" height=\"" +
         num(p.h) + "\" fill=\"none\" stroke=\"#444\"/>";
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        s += "<text x=\"" + num(p.x - 6) + "\" y=\"" + num(p.to_y(t * p.top) + 4) +
             "\" font-size=\"10\" text-anchor=\"end\">" + num(t * p.top) + "</text>";
    }
    s += "<text x=\"" + num(p.x + p.w / 2) + "\" y=\"" + num(p.y - 8) +
         "\" font-size=\"12\" text-anchor=\"middle\">" + title + "</text></g>";
    return s;
}

inline std::string header(double w, double h) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
           "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\">\n";
}

inline std::string box(const Panel& p, double cx, double half, const Spread& s, const char* fill) {
    if (s.count == 0) return "";
    std::string g;
    g += "<line x1=\"" + num(cx) + "\" y1=\"" + num(p.to_y(s.min)) + "\" x2=\"" + num(cx) + "\" y2=\"" +
         num(p.to_y(s.max)) + "\" stroke=\"#333\"/>";
    g += "<rect x=\"" + num(cx - half) + "\" y=\"" + num(p.to_y(s.q3)) + "\" width=\"" + num(2 * half) +
         "\" height=\"" + num(std::max(0.5, p.to_y(s.q1) - p.to_y(s.q3))) + "\" fill=\"" + fill +
         "\" fill-opacity=\"0.5\" stroke=\"#333\"/>";
    g += "<line x1=\"" + num(cx - half) + "\" y1=\"" + num(p.to_y(s.median)) + "\" x2=\"" +
         num(cx + half) + "\" y2=\"" + num(p.to_y(s.median)) + "\" stroke=\"#000\" stroke-width=\"2\"/>";
    return g;
}

}  // namespace detail

/// Boxplots of TPR (left) and FPR (right) by sample size, one colour per prior.
/// Each summary cell becomes one <g class="box"> group spanning both panels.
inline std::string separation_plot(const std::vector<SummaryRow>& rows) {
    using namespace detail;
    std::set<int> sizes;
    std::vector<std::string> priors;
    for (const auto& r : rows) {
        sizes.insert(r.n_obs);
        if (std::find(priors.begin(), priors.end(), r.prior_name) == priors.end())
            priors.push_back(r.prior_name);
    }
    const Panel tpr{60, 40, 320, 260}, fpr{460, 40, 320, 260};
    std::string s = header(820, 360);
    s += axes(tpr, "TPR") + "\n" + axes(fpr, "FPR") + "\n";

    const std::vector<int> xs(sizes.begin(), sizes.end());
    const double slot = xs.empty() ? 0.0 : tpr.w / static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (const Panel* p : {&tpr, &fpr})
            s += "<text x=\"" + num(p->x + slot * (i + 0.5)) + "\" y=\"" + num(p->y + p->h + 16) +
                 "\" font-size=\"10\" text-anchor=\"middle\">N=" + std::to_string(xs[i]) + "</text>";
    }
    s += "\n";
    for (const auto& r : rows) {
        const auto xi = static_cast<double>(std::find(xs.begin(), xs.end(), r.n_obs) - xs.begin());
        const auto pi = static_cast<std::size_t>(std::find(priors.begin(), priors.end(), r.prior_name) -
                                                 priors.begin());
        const double width = slot / (static_cast<double>(priors.size()) + 1.0);
        const double offset = width * (static_cast<double>(pi) + 1.0);
        const double half = width * 0.35;
        s += "<g class=\"box\" data-prior=\"" + r.prior_name + "\" data-n=\"" + std::to_string(r.n_obs) + "\">";
        s += box(tpr, tpr.x + slot * xi + offset, half, r.tpr, color(pi));
        s += box(fpr, fpr.x + slot * xi + offset, half, r.fpr, color(pi));
        s += "</g>\n";
    }
    for (std::size_t i = 0; i < priors.size(); ++i)
        s += "<text x=\"" + num(60 + 80.0 * static_cast<double>(i)) + "\" y=\"345\" font-size=\"11\" fill=\"" +
             color(i) + "\">" + priors[i] + "</text>";
    s += "\n</svg>\n";
    return s;
}

/// Mean normalized parent count of each other prior (y) against the
/// reference prior (x, ST when present), one point per density.
inline std::string lindley_plot(const std::vector<SummaryRow>& rows) {
    using namespace detail;
    std::vector<std::string> priors;
    std::map<std::pair<std::string, double>, double> value;
    double top = 1.0;
    for (const auto& r : rows) {
        if (std::find(priors.begin(), priors.end(), r.prior_name) == priors.end())
            priors.push_back(r.prior_name);
        if (r.normalized_parents.count > 0 && std::isfinite(r.normalized_parents.mean)) {
            value[{r.prior_name, r.density}] = r.normalized_parents.mean;
            top = std::max(top, r.normalized_parents.mean);
        }
    }
    const std::string reference =
        std::find(priors.begin(), priors.end(), "ST") != priors.end() ? "ST" : (priors.empty() ? "" : priors[0]);
    std::vector<std::string> others;
    for (const auto& p : priors)
        if (p != reference) others.push_back(p);

    const double limit = std::ceil(top * 4.0) / 4.0;
    const std::size_t panels = std::max<std::size_t>(1, others.size());
    std::string s = header(60 + 360.0 * static_cast<double>(panels), 360);
    for (std::size_t k = 0; k < panels; ++k) {
        const Panel p{60 + 360.0 * static_cast<double>(k), 40, 260, 260, limit};
        const std::string title = others.empty() ? "normalized parents" : others[k] + " vs " + reference;
        s += axes(p, title);
        s += "<line class=\"diagonal\" x1=\"" + num(p.x) + "\" y1=\"" + num(p.y + p.h) + "\" x2=\"" +
             num(p.x + p.w) + "\" y2=\"" + num(p.y) + "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
        if (others.empty()) continue;
        for (const auto& [key, ref] : value) {
            if (key.first != reference) continue;
            const auto it = value.find({others[k], key.second});
            if (it == value.end()) continue;
            const double cx = p.to_x(ref);
            const double cy = p.to_y(it->second);
            s += "<circle class=\"point\" data-density=\"" + io::format_double(key.second) + "\" cx=\"" +
                 num(cx) + "\" cy=\"" + num(cy) + "\" r=\"4\" fill=\"" + color(k) + "\"/>\n";
        }
    }
    s += "</svg>\n";
    return s;
}

/// Picks the layout from the study column; an empty summary gives bare axes.
inline std::string summary_plot(const std::vector<SummaryRow>& rows) {
    if (!rows.empty() && rows.front().study == "lindley") return lindley_plot(rows);
    return separation_plot(rows);
}

}  // namespace abn::svg
