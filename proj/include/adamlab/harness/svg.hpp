#pragma once

// Dependency-free SVG plots: parametric 3-parameter scatter and series lines.
//
// Epoch colour gradient: t = (epoch - first) / (last - first) maps to
// rgb(255 t, 0, 255 (1 - t)), i.e. blue at the first epoch, red at the last.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "adamlab/analysis/spikes.hpp"
#include "adamlab/analysis/spiral.hpp"
#include "adamlab/errors.hpp"
#include "adamlab/trainer.hpp"
#include "adamlab/trajectory_io.hpp"

namespace adamlab {

namespace svg {

inline constexpr double width = 640, height = 480;
inline constexpr double margin_left = 80, margin_right = 30, margin_top = 50, margin_bottom = 60;

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
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

inline std::string epoch_color(std::uint64_t epoch, std::uint64_t first, std::uint64_t last) {
    const double t = last > first ? static_cast<double>(epoch - first) / static_cast<double>(last - first) : 0.0;
    const int r = static_cast<int>(std::lround(255.0 * t));
    return "rgb(" + std::to_string(r) + ",0," + std::to_string(255 - r) + ")";
}

// Linear map from [lo, hi] to [a, b]; a degenerate range maps to the middle.
struct Scale {
    double lo, hi, a, b;
    double operator()(double v) const { return hi > lo ? a + (v - lo) / (hi - lo) * (b - a) : 0.5 * (a + b); }
};

inline std::string header(const std::string& title) {
    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n"
      << "<text class=\"title\" x=\"" << num(width / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << escape(title) << "</text>\n";
    return o.str();
}

inline std::string frame() {
    std::ostringstream o;
    o << "<rect class=\"frame\" x=\"" << num(margin_left) << "\" y=\"" << num(margin_top) << "\" width=\""
      << num(width - margin_left - margin_right) << "\" height=\"" << num(height - margin_top - margin_bottom)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    return o.str();
}

inline std::string warning(const std::string& msg, double y) {
    return "<text class=\"warning\" x=\"" + num(margin_left + 6) + "\" y=\"" + num(y) +
           "\" font-size=\"12\" fill=\"darkred\">" + escape(msg) + "</text>\n";
}

// Evenly spaced tick values with labels printed at the smallest precision
// that keeps neighbours distinct.
inline std::vector<std::pair<double, std::string>> ticks(double lo, double hi, int count = 5) {
    std::vector<double> values;
    for (int i = 0; i < count; ++i) values.push_back(lo + (hi - lo) * i / (count - 1));
    for (int prec = 3; prec <= 17; ++prec) {
        std::vector<std::pair<double, std::string>> out;
        std::set<std::string> seen;
        for (double v : values) {
            char buf[48];
            std::snprintf(buf, sizeof buf, "%.*g", prec, v);
            out.push_back({v, buf});
            seen.insert(buf);
        }
        if (seen.size() == values.size() || prec == 17) return out;
    }
    return {};
}

}  // namespace svg

/// Parametric plot of three parameters projected onto the spiral plane of the
/// points (or their principal plane when too few for a fit). Degenerate
/// geometry falls back to the raw first two coordinates with a warning.
inline std::string scatter3_svg(std::span<const TriplePoint> points, const std::array<std::size_t, 3>& triple,
                                const EpochWindow& window = {}) {
    const auto pts = detail::select_window(points, window);
    if (pts.empty()) throw InvalidArgument("no snapshots inside the plot window");

    std::string projection, warn;
    std::array<Vec3, 2> basis{Vec3{1, 0, 0}, Vec3{0, 1, 0}};
    Vec3 origin{0, 0, 0};
    try {
        const SpiralFit fit = fit_spiral(pts);
        basis = fit.plane_basis;
        origin = fit.centroid;
        projection = "spiral plane";
    } catch (const InsufficientData&) {
        try {
            if (pts.size() < 3) throw DegenerateGeometry("fewer than 3 points");
            const auto f = detail::principal_frame(pts);
            basis = {f.e1, f.e2};
            origin = f.centroid;
            projection = "principal axes";
        } catch (const DegenerateGeometry& e) {
            warn = std::string("degenerate geometry (") + e.what() + "): raw coordinates shown";
            projection = "raw coordinates";
        }
    } catch (const DegenerateGeometry& e) {
        warn = std::string("degenerate geometry (") + e.what() + "): raw coordinates shown";
        projection = "raw coordinates";
    }

    std::vector<std::array<double, 2>> uv(pts.size());
    double umin = INFINITY, umax = -INFINITY, vmin = INFINITY, vmax = -INFINITY;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec3 d{pts[i].x[0] - origin[0], pts[i].x[1] - origin[1], pts[i].x[2] - origin[2]};
        uv[i] = {detail::dot(d, basis[0]), detail::dot(d, basis[1])};
        umin = std::min(umin, uv[i][0]);
        umax = std::max(umax, uv[i][0]);
        vmin = std::min(vmin, uv[i][1]);
        vmax = std::max(vmax, uv[i][1]);
    }
    // Equal aspect ratio so rotation sense is preserved visually.
    const double span = std::max({umax - umin, vmax - vmin, 1e-300});
    const double cu = 0.5 * (umin + umax), cv = 0.5 * (vmin + vmax);
    const double plot_w = svg::width - svg::margin_left - svg::margin_right;
    const double plot_h = svg::height - svg::margin_top - svg::margin_bottom;
    const double side = std::min(plot_w, plot_h) - 10;
    const double x0 = svg::margin_left + plot_w / 2, y0 = svg::margin_top + plot_h / 2;

    const std::uint64_t first = pts.front().epoch, last = pts.back().epoch;
    std::ostringstream o;
    o << svg::header("parameters p" + std::to_string(triple[0]) + ", p" + std::to_string(triple[1]) + ", p" +
                     std::to_string(triple[2]));
    o << svg::frame();
    o << "<g class=\"points\">\n";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double x = x0 + (uv[i][0] - cu) / span * side;
        const double y = y0 - (uv[i][1] - cv) / span * side;
        o << "<circle cx=\"" << svg::num(x) << "\" cy=\"" << svg::num(y) << "\" r=\"2\" fill=\""
          << svg::epoch_color(pts[i].epoch, first, last) << "\" data-epoch=\"" << pts[i].epoch << "\"/>\n";
    }
    o << "</g>\n";
    o << "<text class=\"xlabel\" x=\"" << svg::num(svg::margin_left + plot_w / 2) << "\" y=\""
      << svg::num(svg::height - 20) << "\" text-anchor=\"middle\" font-size=\"12\">" << projection << " axis 1 (p"
      << triple[0] << ", p" << triple[1] << ", p" << triple[2] << "), epochs " << first << "-" << last << "</text>\n";
    o << "<text class=\"ylabel\" x=\"20\" y=\"" << svg::num(svg::margin_top + plot_h / 2)
      << "\" font-size=\"12\" transform=\"rotate(-90 20 " << svg::num(svg::margin_top + plot_h / 2) << ")\">"
      << projection << " axis 2</text>\n";
    o << "<text class=\"legend\" x=\"" << svg::num(svg::width - svg::margin_right) << "\" y=\"40\" text-anchor=\"end\" "
      << "font-size=\"11\">colour: blue = epoch " << first << ", red = epoch " << last << "</text>\n";
    if (!warn.empty()) o << svg::warning(warn, svg::margin_top + 16);
    o << "</svg>\n";
    return o.str();
}

inline void render_scatter3(const Trajectory& traj, const std::array<std::size_t, 3>& triple,
                            const EpochWindow& window, const std::filesystem::path& out_path) {
    const auto points = extract_triple(traj.snapshots, triple);
    detail::write_file(out_path, scatter3_svg(points, triple, window));
}

struct SeriesPlotOptions {
    std::string title = "loss";
    std::string y_label = "loss";
    bool log_y = false;
    std::size_t max_points = 10000;
    const SpikeTrain* spikes = nullptr;  // optional peak markers
};

/// Min/max bucket decimation: keeps each bucket's extremes in index order so
/// spikes survive. Returns indices into the series.
inline std::vector<std::size_t> decimate_indices(std::span<const double> y, std::size_t max_points) {
    std::vector<std::size_t> idx;
    const std::size_t n = y.size();
    if (n <= max_points || max_points < 4) {
        idx.resize(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        return idx;
    }
    const std::size_t buckets = max_points / 2;
    for (std::size_t b = 0; b < buckets; ++b) {
        const std::size_t lo = b * n / buckets, hi = (b + 1) * n / buckets;
        std::size_t imin = lo, imax = lo;
        for (std::size_t i = lo; i < hi; ++i) {
            if (y[i] < y[imin]) imin = i;
            if (y[i] > y[imax]) imax = i;
        }
        idx.push_back(std::min(imin, imax));
        if (imin != imax) idx.push_back(std::max(imin, imax));
    }
    return idx;
}

/// Line plot of a series against its index (epoch). A non-finite tail is cut
/// at the first non-finite value and annotated.
inline std::string series_svg(std::span<const double> series, const SeriesPlotOptions& opts = {}) {
    if (series.empty()) throw InvalidArgument("cannot plot an empty series");
    const std::size_t finite = finite_prefix(series);
    std::vector<std::string> notes;
    if (finite < series.size()) notes.push_back("diverged at epoch " + std::to_string(finite) + " (non-finite values not shown)");

    bool log_y = opts.log_y;
    std::vector<double> y(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(finite));
    if (log_y && !y.empty()) {
        double min_pos = INFINITY;
        for (double v : y)
            if (v > 0.0) min_pos = std::min(min_pos, v);
        if (!std::isfinite(min_pos)) {
            log_y = false;
            notes.push_back("no positive values: linear scale used");
        } else {
            for (double& v : y) v = std::log10(std::max(v, min_pos));
        }
    }

    double lo = INFINITY, hi = -INFINITY;
    for (double v : y) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (y.empty()) lo = 0.0, hi = 1.0;
    if (!(hi > lo)) {
        const double pad = log_y ? 0.5 : std::max(std::abs(lo) * 0.05, 1e-12);
        lo -= pad;
        hi += pad;
    }

    const double plot_l = svg::margin_left, plot_r = svg::width - svg::margin_right;
    const double plot_t = svg::margin_top, plot_b = svg::height - svg::margin_bottom;
    const double n_span = std::max<double>(static_cast<double>(series.size()) - 1.0, 1.0);
    const svg::Scale sx{0.0, n_span, plot_l, plot_r};
    const svg::Scale sy{lo, hi, plot_b, plot_t};

    std::ostringstream o;
    o << svg::header(opts.title) << svg::frame();
    for (const auto& [v, label] : svg::ticks(lo, hi)) {
        const double yy = sy(v);
        o << "<line class=\"ygrid\" x1=\"" << svg::num(plot_l) << "\" x2=\"" << svg::num(plot_r) << "\" y1=\""
          << svg::num(yy) << "\" y2=\"" << svg::num(yy) << "\" stroke=\"#ddd\"/>\n";
        o << "<text class=\"ytick\" x=\"" << svg::num(plot_l - 6) << "\" y=\"" << svg::num(yy + 4)
          << "\" text-anchor=\"end\" font-size=\"11\">" << (log_y ? "1e" : "") << label << "</text>\n";
    }
    for (const auto& [v, label] : svg::ticks(0.0, n_span)) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.0f", v);
        o << "<text class=\"xtick\" x=\"" << svg::num(sx(v)) << "\" y=\"" << svg::num(plot_b + 16)
          << "\" text-anchor=\"middle\" font-size=\"11\">" << buf << "</text>\n";
    }
    o << "<text class=\"xlabel\" x=\"" << svg::num((plot_l + plot_r) / 2) << "\" y=\"" << svg::num(svg::height - 20)
      << "\" text-anchor=\"middle\" font-size=\"12\">epoch</text>\n";
    o << "<text class=\"ylabel\" x=\"20\" y=\"" << svg::num((plot_t + plot_b) / 2)
      << "\" font-size=\"12\" transform=\"rotate(-90 20 " << svg::num((plot_t + plot_b) / 2) << ")\">"
      << (log_y ? "log10 " : "") << svg::escape(opts.y_label) << "</text>\n";

    if (!y.empty()) {
        const auto idx = decimate_indices(y, opts.max_points);
        o << "<polyline class=\"series\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1\" data-count=\""
          << idx.size() << "\" points=\"";
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (k) o << ' ';
            o << svg::num(sx(static_cast<double>(idx[k]))) << ',' << svg::num(sy(y[idx[k]]));
        }
        o << "\"/>\n";
    }
    if (opts.spikes) {
        for (const auto& ev : opts.spikes->events) {
            if (ev.peak_epoch >= finite) continue;
            const double xx = sx(static_cast<double>(ev.peak_epoch));
            o << "<line class=\"spike\" x1=\"" << svg::num(xx) << "\" x2=\"" << svg::num(xx) << "\" y1=\""
              << svg::num(plot_t) << "\" y2=\"" << svg::num(plot_b) << "\" stroke=\"crimson\" stroke-dasharray=\"3,3\" "
              << "data-epoch=\"" << ev.peak_epoch << "\"/>\n";
        }
    }
    if (finite < series.size() && finite > 0) {
        const double xx = sx(static_cast<double>(finite));
        o << "<line class=\"divergence\" x1=\"" << svg::num(xx) << "\" x2=\"" << svg::num(xx) << "\" y1=\""
          << svg::num(plot_t) << "\" y2=\"" << svg::num(plot_b) << "\" stroke=\"black\"/>\n";
    }
    for (std::size_t i = 0; i < notes.size(); ++i) o << svg::warning(notes[i], plot_t + 16 + 14 * static_cast<double>(i));
    o << "</svg>\n";
    return o.str();
}

inline void render_series(std::span<const double> series, const std::filesystem::path& out_path,
                          const SeriesPlotOptions& opts = {}) {
    detail::write_file(out_path, series_svg(series, opts));
}

}  // namespace adamlab
