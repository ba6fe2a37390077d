#pragma once

// Spiral geometry of parameter triples: principal plane, signed winding and
// two-lobe splitting.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "adamlab/analysis/rolling.hpp"
#include "adamlab/errors.hpp"
#include "adamlab/trainer.hpp"

namespace adamlab {

using Vec3 = std::array<double, 3>;

struct TriplePoint {
    std::uint64_t epoch = 0;
    Vec3 x{};
};

/// Inclusive epoch range.
struct EpochWindow {
    std::uint64_t start = 0;
    std::uint64_t end = UINT64_MAX;

    bool contains(std::uint64_t epoch) const { return epoch >= start && epoch <= end; }
};

struct SpiralFit {
    Vec3 centroid{};
    std::array<Vec3, 2> plane_basis{};
    Vec3 axis{};
    double winding_number = 0.0;  // signed turns; sign is the handedness
    double residual_rms = 0.0;    // RMS distance to the fitted plane
    EpochWindow window{};
    std::size_t n_points = 0;
};

inline constexpr std::size_t min_spiral_points = 16;

namespace detail {

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline Vec3 normalized(Vec3 v) {
    const double n = std::sqrt(dot(v, v));
    for (double& c : v) c /= n;
    return v;
}

inline std::vector<TriplePoint> select_window(std::span<const TriplePoint> points, const EpochWindow& window) {
    std::vector<TriplePoint> out;
    for (const auto& p : points)
        if (window.contains(p.epoch)) out.push_back(p);
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.epoch < b.epoch; });
    return out;
}

struct PrincipalFrame {
    Vec3 centroid;
    Vec3 e1, e2, normal;
};

// Principal plane of the points. The normal is oriented along the net drift
// of the sequence through the plane (falling back to making its largest
// component positive), and e2 = normal x e1, so the in-plane rotation sense
// measured in (e1, e2) is the handedness of the helix.
inline PrincipalFrame principal_frame(std::span<const TriplePoint> pts) {
    const std::size_t n = pts.size();
    Vec3 c{0, 0, 0};
    for (const auto& p : pts)
        for (int k = 0; k < 3; ++k) c[k] += p.x[k];
    for (double& v : c) v /= static_cast<double>(n);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : pts) {
        const Eigen::Vector3d d(p.x[0] - c[0], p.x[1] - c[1], p.x[2] - c[2]);
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    if (solver.info() != Eigen::Success) throw DegenerateGeometry("eigendecomposition failed");
    const Eigen::Vector3d lambda = solver.eigenvalues();  // ascending
    if (!(lambda[2] > 0.0) || !(lambda[1] > 1e-12 * lambda[2]))
        throw DegenerateGeometry("points do not span a plane");

    auto column = [&](int i) {
        const Eigen::Vector3d v = solver.eigenvectors().col(i);
        return normalized(Vec3{v[0], v[1], v[2]});
    };
    PrincipalFrame f;
    f.centroid = c;
    f.e1 = column(2);
    Vec3 normal = normalized(cross(f.e1, column(1)));

    // Drift direction: covariance of the normal coordinate with sequence order.
    double drift = 0.0, scale = 0.0;
    const double mid = 0.5 * static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 d{pts[i].x[0] - c[0], pts[i].x[1] - c[1], pts[i].x[2] - c[2]};
        drift += (static_cast<double>(i) - mid) * dot(d, normal);
        scale += std::abs(static_cast<double>(i) - mid) * std::sqrt(dot(d, d));
    }
    bool flip = drift < 0.0;
    if (std::abs(drift) <= 1e-9 * scale) {
        std::size_t big = 0;
        for (std::size_t k = 1; k < 3; ++k)
            if (std::abs(normal[k]) > std::abs(normal[big])) big = k;
        flip = normal[big] < 0.0;
    }
    if (flip)
        for (double& v : normal) v = -v;
    f.normal = normal;
    f.e2 = normalized(cross(normal, f.e1));
    return f;
}

}  // namespace detail

/// Fit a spiral to the points inside `window`: principal plane, signed
/// winding of the projected path about the centroid, RMS out-of-plane
/// distance.
inline SpiralFit fit_spiral(std::span<const TriplePoint> points, const EpochWindow& window = {}) {
    const auto pts = detail::select_window(points, window);
    if (pts.size() < min_spiral_points) throw InsufficientData("spiral fit needs at least 16 points in the window");
    const auto frame = detail::principal_frame(pts);

    SpiralFit fit;
    fit.centroid = frame.centroid;
    fit.plane_basis = {frame.e1, frame.e2};
    fit.axis = frame.normal;
    fit.window = {pts.front().epoch, pts.back().epoch};
    fit.n_points = pts.size();

    double total = 0.0, off_plane = 0.0, prev_angle = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec3 d{pts[i].x[0] - frame.centroid[0], pts[i].x[1] - frame.centroid[1], pts[i].x[2] - frame.centroid[2]};
        const double h = detail::dot(d, frame.normal);
        off_plane += h * h;
        const double angle = std::atan2(detail::dot(d, frame.e2), detail::dot(d, frame.e1));
        if (i > 0) total += std::remainder(angle - prev_angle, 2.0 * std::numbers::pi);
        prev_angle = angle;
    }
    fit.winding_number = total / (2.0 * std::numbers::pi);
    fit.residual_rms = std::sqrt(off_plane / static_cast<double>(pts.size()));
    return fit;
}

/// Triple (i, j, k) of parameter coordinates from every snapshot.
inline std::vector<TriplePoint> extract_triple(std::span<const Snapshot> snapshots, const std::array<std::size_t, 3>& idx) {
    std::vector<TriplePoint> out;
    out.reserve(snapshots.size());
    for (const auto& s : snapshots) {
        for (auto i : idx)
            if (i >= s.params.size()) throw InvalidArgument("parameter index out of range");
        out.push_back({s.epoch, {s.params[idx[0]], s.params[idx[1]], s.params[idx[2]]}});
    }
    return out;
}

struct SpiralPair {
    SpiralFit first;
    std::optional<SpiralFit> second;
    bool one_lobe = true;
    bool opposite_orientation = false;
};

/// Consecutive projected gaps must exceed this multiple of the median gap
/// before the window is split into two lobes.
inline constexpr double lobe_gap_factor = 4.0;

/// Split the window at the largest jump of the in-plane path and fit each
/// side separately.
inline SpiralPair detect_spiral_pair(std::span<const TriplePoint> points, const EpochWindow& window = {}) {
    const auto pts = detail::select_window(points, window);
    if (pts.size() < min_spiral_points) throw InsufficientData("spiral pair needs at least 16 points in the window");
    SpiralPair out;
    out.first = fit_spiral(pts);
    const auto& e = out.first.plane_basis;

    std::vector<double> gaps(pts.size() - 1);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const Vec3 d{pts[i + 1].x[0] - pts[i].x[0], pts[i + 1].x[1] - pts[i].x[1], pts[i + 1].x[2] - pts[i].x[2]};
        gaps[i] = std::hypot(detail::dot(d, e[0]), detail::dot(d, e[1]));
    }
    const auto widest = static_cast<std::size_t>(std::max_element(gaps.begin(), gaps.end()) - gaps.begin());
    const double typical = median_of(gaps);
    if (!(gaps[widest] > lobe_gap_factor * typical)) return out;

    const std::span<const TriplePoint> all(pts);
    const auto lobe_a = all.first(widest + 1);
    const auto lobe_b = all.subspan(widest + 1);
    if (lobe_a.size() < min_spiral_points || lobe_b.size() < min_spiral_points)
        throw InsufficientData("a lobe has fewer than 16 points");
    out.first = fit_spiral(lobe_a);
    out.second = fit_spiral(lobe_b);
    out.one_lobe = false;
    out.opposite_orientation = (out.first.winding_number > 0.0) != (out.second->winding_number > 0.0) &&
                               out.first.winding_number != 0.0 && out.second->winding_number != 0.0;
    return out;
}

inline SpiralPair detect_spiral_pair(std::span<const Snapshot> snapshots, const std::array<std::size_t, 3>& triple,
                                     const EpochWindow& window = {}) {
    const auto points = extract_triple(snapshots, triple);
    return detect_spiral_pair(std::span<const TriplePoint>(points), window);
}

}  // namespace adamlab
