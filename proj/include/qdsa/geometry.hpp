// Copyright 2026 The qdsa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

/// Planar vector math and shortest paths around a circular obstacle.
///
/// The end-effector is modelled as a point in the table plane. The obstacle is
/// the planar cross-section of a sphere; the shortest collision-free path from
/// one point to another either is the straight segment or consists of two
/// tangent segments joined by an arc on the circle.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdsa {

class GeometryError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct Vec2 {
    double x{0.0};
    double y{0.0};

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
    friend constexpr Vec2 operator/(const Vec2& a, double s) { return {a.x / s, a.y / s}; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;

    constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    /// z-component of the 3-D cross product.
    constexpr double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    constexpr double squared_norm() const { return x * x + y * y; }
    bool is_finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

/// Unit vector along v, or the zero vector when |v| < eps.
inline Vec2 unit_or_zero(const Vec2& v, double eps = 1e-9) {
    const double n = v.norm();
    return n < eps ? Vec2{} : v / n;
}

/// Rescales v to have norm at most max_norm.
inline Vec2 clamp_norm(const Vec2& v, double max_norm) {
    const double n = v.norm();
    return (n <= max_norm || n == 0.0) ? v : v * (max_norm / n);
}

struct Sphere {
    Vec2 center;
    double radius{0.0};

    Sphere() = default;
    Sphere(Vec2 c, double r) : center(c), radius(r) {
        if (!(r > 0.0))
            throw GeometryError("sphere radius must be positive");
    }

    bool contains(const Vec2& p) const { return distance(p, center) < radius; }
};

/// Distance from c to the closest point of the closed segment pq.
inline double segment_point_distance(const Vec2& p, const Vec2& q, const Vec2& c) {
    const Vec2 d = q - p;
    const double len2 = d.squared_norm();
    double t = 0.0;
    if (len2 > 0.0)
        t = std::clamp((c - p).dot(d) / len2, 0.0, 1.0);
    return distance(p + d * t, c);
}

inline bool segment_intersects_sphere(const Vec2& p, const Vec2& q, const Sphere& s) {
    return segment_point_distance(p, q, s.center) <= s.radius;
}

/// Shortest path from `from` to `to` that does not enter the sphere.
/// Either a straight segment (`wraps == false`) or tangent + arc + tangent.
class WrapPath {
public:
    WrapPath(const Vec2& from, const Vec2& to, const std::optional<Sphere>& obstacle)
        : from_(from), to_(to) {
        if (!obstacle)
            return;
        const Sphere& s = *obstacle;
        const Vec2 rx = from - s.center;
        const Vec2 rg = to - s.center;
        const double dx = rx.norm();
        const double dg = rg.norm();
        if (dx < s.radius || dg < s.radius)
            throw GeometryError("path endpoint lies inside the obstacle");
        if (!segment_intersects_sphere(from, to, s))
            return;

        // Signed sweep from the start bearing to the goal bearing, in (-pi, pi].
        double sweep = std::atan2(rx.cross(rg), rx.dot(rg));
        if (sweep <= -std::numbers::pi)
            sweep = std::numbers::pi;
        const double dir = sweep >= 0.0 ? 1.0 : -1.0;
        const double off_from = std::acos(std::min(1.0, s.radius / dx));
        const double off_to = std::acos(std::min(1.0, s.radius / dg));
        const double arc = std::max(0.0, std::abs(sweep) - off_from - off_to);

        wraps_ = true;
        center_ = s.center;
        radius_ = s.radius;
        dir_ = dir;
        arc_start_ = std::atan2(rx.y, rx.x) + dir * off_from;
        arc_angle_ = arc;
        tangent_from_ = std::sqrt(std::max(0.0, dx * dx - s.radius * s.radius));
        tangent_to_ = std::sqrt(std::max(0.0, dg * dg - s.radius * s.radius));
    }

    bool wraps() const { return wraps_; }

    double length() const {
        if (!wraps_)
            return distance(from_, to_);
        return tangent_from_ + radius_ * arc_angle_ + tangent_to_;
    }

    /// Point at arc length `s` from the start, clamped to [0, length()].
    Vec2 point_at(double s) const {
        const double total = length();
        s = std::clamp(s, 0.0, total);
        if (!wraps_)
            return total == 0.0 ? from_ : from_ + (to_ - from_) * (s / total);
        const Vec2 t1 = on_circle(arc_start_);
        if (s <= tangent_from_)
            return tangent_from_ == 0.0 ? t1 : from_ + (t1 - from_) * (s / tangent_from_);
        const double arc_len = radius_ * arc_angle_;
        if (s <= tangent_from_ + arc_len)
            return on_circle(arc_start_ + dir_ * (s - tangent_from_) / radius_);
        const Vec2 t2 = on_circle(arc_start_ + dir_ * arc_angle_);
        const double rest = s - tangent_from_ - arc_len;
        return tangent_to_ == 0.0 ? to_ : t2 + (to_ - t2) * (rest / tangent_to_);
    }

private:
    Vec2 on_circle(double angle) const {
        return center_ + Vec2{std::cos(angle), std::sin(angle)} * radius_;
    }

    Vec2 from_;
    Vec2 to_;
    bool wraps_{false};
    Vec2 center_;
    double radius_{0.0};
    double dir_{1.0};
    double arc_start_{0.0};
    double arc_angle_{0.0};
    double tangent_from_{0.0};
    double tangent_to_{0.0};
};

/// Length of the shortest path from x to g wrapping around s.
inline double wrap_path_length(const Vec2& x, const Vec2& g, const Sphere& s) {
    return WrapPath(x, g, s).length();
}

inline double wrap_path_length(const Vec2& x, const Vec2& g, const std::optional<Sphere>& s) {
    return WrapPath(x, g, s).length();
}

/// m points at arc-length fractions 1/(m+1), ..., m/(m+1) of the shortest
/// collision-free path from x to g.
inline std::vector<Vec2> wrap_path_waypoints(const Vec2& x, const Vec2& g,
                                             const std::optional<Sphere>& s, std::size_t m) {
    const WrapPath path(x, g, s);
    const double total = path.length();
    std::vector<Vec2> out;
    out.reserve(m);
    for (std::size_t k = 1; k <= m; ++k)
        out.push_back(path.point_at(total * static_cast<double>(k) / static_cast<double>(m + 1)));
    return out;
}

}  // namespace qdsa
