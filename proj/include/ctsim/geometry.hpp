#ifndef CTSIM_GEOMETRY_HPP
#define CTSIM_GEOMETRY_HPP

#include <cmath>
#include <numbers>

namespace ctsim {

/// Planar vector in meters (positions) or dimensionless (directions).
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const noexcept { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const noexcept { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const noexcept { return {x * s, y * s}; }
    constexpr Vec2 operator-() const noexcept { return {-x, -y}; }
    constexpr bool operator==(const Vec2 &) const = default;
};

constexpr double dot(Vec2 a, Vec2 b) noexcept { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) noexcept { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) noexcept { return std::hypot(a.x, a.y); }
constexpr Vec2 rotate_ccw90(Vec2 a) noexcept { return {-a.y, a.x}; }

inline Vec2 normalized(Vec2 a) noexcept
{
    const double n = norm(a);
    return {a.x / n, a.y / n};
}

inline double heading(Vec2 a) noexcept { return std::atan2(a.y, a.x); }
inline Vec2 unit_from_heading(double angle) noexcept { return {std::cos(angle), std::sin(angle)}; }

/// Unsigned angle in [0, pi] between two non-zero vectors.
inline double unsigned_angle(Vec2 a, Vec2 b) noexcept { return std::atan2(std::abs(cross(a, b)), dot(a, b)); }

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) noexcept
{
    a = std::remainder(a, 2.0 * std::numbers::pi);
    return a == -std::numbers::pi ? std::numbers::pi : a;
}

} // namespace ctsim

#endif
