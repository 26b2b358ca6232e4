#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace cv2x {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline double norm(Point v) { return std::hypot(v.x, v.y); }

/// Displacement from `from` to `to`. With wrap_length > 0 the x axis is
/// periodic and the minimum-image displacement is returned.
inline Point displacement(Point from, Point to, double wrap_length = 0.0)
{
    Point d = to - from;
    if (wrap_length > 0.0) {
        d.x = std::remainder(d.x, wrap_length);
    }
    return d;
}

inline double distance(Point a, Point b, double wrap_length = 0.0) { return norm(displacement(a, b, wrap_length)); }

using VehicleId = std::int64_t;

/// Positions of all vehicles present at one sampling instant.
struct ScenarioSnapshot {
    double time_s = 0.0;
    std::vector<VehicleId> ids;
    std::vector<Point> positions;
    double wrap_length_m = 0.0;  // 0 = open plane

    std::size_t size() const { return ids.size(); }
    double distance(std::size_t i, std::size_t j) const
    {
        return cv2x::distance(positions[i], positions[j], wrap_length_m);
    }
};

namespace detail {

inline double cross(Point o, Point a, Point b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

inline bool on_segment(Point p, Point q, Point r)
{
    return std::min(p.x, r.x) <= q.x && q.x <= std::max(p.x, r.x) && std::min(p.y, r.y) <= q.y &&
           q.y <= std::max(p.y, r.y);
}

}  // namespace detail

/// Closed-segment intersection test, collinear touching included.
inline bool segments_intersect(Point p1, Point p2, Point q1, Point q2)
{
    using detail::cross;
    const double d1 = cross(q1, q2, p1);
    const double d2 = cross(q1, q2, p2);
    const double d3 = cross(p1, p2, q1);
    const double d4 = cross(p1, p2, q2);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    if (d1 == 0 && detail::on_segment(q1, p1, q2))
        return true;
    if (d2 == 0 && detail::on_segment(q1, p2, q2))
        return true;
    if (d3 == 0 && detail::on_segment(p1, q1, p2))
        return true;
    if (d4 == 0 && detail::on_segment(p1, q2, p2))
        return true;
    return false;
}

/// Even-odd rule; points on the boundary may go either way.
inline bool point_in_polygon(Point p, const std::vector<Point>& poly)
{
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point a = poly[i];
        const Point b = poly[j];
        if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x)
            inside = !inside;
    }
    return inside;
}

}  // namespace cv2x
