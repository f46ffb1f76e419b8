#ifndef RESPFLOW_GEOMETRY_HPP
#define RESPFLOW_GEOMETRY_HPP

#include <cmath>

namespace respflow {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::hypot(x, y); }
};

inline Vec2 midpoint(const Vec2& a, const Vec2& b) {
    return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
}

/// Integer pixel rectangle, top-left origin, y growing downward.
struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    int right() const { return x + w; }
    int bottom() const { return y + h; }
    bool overlaps(const Rect& o) const {
        return x < o.right() && o.x < right() && y < o.bottom() && o.y < bottom();
    }
};

}  // namespace respflow

#endif  // RESPFLOW_GEOMETRY_HPP
