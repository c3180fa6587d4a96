#pragma once

#include <cstddef>
#include <vector>

#include "polyseg/error.hpp"

namespace polyseg {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline bool operator==(const Point2& a, const Point2& b) { return a.x == b.x && a.y == b.y; }

/// Closed polygon; the last vertex connects back to the first.
/// Coordinates are pixels or normalized [0,1] units depending on context.
struct Polygon {
    std::vector<Point2> vertices;

    Polygon() = default;
    explicit Polygon(std::vector<Point2> v) : vertices(std::move(v)) {}

    std::size_t size() const { return vertices.size(); }
};

struct PolarVertex {
    double distance = 0.0;  // >= 0, same units as the source polygon
    double theta = 0.0;     // degrees in [0, 360)
};

/// Polar form of a polygon about a reference center, sorted ascending by theta.
struct PolarPolygon {
    Point2 center;
    std::vector<PolarVertex> vertices;
};

struct Bounds {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
};

Bounds bounds(const Polygon& p);

/// Absolute shoelace area. Orientation independent.
double shoelace_area(const Polygon& p);

/// Arithmetic mean of the vertices (not the area centroid).
Point2 centroid(const Polygon& p);

/// Full-circle angle of (x,y) about the origin, degrees in [0, 360).
double angle_deg(double dx, double dy);

/// Indices of p.vertices ordered by ascending theta about center; theta ties
/// break by ascending distance, remaining ties keep input order.
std::vector<std::size_t> sorted_polar_indices(const Polygon& p, const Point2& center);

PolarPolygon to_polar(const Polygon& p, const Point2& center);

/// Inverse of to_polar up to vertex ordering.
Polygon to_cartesian(const PolarPolygon& p);

Polygon sort_by_theta(const Polygon& p, const Point2& center);

/// True iff two non-adjacent edges properly cross or are collinear and
/// overlap in more than a point. Touches at a single point do not count.
bool is_self_intersecting(const Polygon& p);

/// Rasterized IoU on a shared grid with `resolution` cells along the longer
/// side of the joint bounding box (even-odd fill, pixel-center sampling).
/// Error is O(perimeter / resolution). Requires simple polygons.
double exact_iou(const Polygon& a, const Polygon& b, int resolution = 2048);

/// Same rasterization as exact_iou but without the simplicity check; even-odd
/// fill is still well defined for self-intersecting input.
double rasterized_iou_unchecked(const Polygon& a, const Polygon& b, int resolution = 2048);

}  // namespace polyseg
