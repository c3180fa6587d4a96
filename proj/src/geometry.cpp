#include "polyseg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace polyseg {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
        case ErrorCode::VertexAtCenter: return "VertexAtCenter";
        case ErrorCode::SelfIntersecting: return "SelfIntersecting";
        case ErrorCode::EmptyUnion: return "EmptyUnion";
        case ErrorCode::TooFewPoints: return "TooFewPoints";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::DegenerateMinPolygon: return "DegenerateMinPolygon";
        case ErrorCode::BadEpoch: return "BadEpoch";
        case ErrorCode::DatasetMismatch: return "DatasetMismatch";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

Bounds bounds(const Polygon& p) {
    if (p.vertices.empty()) throw Error(ErrorCode::DegeneratePolygon, "bounds of empty polygon");
    Bounds b{p.vertices[0].x, p.vertices[0].y, p.vertices[0].x, p.vertices[0].y};
    for (const Point2& v : p.vertices) {
        b.min_x = std::min(b.min_x, v.x);
        b.min_y = std::min(b.min_y, v.y);
        b.max_x = std::max(b.max_x, v.x);
        b.max_y = std::max(b.max_y, v.y);
    }
    return b;
}

double shoelace_area(const Polygon& p) {
    const std::size_t n = p.size();
    if (n < 3) throw Error(ErrorCode::DegeneratePolygon, "shoelace_area needs >= 3 vertices");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = p.vertices[i];
        const Point2& b = p.vertices[(i + 1) % n];
        sum += a.x * b.y - a.y * b.x;
    }
    return std::abs(sum) / 2.0;
}

Point2 centroid(const Polygon& p) {
    if (p.vertices.empty()) throw Error(ErrorCode::DegeneratePolygon, "centroid of empty polygon");
    double sx = 0.0, sy = 0.0;
    for (const Point2& v : p.vertices) {
        sx += v.x;
        sy += v.y;
    }
    const double n = static_cast<double>(p.size());
    return {sx / n, sy / n};
}

double angle_deg(double dx, double dy) {
    double deg = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
    if (deg < 0.0) deg += 360.0;
    if (deg >= 360.0) deg = 0.0;
    return deg == 0.0 ? 0.0 : deg;  // normalize -0.0
}

std::vector<std::size_t> sorted_polar_indices(const Polygon& p, const Point2& center) {
    struct Key {
        double theta;
        double dist;
        std::size_t idx;
    };
    std::vector<Key> keys;
    keys.reserve(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double dx = p.vertices[i].x - center.x;
        const double dy = p.vertices[i].y - center.y;
        const double d = std::hypot(dx, dy);
        if (d <= 0.0) throw Error(ErrorCode::VertexAtCenter, "vertex coincides with reference center");
        keys.push_back({angle_deg(dx, dy), d, i});
    }
    std::stable_sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
        if (a.theta != b.theta) return a.theta < b.theta;
        return a.dist < b.dist;
    });
    std::vector<std::size_t> order;
    order.reserve(keys.size());
    for (const Key& k : keys) order.push_back(k.idx);
    return order;
}

PolarPolygon to_polar(const Polygon& p, const Point2& center) {
    if (p.size() < 3) throw Error(ErrorCode::DegeneratePolygon, "to_polar needs >= 3 vertices");
    PolarPolygon out;
    out.center = center;
    for (std::size_t i : sorted_polar_indices(p, center)) {
        const double dx = p.vertices[i].x - center.x;
        const double dy = p.vertices[i].y - center.y;
        out.vertices.push_back({std::hypot(dx, dy), angle_deg(dx, dy)});
    }
    return out;
}

Polygon to_cartesian(const PolarPolygon& p) {
    Polygon out;
    out.vertices.reserve(p.vertices.size());
    for (const PolarVertex& v : p.vertices) {
        const double rad = v.theta * std::numbers::pi / 180.0;
        out.vertices.push_back({p.center.x + v.distance * std::cos(rad),
                                p.center.y + v.distance * std::sin(rad)});
    }
    return out;
}

Polygon sort_by_theta(const Polygon& p, const Point2& center) {
    Polygon out;
    out.vertices.reserve(p.size());
    for (std::size_t i : sorted_polar_indices(p, center)) out.vertices.push_back(p.vertices[i]);
    return out;
}

namespace {

double orient(const Point2& a, const Point2& b, const Point2& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// Proper crossing or collinear overlap of positive length; single-point
// touches are not reported.
bool segments_cross_or_overlap(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
    const double d1 = orient(c, d, a);
    const double d2 = orient(c, d, b);
    const double d3 = orient(a, b, c);
    const double d4 = orient(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    if (d1 == 0 && d2 == 0 && d3 == 0 && d4 == 0) {
        // Collinear: overlap must exceed a single point.
        double lo1 = std::min(a.x, b.x), hi1 = std::max(a.x, b.x);
        double lo2 = std::min(c.x, d.x), hi2 = std::max(c.x, d.x);
        double lo = std::max(lo1, lo2), hi = std::min(hi1, hi2);
        if (lo < hi) return true;
        lo1 = std::min(a.y, b.y); hi1 = std::max(a.y, b.y);
        lo2 = std::min(c.y, d.y); hi2 = std::max(c.y, d.y);
        lo = std::max(lo1, lo2); hi = std::min(hi1, hi2);
        return lo < hi;
    }
    return false;
}

}  // namespace

bool is_self_intersecting(const Polygon& p) {
    const std::size_t n = p.size();
    if (n < 3) throw Error(ErrorCode::DegeneratePolygon, "is_self_intersecting needs >= 3 vertices");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (j == i + 1) continue;            // adjacent
            if (i == 0 && j == n - 1) continue;  // closing edge adjacency
            const Point2& a = p.vertices[i];
            const Point2& b = p.vertices[(i + 1) % n];
            const Point2& c = p.vertices[j];
            const Point2& d = p.vertices[(j + 1) % n];
            if (segments_cross_or_overlap(a, b, c, d)) return true;
        }
    }
    return false;
}

namespace {

// Sorted x-crossings of the polygon boundary with the horizontal line at y.
// Half-open vertex rule keeps the even-odd parity consistent.
void scan_crossings(const Polygon& p, double y, std::vector<double>& out) {
    out.clear();
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = p.vertices[i];
        const Point2& b = p.vertices[(i + 1) % n];
        if ((a.y <= y && y < b.y) || (b.y <= y && y < a.y)) {
            out.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
        }
    }
    std::sort(out.begin(), out.end());
}

// Number of sample centers min_x + (i + 0.5) * cell, i in [0, nx), lying in [lo, hi).
long count_centers(double lo, double hi, double min_x, double cell, long nx) {
    if (hi <= lo) return 0;
    const double t_lo = (lo - min_x) / cell - 0.5;
    const double t_hi = (hi - min_x) / cell - 0.5;
    long i_lo = static_cast<long>(std::ceil(t_lo));
    long i_hi = static_cast<long>(std::ceil(t_hi));  // exclusive
    i_lo = std::max(i_lo, 0L);
    i_hi = std::min(i_hi, nx);
    return std::max(0L, i_hi - i_lo);
}

}  // namespace

double rasterized_iou_unchecked(const Polygon& a, const Polygon& b, int resolution) {
    if (a.size() < 3 || b.size() < 3)
        throw Error(ErrorCode::DegeneratePolygon, "iou needs >= 3 vertices");
    if (resolution < 1) throw std::invalid_argument("resolution must be >= 1");

    Bounds ba = bounds(a);
    const Bounds bb = bounds(b);
    ba.min_x = std::min(ba.min_x, bb.min_x);
    ba.min_y = std::min(ba.min_y, bb.min_y);
    ba.max_x = std::max(ba.max_x, bb.max_x);
    ba.max_y = std::max(ba.max_y, bb.max_y);

    const double w = ba.width();
    const double h = ba.height();
    const double cell = std::max(w, h) / resolution;
    if (!(cell > 0.0)) throw Error(ErrorCode::EmptyUnion, "degenerate joint bounding box");
    const long nx = std::max(1L, static_cast<long>(std::ceil(w / cell - 1e-12)));
    const long ny = std::max(1L, static_cast<long>(std::ceil(h / cell - 1e-12)));

    long count_a = 0, count_b = 0, count_inter = 0;
    std::vector<double> xa, xb;
    for (long j = 0; j < ny; ++j) {
        const double y = ba.min_y + (j + 0.5) * cell;
        scan_crossings(a, y, xa);
        scan_crossings(b, y, xb);
        for (std::size_t k = 0; k + 1 < xa.size(); k += 2)
            count_a += count_centers(xa[k], xa[k + 1], ba.min_x, cell, nx);
        for (std::size_t k = 0; k + 1 < xb.size(); k += 2)
            count_b += count_centers(xb[k], xb[k + 1], ba.min_x, cell, nx);
        // Interval intersection, two pointers.
        std::size_t ia = 0, ib = 0;
        while (ia + 1 < xa.size() && ib + 1 < xb.size()) {
            const double lo = std::max(xa[ia], xb[ib]);
            const double hi = std::min(xa[ia + 1], xb[ib + 1]);
            if (lo < hi) count_inter += count_centers(lo, hi, ba.min_x, cell, nx);
            if (xa[ia + 1] < xb[ib + 1])
                ia += 2;
            else
                ib += 2;
        }
    }

    const long count_union = count_a + count_b - count_inter;
    if (count_union <= 0) throw Error(ErrorCode::EmptyUnion, "both polygons rasterize to nothing");
    return static_cast<double>(count_inter) / static_cast<double>(count_union);
}

double exact_iou(const Polygon& a, const Polygon& b, int resolution) {
    if (is_self_intersecting(a) || is_self_intersecting(b))
        throw Error(ErrorCode::SelfIntersecting, "exact_iou requires simple polygons");
    return rasterized_iou_unchecked(a, b, resolution);
}

}  // namespace polyseg
