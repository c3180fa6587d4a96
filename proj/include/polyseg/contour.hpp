#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "polyseg/geometry.hpp"

namespace polyseg {

/// Dense instance-id raster. 0 is background, k > 0 is instance k. Ids need
/// not be contiguous. Row-major storage.
struct InstanceMask {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> pixels;

    std::int32_t at(int x, int y) const {
        if (x < 0 || y < 0 || x >= width || y >= height) return 0;
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
};

/// Closed 8-connected chain of boundary pixel centers for one instance.
struct ContourChain {
    std::vector<Point2> points;
    double arc_length = 0.0;

    std::size_t size() const { return points.size(); }
};

struct ContourExtraction {
    std::map<std::int32_t, ContourChain> chains;
    std::vector<std::int32_t> skipped;  // instances with < 3 boundary pixels
};

/// Outer boundary of every instance, traced Moore-neighbor style with
/// Jacob's stopping criterion. Holes and secondary components are ignored;
/// instances touching the border are clipped at it.
ContourExtraction extract_contours(const InstanceMask& mask);

/// Dominant points of a closed chain: per-point region of support from the
/// chord / perpendicular-distance rule, k-cosine curvature, nonmaxima
/// suppression. The four axis-extreme points are always retained.
std::vector<Point2> dominant_points(const ContourChain& chain);

/// Eq-style fixed-step subsampling: vertex k = points[floor(k * |points| / n)].
Polygon fixed_step_sample(const std::vector<Point2>& points, std::size_t n);

/// Ramer-Douglas-Peucker on a closed chain, split at the two mutually
/// farthest points. Output is a subset of the input in chain order.
std::vector<Point2> rdp_simplify(const std::vector<Point2>& points, double epsilon);

/// Binary-searches epsilon = gamma * arc_length, gamma in (0, 0.5], for a
/// simplification with exactly n vertices; if no epsilon hits n, the closest
/// coarser result is repaired by inserting chain points at the arc-length
/// midpoints of the longest arcs. All returned vertices are chain points.
Polygon adaptive_simplify(const ContourChain& chain, std::size_t n);

/// IoU between a polygon and one instance of a mask, sampled at pixel
/// centers; centers that fall exactly on the polygon boundary count as
/// inside. `resolution` caps the sampling grid along the longer side.
double polygon_mask_iou(const Polygon& poly, const InstanceMask& mask, std::int32_t instance_id,
                        int resolution = 2048);

/// Grows n from 4 in steps of 2 and returns the first n whose IoU gain over
/// n-2 falls below delta. Returns the chain size when n would exceed it.
int optimal_vertex_count(const ContourChain& chain, const InstanceMask& mask,
                         std::int32_t instance_id, double delta, int resolution = 2048);

}  // namespace polyseg
