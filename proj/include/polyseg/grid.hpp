#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "polyseg/geometry.hpp"

namespace polyseg {

struct InstanceAnnotation {
    int class_id = 0;
    Polygon polygon;
};

/// Output-layer layout: per anchor, 2N vertex offsets + 1 confidence +
/// C class channels on an S x S grid.
struct GridSpec {
    int grid_size = 7;                               // S
    std::vector<std::pair<double, double>> anchors;  // (w, h), normalized units
    int num_vertices = 8;                            // N
    int num_classes = 1;                             // C

    int channels_per_anchor() const { return 2 * num_vertices + 1 + num_classes; }
    int num_anchors() const { return static_cast<int>(anchors.size()); }
    std::size_t value_count() const {
        return static_cast<std::size_t>(grid_size) * grid_size * num_anchors() *
               channels_per_anchor();
    }
    std::size_t slot_offset(int cell_y, int cell_x, int anchor) const {
        return ((static_cast<std::size_t>(cell_y) * grid_size + cell_x) * num_anchors() + anchor) *
               channels_per_anchor();
    }
    std::size_t slot_index(int cell_y, int cell_x, int anchor) const {
        return (static_cast<std::size_t>(cell_y) * grid_size + cell_x) * num_anchors() + anchor;
    }
};

/// Encoded training target. Responsible slots carry confidence 1, a class
/// one-hot, and vertex offsets from the cell's top-left corner in grid
/// units; offsets may leave [0,1] since polygons span cells.
struct GridTarget {
    std::vector<double> values;        // S*S*B*(2N+1+C)
    std::vector<char> responsibility;  // S*S*B
    int dropped = 0;                   // instances that found no free slot
};

struct Detection {
    int class_id = 0;
    double confidence = 0.0;
    Polygon polygon;  // normalized coordinates, exactly N vertices
};

/// Assigns each instance to the cell holding its centroid and the free
/// anchor whose box best matches the instance bounding box (IoU at shared
/// center). Second claimant of a slot falls back to its next-best anchor.
GridTarget encode_targets(const std::vector<InstanceAnnotation>& annotations,
                          const GridSpec& spec);

/// Emits a Detection for every slot whose sigmoid(confidence) clears the
/// threshold. Inverse of encode_targets on encoded polygons.
std::vector<Detection> decode_predictions(const std::vector<double>& values, const GridSpec& spec,
                                          double conf_threshold);

/// Greedy same-class suppression by exact rasterized polygon IoU.
std::vector<Detection> polygon_nms(const std::vector<Detection>& detections, double iou_threshold,
                                   int resolution = 2048);

}  // namespace polyseg
