#include "polyseg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace polyseg {

namespace {

double box_iou_shared_center(double w1, double h1, double w2, double h2) {
    const double inter = std::min(w1, w2) * std::min(h1, h2);
    const double uni = w1 * h1 + w2 * h2 - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

GridTarget encode_targets(const std::vector<InstanceAnnotation>& annotations,
                          const GridSpec& spec) {
    if (spec.grid_size < 1 || spec.num_anchors() < 1 || spec.num_vertices < 3 ||
        spec.num_classes < 1)
        throw std::invalid_argument("invalid grid spec");

    GridTarget target;
    target.values.assign(spec.value_count(), 0.0);
    target.responsibility.assign(
        static_cast<std::size_t>(spec.grid_size) * spec.grid_size * spec.num_anchors(), 0);

    const int s = spec.grid_size;
    const int nv = spec.num_vertices;

    for (const InstanceAnnotation& ann : annotations) {
        if (static_cast<int>(ann.polygon.size()) != nv)
            throw Error(ErrorCode::ShapeMismatch, "annotation vertex count differs from spec");
        if (ann.class_id < 0 || ann.class_id >= spec.num_classes)
            throw Error(ErrorCode::ShapeMismatch, "class id outside spec range");

        const Point2 c = centroid(ann.polygon);
        const int cell_x = std::clamp(static_cast<int>(std::floor(c.x * s)), 0, s - 1);
        const int cell_y = std::clamp(static_cast<int>(std::floor(c.y * s)), 0, s - 1);

        const Bounds bb = bounds(ann.polygon);
        std::vector<int> order(spec.anchors.size());
        std::iota(order.begin(), order.end(), 0);
        std::vector<double> iou(spec.anchors.size());
        for (std::size_t a = 0; a < spec.anchors.size(); ++a)
            iou[a] = box_iou_shared_center(bb.width(), bb.height(), spec.anchors[a].first,
                                           spec.anchors[a].second);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return iou[a] > iou[b]; });

        int anchor = -1;
        for (int a : order) {
            if (!target.responsibility[spec.slot_index(cell_y, cell_x, a)]) {
                anchor = a;
                break;
            }
        }
        if (anchor < 0) {
            ++target.dropped;
            continue;
        }

        const std::size_t off = spec.slot_offset(cell_y, cell_x, anchor);
        for (int k = 0; k < nv; ++k) {
            target.values[off + 2 * k] = ann.polygon.vertices[k].x * s - cell_x;
            target.values[off + 2 * k + 1] = ann.polygon.vertices[k].y * s - cell_y;
        }
        target.values[off + 2 * nv] = 1.0;
        target.values[off + 2 * nv + 1 + ann.class_id] = 1.0;
        target.responsibility[spec.slot_index(cell_y, cell_x, anchor)] = 1;
    }
    return target;
}

std::vector<Detection> decode_predictions(const std::vector<double>& values, const GridSpec& spec,
                                          double conf_threshold) {
    if (values.size() != spec.value_count())
        throw Error(ErrorCode::ShapeMismatch, "values size does not match spec");

    const int s = spec.grid_size;
    const int nv = spec.num_vertices;
    std::vector<Detection> detections;
    for (int cy = 0; cy < s; ++cy)
        for (int cx = 0; cx < s; ++cx)
            for (int a = 0; a < spec.num_anchors(); ++a) {
                const std::size_t off = spec.slot_offset(cy, cx, a);
                const double conf = sigmoid(values[off + 2 * nv]);
                if (conf < conf_threshold) continue;

                Detection det;
                det.confidence = conf;
                det.polygon.vertices.reserve(nv);
                for (int k = 0; k < nv; ++k)
                    det.polygon.vertices.push_back({(cx + values[off + 2 * k]) / s,
                                                    (cy + values[off + 2 * k + 1]) / s});
                int best_class = 0;
                for (int c = 1; c < spec.num_classes; ++c)
                    if (values[off + 2 * nv + 1 + c] > values[off + 2 * nv + 1 + best_class])
                        best_class = c;
                det.class_id = best_class;
                detections.push_back(std::move(det));
            }
    return detections;
}

std::vector<Detection> polygon_nms(const std::vector<Detection>& detections, double iou_threshold,
                                   int resolution) {
    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return detections[a].confidence > detections[b].confidence;
    });

    std::vector<Detection> kept;
    for (std::size_t idx : order) {
        const Detection& cand = detections[idx];
        bool suppressed = false;
        for (const Detection& k : kept) {
            if (k.class_id != cand.class_id) continue;
            if (exact_iou(k.polygon, cand.polygon, resolution) >= iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(cand);
    }
    return kept;
}

}  // namespace polyseg
