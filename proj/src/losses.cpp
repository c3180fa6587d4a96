#include "polyseg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace polyseg {

namespace {

// log(cosh(t)) without overflow: |t| + log(1 + e^(-2|t|)) - log 2.
double log_cosh(double t) {
    const double a = std::abs(t);
    return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

void require_same_size(const Polygon& pred, const Polygon& gt) {
    if (pred.size() != gt.size())
        throw Error(ErrorCode::ShapeMismatch, "pred and gt vertex counts differ");
}

struct PolarView {
    std::vector<std::size_t> order;  // sorted slot -> original index
    std::vector<double> dist;        // per sorted slot
};

PolarView polar_view(const Polygon& p, const Point2& center) {
    PolarView view;
    view.order = sorted_polar_indices(p, center);
    view.dist.reserve(view.order.size());
    for (std::size_t i : view.order) {
        const double dx = p.vertices[i].x - center.x;
        const double dy = p.vertices[i].y - center.y;
        view.dist.push_back(std::hypot(dx, dy));
    }
    return view;
}

}  // namespace

LossReport logcosh_loss(const Polygon& pred, const Polygon& gt) {
    require_same_size(pred, gt);
    if (pred.size() == 0) throw Error(ErrorCode::ShapeMismatch, "empty polygons");
    const std::size_t n = pred.size();
    const double scale = 1.0 / (2.0 * static_cast<double>(n));

    LossReport report;
    report.gradient.assign(2 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double rx = pred.vertices[i].x - gt.vertices[i].x;
        const double ry = pred.vertices[i].y - gt.vertices[i].y;
        report.value += (log_cosh(rx) + log_cosh(ry)) * scale;
        report.gradient[2 * i] = std::tanh(rx) * scale;
        report.gradient[2 * i + 1] = std::tanh(ry) * scale;
    }
    return report;
}

LossReport polar_iou_loss(const Polygon& pred, const Polygon& gt, const Point2& center) {
    require_same_size(pred, gt);
    if (pred.size() < 3) throw Error(ErrorCode::DegeneratePolygon, "need >= 3 vertices");
    const std::size_t n = pred.size();

    const PolarView pv = polar_view(pred, center);
    const PolarView gv = polar_view(gt, center);

    double sum_max = 0.0, sum_min = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        sum_max += std::max(pv.dist[j], gv.dist[j]);
        sum_min += std::min(pv.dist[j], gv.dist[j]);
    }

    LossReport report;
    report.value = std::log(sum_max / sum_min);
    report.gradient.assign(2 * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        // Ties take the max branch for the predicted distance.
        const double dv = pv.dist[j] >= gv.dist[j] ? 1.0 / sum_max : -1.0 / sum_min;
        const std::size_t i = pv.order[j];
        const double dx = pred.vertices[i].x - center.x;
        const double dy = pred.vertices[i].y - center.y;
        report.gradient[2 * i] = dv * dx / pv.dist[j];
        report.gradient[2 * i + 1] = dv * dy / pv.dist[j];
    }
    return report;
}

LossReport cartesian_iou_loss(const Polygon& pred, const Polygon& gt) {
    require_same_size(pred, gt);
    if (pred.size() < 3) throw Error(ErrorCode::DegeneratePolygon, "need >= 3 vertices");
    const std::size_t n = pred.size();
    const Point2 center = centroid(gt);

    const PolarView pv = polar_view(pred, center);
    const PolarView gv = polar_view(gt, center);

    // Per sorted slot, the farther vertex goes to the max-polygon, the nearer
    // to the min-polygon; ties send the prediction to the max branch.
    std::vector<Point2> max_poly(n), min_poly(n);
    std::vector<char> pred_in_max(n), pred_in_min(n);
    for (std::size_t j = 0; j < n; ++j) {
        const Point2 pp = pred.vertices[pv.order[j]];
        const Point2 gp = gt.vertices[gv.order[j]];
        if (pv.dist[j] >= gv.dist[j]) {
            max_poly[j] = pp;
            min_poly[j] = gp;
            pred_in_max[j] = 1;
        } else {
            max_poly[j] = gp;
            min_poly[j] = pp;
            pred_in_min[j] = 1;
        }
    }

    auto signed_sum = [&](const std::vector<Point2>& poly) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const Point2& a = poly[j];
            const Point2& b = poly[(j + 1) % n];
            s += a.x * b.y - a.y * b.x;
        }
        return s;
    };
    const double s_max = signed_sum(max_poly);
    const double s_min = signed_sum(min_poly);
    const double area_max = std::abs(s_max) / 2.0;
    const double area_min = std::abs(s_min) / 2.0;
    if (area_min < 1e-12)
        throw Error(ErrorCode::DegenerateMinPolygon, "min-polygon area below 1e-12");

    LossReport report;
    report.gradient.assign(2 * n, 0.0);
    const double raw = std::log(area_max / area_min);
    if (raw <= 0.0) return report;  // clamped; zero everywhere
    report.value = raw;

    const double sign_max = s_max >= 0.0 ? 1.0 : -1.0;
    const double sign_min = s_min >= 0.0 ? 1.0 : -1.0;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t prev = (j + n - 1) % n;
        const std::size_t next = (j + 1) % n;
        if (pred_in_max[j]) {
            const std::size_t i = pv.order[j];
            // d(log area_max)/dv through the shoelace terms of slot j
            report.gradient[2 * i] +=
                sign_max * (max_poly[next].y - max_poly[prev].y) / (2.0 * area_max);
            report.gradient[2 * i + 1] +=
                sign_max * (max_poly[prev].x - max_poly[next].x) / (2.0 * area_max);
        }
        if (pred_in_min[j]) {
            const std::size_t i = pv.order[j];
            report.gradient[2 * i] -=
                sign_min * (min_poly[next].y - min_poly[prev].y) / (2.0 * area_min);
            report.gradient[2 * i + 1] -=
                sign_min * (min_poly[prev].x - min_poly[next].x) / (2.0 * area_min);
        }
    }
    return report;
}

LossReport combined_localization_loss(const Polygon& pred, const Polygon& gt, double lambda,
                                      const LossConfig& cfg) {
    if (lambda >= 1.0) return logcosh_loss(pred, gt);

    if (is_self_intersecting(pred)) {
        LossReport report = logcosh_loss(pred, gt);
        report.iou_skipped = true;
        return report;
    }

    LossReport iou = cfg.iou_kind == IouKind::Polar ? polar_iou_loss(pred, gt, centroid(gt))
                                                    : cartesian_iou_loss(pred, gt);
    if (lambda <= 0.0) return iou;

    LossReport reg = logcosh_loss(pred, gt);
    LossReport out;
    out.value = lambda * reg.value + (1.0 - lambda) * iou.value;
    out.gradient.resize(reg.gradient.size());
    for (std::size_t i = 0; i < out.gradient.size(); ++i)
        out.gradient[i] = lambda * reg.gradient[i] + (1.0 - lambda) * iou.gradient[i];
    return out;
}

double lambda_schedule(int epoch, const LossConfig& cfg) {
    if (epoch < 1) throw Error(ErrorCode::BadEpoch, "epoch must be >= 1");
    const double raw = cfg.schedule.a + cfg.schedule.b / static_cast<double>(epoch);
    return std::min(1.0, std::max(raw, cfg.schedule.floor));
}

double classification_loss(const std::vector<std::vector<double>>& pred_probs,
                           const std::vector<std::vector<double>>& gt_probs,
                           const std::vector<char>& obj_mask) {
    if (pred_probs.size() != gt_probs.size() || pred_probs.size() != obj_mask.size())
        throw Error(ErrorCode::ShapeMismatch, "cell counts differ");
    double loss = 0.0;
    for (std::size_t i = 0; i < pred_probs.size(); ++i) {
        if (!obj_mask[i]) continue;
        if (pred_probs[i].size() != gt_probs[i].size())
            throw Error(ErrorCode::ShapeMismatch, "class counts differ");
        for (std::size_t c = 0; c < pred_probs[i].size(); ++c) {
            const double d = pred_probs[i][c] - gt_probs[i][c];
            loss += d * d;
        }
    }
    return loss;
}

double confidence_loss(const std::vector<std::vector<double>>& pred_conf,
                       const std::vector<std::vector<char>>& responsible, double lambda_noobj) {
    if (pred_conf.size() != responsible.size())
        throw Error(ErrorCode::ShapeMismatch, "cell counts differ");
    double loss = 0.0;
    for (std::size_t i = 0; i < pred_conf.size(); ++i) {
        if (pred_conf[i].size() != responsible[i].size())
            throw Error(ErrorCode::ShapeMismatch, "anchor counts differ");
        for (std::size_t j = 0; j < pred_conf[i].size(); ++j) {
            const double target = responsible[i][j] ? 1.0 : 0.0;
            const double d = pred_conf[i][j] - target;
            loss += responsible[i][j] ? d * d : lambda_noobj * d * d;
        }
    }
    return loss;
}

double total_loss(const std::vector<double>& pred_values, const GridTarget& target,
                  const GridSpec& spec, int epoch, const LossConfig& cfg) {
    if (pred_values.size() != spec.value_count() || target.values.size() != spec.value_count())
        throw Error(ErrorCode::ShapeMismatch, "grid shape does not match spec");
    const int s = spec.grid_size;
    const int b = spec.num_anchors();
    const int nv = spec.num_vertices;
    const int nc = spec.num_classes;
    const double lambda = lambda_schedule(epoch, cfg);

    double loss = 0.0;
    for (int cy = 0; cy < s; ++cy)
        for (int cx = 0; cx < s; ++cx)
            for (int a = 0; a < b; ++a) {
                const std::size_t off = spec.slot_offset(cy, cx, a);
                const bool resp = target.responsibility[spec.slot_index(cy, cx, a)] != 0;
                const double conf = pred_values[off + 2 * nv];
                const double conf_target = resp ? 1.0 : 0.0;
                const double cd = conf - conf_target;
                loss += resp ? cd * cd : cfg.lambda_noobj * cd * cd;
                if (!resp) continue;

                for (int c = 0; c < nc; ++c) {
                    const double d =
                        pred_values[off + 2 * nv + 1 + c] - target.values[off + 2 * nv + 1 + c];
                    loss += d * d;
                }

                Polygon pred_poly, gt_poly;
                for (int k = 0; k < nv; ++k) {
                    pred_poly.vertices.push_back(
                        {pred_values[off + 2 * k], pred_values[off + 2 * k + 1]});
                    gt_poly.vertices.push_back(
                        {target.values[off + 2 * k], target.values[off + 2 * k + 1]});
                }
                loss += combined_localization_loss(pred_poly, gt_poly, lambda, cfg).value;
            }
    return loss;
}

}  // namespace polyseg
