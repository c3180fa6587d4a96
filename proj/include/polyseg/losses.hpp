#pragma once

#include <vector>

#include "polyseg/geometry.hpp"
#include "polyseg/grid.hpp"

namespace polyseg {

/// Loss value plus gradient with respect to the predicted vertex
/// coordinates, interleaved (d/dx0, d/dy0, d/dx1, ...).
struct LossReport {
    double value = 0.0;
    std::vector<double> gradient;
    bool iou_skipped = false;  // set when a self-intersecting prediction fell back to regression
};

enum class IouKind { Polar, Cartesian };

struct LambdaSchedule {
    double floor = 0.2;
    double a = 0.7822;
    double b = 0.3429;
};

struct LossConfig {
    double lambda_noobj = 0.5;
    IouKind iou_kind = IouKind::Cartesian;
    LambdaSchedule schedule;
};

/// Mean log-cosh of the per-coordinate residuals; index-wise vertex
/// correspondence. Stable for large residuals.
LossReport logcosh_loss(const Polygon& pred, const Polygon& gt);

/// log(sum max(d, d*) / sum min(d, d*)) over theta-sorted matched vertices.
/// Ties route the predicted distance through the max branch.
LossReport polar_iou_loss(const Polygon& pred, const Polygon& gt, const Point2& center);

/// log(area(max-polygon) / area(min-polygon)) with vertices matched by theta
/// about the ground-truth centroid, clamped to >= 0.
LossReport cartesian_iou_loss(const Polygon& pred, const Polygon& gt);

/// lambda * logcosh + (1 - lambda) * IoU loss. Self-intersecting predictions
/// skip the IoU term (treated as lambda = 1) and set iou_skipped.
LossReport combined_localization_loss(const Polygon& pred, const Polygon& gt, double lambda,
                                      const LossConfig& cfg);

/// max(a + b / epoch, floor), clamped to 1 at the top.
double lambda_schedule(int epoch, const LossConfig& cfg);

/// Squared error of class conditional probabilities over object cells.
double classification_loss(const std::vector<std::vector<double>>& pred_probs,
                           const std::vector<std::vector<double>>& gt_probs,
                           const std::vector<char>& obj_mask);

/// Squared confidence error with lambda_noobj down-weighting background slots.
double confidence_loss(const std::vector<std::vector<double>>& pred_conf,
                       const std::vector<std::vector<char>>& responsible, double lambda_noobj);

/// Classification + confidence + scheduled localization over responsible
/// slots. `pred_values` uses the target encoding (probabilities, not logits).
double total_loss(const std::vector<double>& pred_values, const GridTarget& target,
                  const GridSpec& spec, int epoch, const LossConfig& cfg);

}  // namespace polyseg
