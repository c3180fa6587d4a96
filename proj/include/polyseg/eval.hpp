#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polyseg/grid.hpp"

namespace polyseg {

struct DetectionMatch {
    std::string image_id;
    int det_index = 0;  // position in the image's detection list, the stable tie-break id
    int class_id = 0;
    double confidence = 0.0;
    bool tp = false;
    double iou = 0.0;
    int gt_index = -1;
};

struct MatchResult {
    std::vector<DetectionMatch> detections;
    int num_gt = 0;
};

/// Greedy matching by descending confidence: a detection claims the
/// unmatched same-class ground truth with the highest IoU >= threshold.
MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<InstanceAnnotation>& gts, double iou_threshold,
                             int resolution = 2048);

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

struct ApResult {
    std::optional<double> ap;  // absent when the class has no ground truth
    std::vector<PrPoint> pr;
    int tp = 0;
    int fp = 0;
};

/// All-point interpolated AP over the matches of one class. Ties in
/// confidence break by (image_id, det_index).
ApResult average_precision(std::vector<DetectionMatch> matches, int num_gt);

struct ClassApEntry {
    int class_id = 0;
    double iou_threshold = 0.5;
    std::optional<double> ap;
    std::vector<PrPoint> pr;
    int tp = 0;
    int fp = 0;
    int num_gt = 0;
};

struct EvalReport {
    std::vector<ClassApEntry> entries;
    std::vector<std::pair<double, std::optional<double>>> mean_ap;  // per threshold
};

/// Per-class AP at every requested IoU threshold. Every detection image id
/// must exist in the ground-truth map.
EvalReport evaluate(const std::map<std::string, std::vector<InstanceAnnotation>>& gts,
                    const std::map<std::string, std::vector<Detection>>& dets,
                    const std::vector<double>& thresholds = {0.5, 0.75}, int resolution = 2048);

std::string eval_report_json(const EvalReport& report);
std::string eval_report_csv(const EvalReport& report);

}  // namespace polyseg
