#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "polyseg/losses.hpp"

namespace polyseg {

enum class OptimizerKind { PlainGradient, AdaptiveMoment };

struct FitConfig {
    int epochs = 80;
    double learning_rate = 1e-3;  // step size on normalized coordinates
    OptimizerKind optimizer = OptimizerKind::AdaptiveMoment;
    LossConfig loss;
    bool use_schedule = true;   // lambda from the epoch schedule
    double fixed_lambda = 1.0;  // used when use_schedule is false
    std::uint64_t seed = 0;     // consumed by perturbation generation
    int iou_resolution = 1024;  // grid for the per-epoch IoU trace
};

struct FitEpoch {
    double lambda = 0.0;
    double loss = 0.0;
    double iou = 0.0;  // exact rasterized IoU against the ground truth
    bool self_intersecting = false;
};

struct FitTrace {
    std::vector<FitEpoch> epochs;
    Polygon final_polygon;
    int iou_skipped_count = 0;
    bool aborted = false;  // a loss error stopped the fit; trace is partial
    std::string error;
};

/// First-order optimization of the 2N predicted coordinates against gt with
/// the scheduled combined localization loss. Deterministic.
FitTrace fit_polygon(const Polygon& init, const Polygon& gt, const FitConfig& cfg);

/// CSV columns: epoch, lambda, loss, iou, self_intersecting.
void write_trace_csv(const FitTrace& trace, std::ostream& out);

struct Perturbation {
    enum class Kind { None, Translate, Scale, IndexShift, Jitter };
    Kind kind = Kind::None;
    double amount = 0.0;  // shift (both axes), scale factor, index count, or jitter sigma
};

Polygon apply_perturbation(const Polygon& gt, const Perturbation& perturbation,
                           std::uint64_t seed);

struct LossVariant {
    std::string name;
    FitConfig config;
};

struct ComparisonRow {
    std::string name;
    double mean_final_iou = 0.0;
    double mean_convergence_epoch = 0.0;  // first epoch with IoU >= 0.95, epochs if never
    int fits = 0;
};

/// Runs every variant over the perturbed fixture set and reports mean final
/// IoU and mean convergence epoch per variant.
std::vector<ComparisonRow> compare_losses(const std::vector<Polygon>& gt_set,
                                          const Perturbation& perturbation,
                                          const std::vector<LossVariant>& variants);

}  // namespace polyseg
