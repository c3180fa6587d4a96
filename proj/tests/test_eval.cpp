#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "polyseg/contour.hpp"
#include "polyseg/eval.hpp"
#include "support/fixtures.hpp"

using namespace polyseg;

namespace {

Polygon square_at(double x, double y, double side = 0.08) {
    return Polygon({{x, y}, {x + side, y}, {x + side, y + side}, {x, y + side}});
}

InstanceAnnotation gt_square(double x, double y, int class_id = 0) {
    InstanceAnnotation ann;
    ann.class_id = class_id;
    ann.polygon = square_at(x, y);
    return ann;
}

Detection det_square(double x, double y, double conf, int class_id = 0) {
    Detection det;
    det.class_id = class_id;
    det.confidence = conf;
    det.polygon = square_at(x, y);
    return det;
}

// Randomized scene: disjoint ground-truth squares on a coarse grid, one
// detection per chosen square (some displaced into misses) plus false
// positives in empty cells. Confidences are all distinct.
struct Scene {
    std::vector<InstanceAnnotation> gts;
    std::vector<Detection> dets;
};

Scene random_scene(fixtures::Rng& rng) {
    Scene scene;
    std::vector<double> confs;
    for (int i = 0; i < 25; ++i) confs.push_back(0.05 + 0.9 * i / 25.0);
    // deterministic shuffle via rng
    for (std::size_t i = confs.size(); i > 1; --i)
        std::swap(confs[i - 1], confs[rng.uniform_int(0, static_cast<int>(i) - 1)]);
    std::size_t conf_idx = 0;

    for (int cy = 0; cy < 4; ++cy)
        for (int cx = 0; cx < 4; ++cx) {
            const double x = 0.05 + 0.24 * cx;
            const double y = 0.05 + 0.24 * cy;
            const double roll = rng.uniform();
            const int class_id = rng.uniform_int(0, 1);
            if (roll < 0.45) {  // GT with a detection of varying quality
                scene.gts.push_back(gt_square(x, y, class_id));
                const double quality = rng.uniform();
                double dx = 0.0;
                if (quality < 0.3)
                    dx = 0.002;  // near perfect
                else if (quality < 0.6)
                    dx = 0.02;  // IoU ~ 0.6, passes 0.5 only
                else if (quality < 0.8)
                    dx = 0.06;  // IoU ~ 0.14, fails both
                scene.dets.push_back(det_square(x + dx, y, confs[conf_idx++], class_id));
            } else if (roll < 0.6) {  // unmatched GT
                scene.gts.push_back(gt_square(x, y, class_id));
            } else if (roll < 0.75) {  // false positive
                scene.dets.push_back(det_square(x, y, confs[conf_idx++], class_id));
            }
        }
    return scene;
}

}  // namespace

TEST_CASE("match_detections basics") {
    const auto gt = gt_square(0.2, 0.2);
    const auto det = det_square(0.2, 0.2, 0.9);

    const auto perfect = match_detections({det}, {gt}, 0.5, 512);
    REQUIRE(perfect.detections.size() == 1);
    CHECK(perfect.detections[0].tp);
    CHECK(perfect.detections[0].gt_index == 0);
    CHECK(perfect.num_gt == 1);

    // IoU ~ 0.6 fails a 0.75 threshold: FP and the GT stays unmatched
    const auto shifted = det_square(0.22, 0.2, 0.9);  // overlap 0.06/0.10 = 0.6
    const auto miss = match_detections({shifted}, {gt}, 0.75, 1024);
    CHECK_FALSE(miss.detections[0].tp);
    const auto hit = match_detections({shifted}, {gt}, 0.5, 1024);
    CHECK(hit.detections[0].tp);

    // two detections on one GT: only the higher confidence one matches
    const auto second = det_square(0.2, 0.2, 0.7);
    const auto doubled = match_detections({second, det}, {gt}, 0.5, 512);
    CHECK(doubled.detections[1].tp);       // conf 0.9
    CHECK_FALSE(doubled.detections[0].tp);  // conf 0.7 finds the GT taken
}

TEST_CASE("match_detections ignores other classes") {
    const auto gt = gt_square(0.2, 0.2, 1);
    const auto det = det_square(0.2, 0.2, 0.9, 0);
    const auto result = match_detections({det}, {gt}, 0.5, 512);
    CHECK_FALSE(result.detections[0].tp);
}

TEST_CASE("average_precision endpoints") {
    std::vector<DetectionMatch> perfect(3);
    for (int i = 0; i < 3; ++i) {
        perfect[i].det_index = i;
        perfect[i].confidence = 0.9 - 0.1 * i;
        perfect[i].tp = true;
    }
    CHECK(average_precision(perfect, 3).ap.value() == doctest::Approx(1.0));

    CHECK(average_precision({}, 3).ap.value() == doctest::Approx(0.0));
    CHECK_FALSE(average_precision({}, 0).ap.has_value());
}

TEST_CASE("toy five-instance scene reproduces the hand-computed staircase") {
    // 5 ground truths; detections: TP at 0.9, FP at 0.8, TP at 0.7.
    // Ranked PR points: (0.2, 1), (0.2, 1/2), (0.4, 2/3).
    // All-point AP = 0.2 * 1 + 0.2 * 2/3 = 1/3.
    std::vector<InstanceAnnotation> gts;
    for (int i = 0; i < 5; ++i) gts.push_back(gt_square(0.05 + 0.18 * i, 0.1));
    std::vector<Detection> dets;
    dets.push_back(det_square(0.05, 0.1, 0.9));         // TP on gt 0
    dets.push_back(det_square(0.05, 0.6, 0.8));         // FP, empty area
    dets.push_back(det_square(0.05 + 0.18, 0.1, 0.7));  // TP on gt 1

    const auto matched = match_detections(dets, gts, 0.5, 512);
    std::vector<DetectionMatch> ms = matched.detections;
    for (auto& m : ms) m.image_id = "toy";
    const auto ap = average_precision(ms, matched.num_gt);
    REQUIRE(ap.ap.has_value());
    CHECK(ap.ap.value() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(ap.tp == 2);
    CHECK(ap.fp == 1);

    const auto report = evaluate({{"toy", gts}}, {{"toy", dets}}, {0.5}, 512);
    REQUIRE(report.entries.size() == 1);
    CHECK(report.entries[0].ap.value() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // PR samples are monotone in recall
    const auto& pr = report.entries[0].pr;
    REQUIRE(pr.size() == 3);
    for (std::size_t i = 1; i < pr.size(); ++i) CHECK(pr[i].recall >= pr[i - 1].recall);
}

TEST_CASE("evaluate endpoints and errors") {
    std::vector<InstanceAnnotation> gts{gt_square(0.1, 0.1), gt_square(0.5, 0.5, 1)};
    std::vector<Detection> dets{det_square(0.1, 0.1, 1.0), det_square(0.5, 0.5, 1.0, 1)};

    const auto perfect = evaluate({{"a", gts}}, {{"a", dets}});
    for (const auto& entry : perfect.entries) CHECK(entry.ap.value() == doctest::Approx(1.0));
    for (const auto& [thr, mean] : perfect.mean_ap) CHECK(mean.value() == doctest::Approx(1.0));

    const auto none = evaluate({{"a", gts}}, {{"a", {}}});
    for (const auto& entry : none.entries) CHECK(entry.ap.value() == doctest::Approx(0.0));

    CHECK_THROWS_AS(evaluate({{"a", gts}}, {{"unknown", dets}}), Error);
}

TEST_CASE("AP is undefined for classes without ground truth") {
    std::vector<InstanceAnnotation> gts{gt_square(0.1, 0.1, 0)};
    std::vector<Detection> dets{det_square(0.1, 0.1, 0.9, 0), det_square(0.5, 0.5, 0.8, 1)};
    const auto report = evaluate({{"a", gts}}, {{"a", dets}}, {0.5}, 512);
    REQUIRE(report.entries.size() == 2);
    for (const auto& entry : report.entries) {
        if (entry.class_id == 0) CHECK(entry.ap.has_value());
        if (entry.class_id == 1) CHECK_FALSE(entry.ap.has_value());
    }
    // the undefined class does not drag the mean down
    CHECK(report.mean_ap[0].second.value() == doctest::Approx(1.0));
}

TEST_CASE("AP50 >= AP75 on randomized evaluations") {
    fixtures::Rng rng(301);
    for (int trial = 0; trial < 20; ++trial) {
        const Scene scene = random_scene(rng);
        if (scene.gts.empty()) continue;
        const auto report = evaluate({{"img", scene.gts}}, {{"img", scene.dets}}, {0.5, 0.75}, 512);
        const auto& m50 = report.mean_ap[0].second;
        const auto& m75 = report.mean_ap[1].second;
        if (m50 && m75) CHECK(*m50 >= *m75 - 1e-12);
        for (const auto& entry : report.entries) {
            if (entry.iou_threshold != 0.5 || !entry.ap) continue;
            for (const auto& other : report.entries)
                if (other.class_id == entry.class_id && other.iou_threshold == 0.75 && other.ap)
                    CHECK(*entry.ap >= *other.ap - 1e-12);
        }
    }
}

TEST_CASE("adding a lower-confidence duplicate never increases AP") {
    fixtures::Rng rng(407);
    for (int trial = 0; trial < 100; ++trial) {
        const Scene scene = random_scene(rng);
        if (scene.gts.empty() || scene.dets.empty()) continue;
        const auto base = evaluate({{"img", scene.gts}}, {{"img", scene.dets}}, {0.5}, 256);

        auto dets = scene.dets;
        Detection dup = dets[rng.uniform_int(0, static_cast<int>(dets.size()) - 1)];
        dup.confidence *= 0.5;
        dets.push_back(dup);
        const auto with_dup = evaluate({{"img", scene.gts}}, {{"img", dets}}, {0.5}, 256);

        for (std::size_t i = 0; i < base.entries.size(); ++i) {
            const auto& b = base.entries[i];
            for (const auto& w : with_dup.entries)
                if (w.class_id == b.class_id && b.ap && w.ap) {
                    if (w.iou_threshold == b.iou_threshold) CHECK(*w.ap <= *b.ap + 1e-12);
                }
        }
    }
}

TEST_CASE("AP is invariant to detection input order") {
    fixtures::Rng rng(509);
    const Scene scene = random_scene(rng);
    REQUIRE_FALSE(scene.dets.empty());
    const auto base = evaluate({{"img", scene.gts}}, {{"img", scene.dets}}, {0.5, 0.75}, 256);

    auto shuffled = scene.dets;
    std::reverse(shuffled.begin(), shuffled.end());
    const auto redone = evaluate({{"img", scene.gts}}, {{"img", shuffled}}, {0.5, 0.75}, 256);

    REQUIRE(base.entries.size() == redone.entries.size());
    for (std::size_t i = 0; i < base.entries.size(); ++i) {
        CHECK(base.entries[i].ap.has_value() == redone.entries[i].ap.has_value());
        if (base.entries[i].ap)
            CHECK(*base.entries[i].ap == doctest::Approx(*redone.entries[i].ap).epsilon(1e-12));
    }
}

TEST_CASE("adaptive polygons score at least fixed-step polygons as detections") {
    const auto shapes = fixtures::mixed_shape_set(19);
    std::map<std::string, std::vector<InstanceAnnotation>> gts;
    std::map<std::string, std::vector<Detection>> adaptive_dets, fixed_dets;

    int used = 0;
    for (std::size_t s = 0; s < shapes.size() && used < 5; s += 4, ++used) {
        const auto chains = extract_contours(shapes[s]);
        const auto& chain = chains.chains.at(1);
        const auto dom = dominant_points(chain);
        const std::size_t n = std::min<std::size_t>(10, dom.size());

        const double w = shapes[s].width, h = shapes[s].height;
        auto normalize = [&](Polygon p) {
            for (auto& v : p.vertices) {
                v.x /= w;
                v.y /= h;
            }
            return p;
        };

        // reference polygon: dense simplification of the same chain
        InstanceAnnotation gt;
        gt.class_id = 0;
        gt.polygon = normalize(
            adaptive_simplify(chain, std::min<std::size_t>(64, chain.size())));
        const std::string id = "shape" + std::to_string(used);
        gts[id] = {gt};

        Detection da;
        da.class_id = 0;
        da.confidence = 1.0;
        da.polygon = normalize(adaptive_simplify(chain, n));
        adaptive_dets[id] = {da};

        Detection df = da;
        df.polygon = normalize(fixed_step_sample(dom, n));
        fixed_dets[id] = {df};
    }

    const auto ra = evaluate(gts, adaptive_dets, {0.75}, 1024);
    const auto rf = evaluate(gts, fixed_dets, {0.75}, 1024);
    REQUIRE(ra.mean_ap[0].second.has_value());
    REQUIRE(rf.mean_ap[0].second.has_value());
    CHECK(*ra.mean_ap[0].second >= *rf.mean_ap[0].second);
}
