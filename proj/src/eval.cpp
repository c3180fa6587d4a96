#include "polyseg/eval.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace polyseg {

MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<InstanceAnnotation>& gts, double iou_threshold,
                             int resolution) {
    MatchResult result;
    result.num_gt = static_cast<int>(gts.size());

    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].confidence > dets[b].confidence;
    });

    std::vector<char> gt_taken(gts.size(), 0);
    result.detections.resize(dets.size());
    for (std::size_t rank : order) {
        const Detection& det = dets[rank];
        DetectionMatch m;
        m.det_index = static_cast<int>(rank);
        m.class_id = det.class_id;
        m.confidence = det.confidence;

        int best_gt = -1;
        double best_iou = 0.0;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (gt_taken[g] || gts[g].class_id != det.class_id) continue;
            const double iou = exact_iou(det.polygon, gts[g].polygon, resolution);
            if (iou >= iou_threshold && iou > best_iou) {
                best_iou = iou;
                best_gt = static_cast<int>(g);
            }
        }
        if (best_gt >= 0) {
            gt_taken[best_gt] = 1;
            m.tp = true;
            m.iou = best_iou;
            m.gt_index = best_gt;
        }
        result.detections[rank] = std::move(m);
    }
    return result;
}

ApResult average_precision(std::vector<DetectionMatch> matches, int num_gt) {
    ApResult result;
    if (num_gt <= 0) return result;  // AP undefined without ground truth

    std::stable_sort(matches.begin(), matches.end(),
                     [](const DetectionMatch& a, const DetectionMatch& b) {
                         if (a.confidence != b.confidence) return a.confidence > b.confidence;
                         if (a.image_id != b.image_id) return a.image_id < b.image_id;
                         return a.det_index < b.det_index;
                     });

    int tp = 0, fp = 0;
    std::vector<PrPoint> raw;
    raw.reserve(matches.size());
    for (const DetectionMatch& m : matches) {
        m.tp ? ++tp : ++fp;
        raw.push_back({static_cast<double>(tp) / num_gt,
                       static_cast<double>(tp) / static_cast<double>(tp + fp)});
    }
    result.tp = tp;
    result.fp = fp;
    result.pr = raw;

    // All-point interpolation: integrate the monotone precision envelope.
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        double envelope = raw[i].precision;
        for (std::size_t j = i + 1; j < raw.size(); ++j)
            envelope = std::max(envelope, raw[j].precision);
        if (raw[i].recall > prev_recall) {
            ap += (raw[i].recall - prev_recall) * envelope;
            prev_recall = raw[i].recall;
        }
    }
    result.ap = ap;
    return result;
}

EvalReport evaluate(const std::map<std::string, std::vector<InstanceAnnotation>>& gts,
                    const std::map<std::string, std::vector<Detection>>& dets,
                    const std::vector<double>& thresholds, int resolution) {
    for (const auto& [image_id, unused] : dets)
        if (!gts.count(image_id))
            throw Error(ErrorCode::DatasetMismatch, "detections reference unknown image " + image_id);

    std::set<int> classes;
    for (const auto& [id, anns] : gts)
        for (const auto& a : anns) classes.insert(a.class_id);
    for (const auto& [id, ds] : dets)
        for (const auto& d : ds) classes.insert(d.class_id);

    EvalReport report;
    for (double threshold : thresholds) {
        std::map<int, std::vector<DetectionMatch>> per_class;
        std::map<int, int> gt_counts;
        for (int c : classes) {
            per_class[c];
            gt_counts[c] = 0;
        }
        for (const auto& [image_id, anns] : gts)
            for (const auto& a : anns) ++gt_counts[a.class_id];

        for (const auto& [image_id, image_dets] : dets) {
            MatchResult matched =
                match_detections(image_dets, gts.at(image_id), threshold, resolution);
            for (DetectionMatch& m : matched.detections) {
                m.image_id = image_id;
                per_class[m.class_id].push_back(m);
            }
        }

        double ap_sum = 0.0;
        int ap_count = 0;
        for (int c : classes) {
            ApResult ap = average_precision(per_class[c], gt_counts[c]);
            ClassApEntry entry;
            entry.class_id = c;
            entry.iou_threshold = threshold;
            entry.ap = ap.ap;
            entry.pr = std::move(ap.pr);
            entry.tp = ap.tp;
            entry.fp = ap.fp;
            entry.num_gt = gt_counts[c];
            if (entry.ap) {
                ap_sum += *entry.ap;
                ++ap_count;
            }
            report.entries.push_back(std::move(entry));
        }
        report.mean_ap.emplace_back(threshold, ap_count > 0
                                                   ? std::optional<double>(ap_sum / ap_count)
                                                   : std::nullopt);
    }
    return report;
}

std::string eval_report_json(const EvalReport& report) {
    nlohmann::json j;
    j["classes"] = nlohmann::json::array();
    for (const auto& e : report.entries) {
        nlohmann::json item;
        item["class_id"] = e.class_id;
        item["iou_threshold"] = e.iou_threshold;
        if (e.ap)
            item["ap"] = *e.ap;
        else
            item["ap"] = nullptr;
        item["tp"] = e.tp;
        item["fp"] = e.fp;
        item["num_gt"] = e.num_gt;
        nlohmann::json pr = nlohmann::json::array();
        for (const auto& p : e.pr) pr.push_back({{"recall", p.recall}, {"precision", p.precision}});
        item["pr"] = std::move(pr);
        j["classes"].push_back(std::move(item));
    }
    j["mean_ap"] = nlohmann::json::array();
    for (const auto& [threshold, ap] : report.mean_ap) {
        nlohmann::json item;
        item["iou_threshold"] = threshold;
        if (ap)
            item["ap"] = *ap;
        else
            item["ap"] = nullptr;
        j["mean_ap"].push_back(std::move(item));
    }
    return j.dump(2);
}

std::string eval_report_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "class_id,iou_threshold,ap,tp,fp,num_gt\n";
    for (const auto& e : report.entries) {
        out << e.class_id << ',' << e.iou_threshold << ',';
        if (e.ap)
            out << *e.ap;
        else
            out << "nan";
        out << ',' << e.tp << ',' << e.fp << ',' << e.num_gt << '\n';
    }
    return out.str();
}

}  // namespace polyseg
