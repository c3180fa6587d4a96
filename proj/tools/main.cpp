// polyseg command line: dataset conversion, loss evaluation, polygon
// fitting, AP evaluation, and plot-data export.
//
// Exit codes: 0 success, 1 user/data error, 2 internal error.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "polyseg/contour.hpp"
#include "polyseg/eval.hpp"
#include "polyseg/fitter.hpp"
#include "polyseg/io.hpp"
#include "polyseg/losses.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace polyseg;

namespace {

struct CommonOptions {
    std::string output_dir = ".";
    std::string format = "json";
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--output-dir", opts.output_dir, "Directory for output files");
    cmd->add_option("--format", opts.format, "Report format")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--seed", opts.seed, "Seed for all randomized steps");
    cmd->add_option("--jobs", opts.jobs, "Worker threads for per-file work")
        ->check(CLI::Range(1u, 256u));
}

void ensure_output_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec && !fs::is_directory(dir))
        throw Error(ErrorCode::IoError, "cannot create output dir " + dir);
}

Polygon normalize_polygon(Polygon p, double width, double height) {
    for (auto& v : p.vertices) {
        v.x = std::clamp(v.x, 0.0, width) / width;
        v.y = std::clamp(v.y, 0.0, height) / height;
    }
    return p;
}

Polygon denormalize_polygon(Polygon p, double width, double height) {
    for (auto& v : p.vertices) {
        v.x *= width;
        v.y *= height;
    }
    return p;
}

bool is_json_file(const std::string& path) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return false;
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    return ext == "json";
}

ContourChain chain_from_polygon(const Polygon& poly) {
    ContourChain chain;
    chain.points = poly.vertices;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2& a = poly.vertices[i];
        const Point2& b = poly.vertices[(i + 1) % poly.size()];
        chain.arc_length += std::hypot(b.x - a.x, b.y - a.y);
    }
    return chain;
}

// ---- convert --------------------------------------------------------------

struct ConvertOptions {
    std::vector<std::string> inputs;
    std::string n_spec = "auto";
    std::string method = "adaptive";
    double delta = 0.005;
    int resolution = 2048;
};

struct ConvertedInstance {
    std::string key;  // instance id (masks) or index (json)
    int class_id = 0;
    double iou = 0.0;
    std::size_t vertices = 0;
};

struct ConvertFileResult {
    std::string input;
    std::string error;  // non-empty when the file failed entirely
    std::vector<std::string> skipped;
    std::vector<ConvertedInstance> instances;
};

Polygon convert_chain(const ContourChain& chain, std::size_t n, const std::string& method) {
    if (method == "adaptive") return adaptive_simplify(chain, n);
    const auto dom = dominant_points(chain);
    return fixed_step_sample(dom, n);
}

// One mask or annotation file -> one or more label files + summary entries.
ConvertFileResult convert_file(const std::string& input, std::size_t n,
                               const std::string& method, const std::string& output_dir) {
    ConvertFileResult result;
    result.input = input;
    try {
        if (is_json_file(input)) {
            for (const ImageRecord& rec : read_annotation_json(input)) {
                std::vector<LabelInstance> labels;
                int index = 0;
                for (const RecordInstance& inst : rec.instances) {
                    const std::string key = rec.id + "#" + std::to_string(index++);
                    try {
                        const ContourChain chain = chain_from_polygon(inst.polygon);
                        const Polygon poly = method == "adaptive"
                                                 ? adaptive_simplify(chain, n)
                                                 : fixed_step_sample(inst.polygon.vertices, n);
                        LabelInstance label;
                        label.class_id = inst.class_id;
                        label.polygon = normalize_polygon(poly, rec.width, rec.height);
                        labels.push_back(label);
                        result.instances.push_back(
                            {key, inst.class_id,
                             rasterized_iou_unchecked(poly, inst.polygon, 1024),
                             poly.size()});
                    } catch (const Error&) {
                        result.skipped.push_back(key);
                    }
                }
                write_label_file((fs::path(output_dir) / (rec.id + ".txt")).string(), labels);
            }
        } else {
            const InstanceMask mask = read_mask_png(input);
            const ContourExtraction extraction = extract_contours(mask);
            const std::string stem = fs::path(input).stem().string();
            for (std::int32_t id : extraction.skipped)
                result.skipped.push_back(stem + "#" + std::to_string(id));

            std::vector<LabelInstance> labels;
            for (const auto& [id, chain] : extraction.chains) {
                const std::string key = stem + "#" + std::to_string(id);
                try {
                    const Polygon poly = convert_chain(chain, n, method);
                    LabelInstance label;
                    label.class_id = 0;  // id masks carry no class information
                    label.polygon = normalize_polygon(poly, mask.width, mask.height);
                    labels.push_back(label);
                    result.instances.push_back(
                        {key, 0, polygon_mask_iou(poly, mask, id), poly.size()});
                } catch (const Error&) {
                    result.skipped.push_back(key);
                }
            }
            write_label_file((fs::path(output_dir) / (stem + ".txt")).string(), labels);
        }
    } catch (const std::exception& e) {
        result.error = e.what();
    }
    return result;
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const unsigned n = std::min<unsigned>(jobs, static_cast<unsigned>(count));
    for (unsigned w = 0; w < n; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    for (auto& t : workers) t.join();
}

int cmd_convert(const ConvertOptions& opts, const CommonOptions& common) {
    ensure_output_dir(common.output_dir);

    std::size_t n = 0;
    if (opts.n_spec == "auto") {
        // median optimal vertex count over every mask instance
        std::vector<std::vector<int>> per_file(opts.inputs.size());
        parallel_for(opts.inputs.size(), common.jobs, [&](std::size_t i) {
            if (is_json_file(opts.inputs[i])) return;
            try {
                const InstanceMask mask = read_mask_png(opts.inputs[i]);
                for (const auto& [id, chain] : extract_contours(mask).chains)
                    per_file[i].push_back(
                        optimal_vertex_count(chain, mask, id, opts.delta, opts.resolution));
            } catch (const std::exception&) {
                // unreadable files are reported by the conversion pass
            }
        });
        std::vector<int> counts;
        for (const auto& f : per_file) counts.insert(counts.end(), f.begin(), f.end());
        if (counts.empty())
            throw Error(ErrorCode::TooFewPoints,
                        "--n auto needs at least one readable PNG mask instance");
        std::sort(counts.begin(), counts.end());
        n = static_cast<std::size_t>(counts[(counts.size() - 1) / 2]);
    } else {
        const long parsed = std::strtol(opts.n_spec.c_str(), nullptr, 10);
        if (parsed < 3) throw Error(ErrorCode::ParseError, "--n must be >= 3 or \"auto\"");
        n = static_cast<std::size_t>(parsed);
    }

    std::vector<ConvertFileResult> results(opts.inputs.size());
    parallel_for(opts.inputs.size(), common.jobs, [&](std::size_t i) {
        results[i] = convert_file(opts.inputs[i], n, opts.method, common.output_dir);
    });

    json summary;
    summary["method"] = opts.method;
    summary["n"] = n;
    json images = json::object();
    double iou_sum = 0.0;
    std::size_t iou_count = 0, failures = 0;
    for (const ConvertFileResult& r : results) {
        json entry;
        if (!r.error.empty()) {
            entry["error"] = r.error;
            ++failures;
        }
        json insts = json::array();
        for (const ConvertedInstance& inst : r.instances) {
            insts.push_back({{"instance", inst.key},
                             {"class_id", inst.class_id},
                             {"vertices", inst.vertices},
                             {"iou", inst.iou}});
            iou_sum += inst.iou;
            ++iou_count;
        }
        entry["instances"] = std::move(insts);
        if (!r.skipped.empty()) entry["skipped"] = r.skipped;
        images[r.input] = std::move(entry);
    }
    summary["images"] = std::move(images);
    summary["mean_iou"] = iou_count ? iou_sum / iou_count : 0.0;
    write_text_file_atomic((fs::path(common.output_dir) / "convert_summary.json").string(),
                           summary.dump(2) + "\n");
    std::cout << summary.dump(2) << std::endl;
    return failures == opts.inputs.size() && !opts.inputs.empty() ? 1 : 0;
}

// ---- losses ---------------------------------------------------------------

struct LossesOptions {
    std::string pred_path;
    std::string gt_path;
    std::string kind = "combined";
    int epoch = 1;
    double lambda = -1.0;  // < 0: resolve via the schedule
};

int cmd_losses(const LossesOptions& opts, const CommonOptions& common) {
    const auto preds = read_label_file(opts.pred_path);
    const auto gts = read_label_file(opts.gt_path);
    if (preds.size() != gts.size())
        throw Error(ErrorCode::ShapeMismatch, "pred and gt files hold different instance counts");

    LossConfig cfg;
    cfg.iou_kind = opts.kind == "polar" ? IouKind::Polar : IouKind::Cartesian;
    const double lambda =
        opts.lambda >= 0.0 ? opts.lambda : lambda_schedule(opts.epoch, cfg);

    json pairs = json::array();
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const Polygon& pred = preds[i].polygon;
        const Polygon& gt = gts[i].polygon;
        LossReport report;
        if (opts.kind == "logcosh")
            report = logcosh_loss(pred, gt);
        else if (opts.kind == "polar")
            report = polar_iou_loss(pred, gt, centroid(gt));
        else if (opts.kind == "cartesian")
            report = cartesian_iou_loss(pred, gt);
        else
            report = combined_localization_loss(pred, gt, lambda, cfg);
        json item;
        item["value"] = report.value;
        item["gradient"] = report.gradient;
        if (report.iou_skipped) item["iou_skipped"] = true;
        pairs.push_back(std::move(item));
    }

    if (common.format == "csv") {
        std::cout << "pair,kind,lambda,value\n";
        for (std::size_t i = 0; i < pairs.size(); ++i)
            std::cout << i << ',' << opts.kind << ',' << lambda << ','
                      << pairs[i]["value"].get<double>() << '\n';
    } else {
        json out;
        out["kind"] = opts.kind;
        out["lambda"] = lambda;
        out["epoch"] = opts.epoch;
        out["pairs"] = std::move(pairs);
        std::cout << out.dump(2) << std::endl;
    }
    return 0;
}

// ---- fit ------------------------------------------------------------------

struct FitOptions {
    std::string gt_path;
    int index = 0;
    std::string perturb = "none";
    double amount = 0.0;
    std::string loss = "cartesian";
    double lambda = -1.0;  // < 0: schedule
    int epochs = 80;
    double learning_rate = 1e-3;
    std::string optimizer = "adam";
};

int cmd_fit(const FitOptions& opts, const CommonOptions& common) {
    ensure_output_dir(common.output_dir);
    const auto gts = read_label_file(opts.gt_path);
    if (opts.index < 0 || static_cast<std::size_t>(opts.index) >= gts.size())
        throw Error(ErrorCode::ParseError, "--index outside the label file");
    const LabelInstance& gt = gts[opts.index];

    Perturbation perturbation;
    if (opts.perturb == "none")
        perturbation = {Perturbation::Kind::None, 0.0};
    else if (opts.perturb == "translate")
        perturbation = {Perturbation::Kind::Translate, opts.amount};
    else if (opts.perturb == "scale")
        perturbation = {Perturbation::Kind::Scale, opts.amount};
    else if (opts.perturb == "shift-index")
        perturbation = {Perturbation::Kind::IndexShift, opts.amount > 0 ? opts.amount : 1.0};
    else
        perturbation = {Perturbation::Kind::Jitter, opts.amount};

    FitConfig cfg;
    cfg.epochs = opts.epochs;
    cfg.learning_rate = opts.learning_rate;
    cfg.optimizer =
        opts.optimizer == "gd" ? OptimizerKind::PlainGradient : OptimizerKind::AdaptiveMoment;
    cfg.seed = common.seed;
    cfg.loss.iou_kind = opts.loss == "polar" ? IouKind::Polar : IouKind::Cartesian;
    if (opts.loss == "regression") {
        cfg.use_schedule = false;
        cfg.fixed_lambda = 1.0;
    } else if (opts.lambda >= 0.0) {
        cfg.use_schedule = false;
        cfg.fixed_lambda = opts.lambda;
    }

    const Polygon init = apply_perturbation(gt.polygon, perturbation, common.seed + 1);
    const FitTrace trace = fit_polygon(init, gt.polygon, cfg);

    std::ostringstream csv;
    write_trace_csv(trace, csv);
    write_text_file_atomic((fs::path(common.output_dir) / "trace.csv").string(), csv.str());

    LabelInstance final_label;
    final_label.class_id = gt.class_id;
    final_label.polygon = trace.final_polygon;
    for (auto& v : final_label.polygon.vertices) {
        v.x = std::clamp(v.x, 0.0, 1.0);
        v.y = std::clamp(v.y, 0.0, 1.0);
    }
    write_label_file((fs::path(common.output_dir) / "final.txt").string(), {final_label});

    json out;
    out["epochs"] = trace.epochs.size();
    out["final_iou"] = trace.epochs.empty() ? 0.0 : trace.epochs.back().iou;
    out["final_loss"] = trace.epochs.empty() ? 0.0 : trace.epochs.back().loss;
    out["iou_skipped"] = trace.iou_skipped_count;
    out["aborted"] = trace.aborted;
    if (trace.aborted) out["error"] = trace.error;
    std::cout << out.dump(2) << std::endl;
    return trace.aborted ? 1 : 0;
}

// ---- eval -----------------------------------------------------------------

struct EvalOptions {
    std::string dets_path;
    std::string gts_path;
    std::vector<double> thresholds = {0.5, 0.75};
    int resolution = 2048;
};

int cmd_eval(const EvalOptions& opts, const CommonOptions& common) {
    ensure_output_dir(common.output_dir);

    std::map<std::string, std::vector<InstanceAnnotation>> gts;
    for (const ImageRecord& rec : read_annotation_json(opts.gts_path)) {
        auto& list = gts[rec.id];
        for (const RecordInstance& inst : rec.instances)
            list.push_back({inst.class_id, normalize_polygon(inst.polygon, rec.width, rec.height)});
    }
    std::map<std::string, std::vector<Detection>> dets;
    for (const ImageRecord& rec : read_annotation_json(opts.dets_path)) {
        auto& list = dets[rec.id];
        for (const RecordInstance& inst : rec.instances) {
            if (!inst.confidence)
                throw Error(ErrorCode::ParseError,
                            "detection without confidence in " + opts.dets_path);
            Detection det;
            det.class_id = inst.class_id;
            det.confidence = *inst.confidence;
            det.polygon = normalize_polygon(inst.polygon, rec.width, rec.height);
            list.push_back(std::move(det));
        }
    }

    const EvalReport report = evaluate(gts, dets, opts.thresholds, opts.resolution);
    write_text_file_atomic((fs::path(common.output_dir) / "report.json").string(),
                           eval_report_json(report) + "\n");
    write_text_file_atomic((fs::path(common.output_dir) / "report.csv").string(),
                           eval_report_csv(report));

    json out = json::array();
    for (const auto& [threshold, ap] : report.mean_ap) {
        json item;
        item["iou_threshold"] = threshold;
        item["mean_ap"] = ap ? json(*ap) : json(nullptr);
        out.push_back(std::move(item));
    }
    std::cout << out.dump(2) << std::endl;
    return 0;
}

// ---- plotdata ---------------------------------------------------------------

struct PlotOptions {
    std::string trace_path;
    std::string labels_path;
    int width = 0;
    int height = 0;
    std::vector<std::string> summaries;
};

int cmd_plotdata(const PlotOptions& opts, const CommonOptions& common) {
    ensure_output_dir(common.output_dir);
    bool did_anything = false;

    if (!opts.trace_path.empty()) {
        std::istringstream in(read_text_file(opts.trace_path));
        std::string line;
        if (!std::getline(in, line) || line.rfind("epoch,", 0) != 0)
            throw Error(ErrorCode::ParseError, "trace file lacks the expected CSV header");
        std::ostringstream out;
        out << "x,y,series\n";
        std::ostringstream body_iou, body_loss, body_lambda;
        while (std::getline(in, line)) {
            int epoch = 0;
            double lambda = 0, loss = 0, iou = 0;
            int self_flag = 0;
            if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%d", &epoch, &lambda, &loss, &iou,
                            &self_flag) != 5)
                throw Error(ErrorCode::ParseError, "bad trace row: " + line);
            body_iou << epoch << ',' << iou << ",iou\n";
            body_loss << epoch << ',' << loss << ",loss\n";
            body_lambda << epoch << ',' << lambda << ",lambda\n";
        }
        out << body_iou.str() << body_loss.str() << body_lambda.str();
        write_text_file_atomic((fs::path(common.output_dir) / "series.csv").string(), out.str());
        did_anything = true;
    }

    if (!opts.labels_path.empty()) {
        if (opts.width <= 0 || opts.height <= 0)
            throw Error(ErrorCode::ParseError, "--labels needs --width and --height");
        std::vector<RecordInstance> instances;
        for (const LabelInstance& label : read_label_file(opts.labels_path)) {
            RecordInstance inst;
            inst.class_id = label.class_id;
            inst.polygon = denormalize_polygon(label.polygon, opts.width, opts.height);
            instances.push_back(std::move(inst));
        }
        write_text_file_atomic((fs::path(common.output_dir) / "overlay.svg").string(),
                               svg_overlay(opts.width, opts.height, instances));
        did_anything = true;
    }

    if (!opts.summaries.empty()) {
        std::ostringstream out;
        out << "x,y,series\n";
        for (const std::string& path : opts.summaries) {
            json j;
            try {
                j = json::parse(read_text_file(path));
            } catch (const json::exception& e) {
                throw Error(ErrorCode::ParseError, path + ": " + e.what());
            }
            const std::string series = j.value("method", path);
            const json images = j.value("images", json::object());
            for (const auto& [file, entry] : images.items()) {
                const json insts = entry.value("instances", json::array());
                for (const auto& inst : insts)
                    out << inst.value("instance", "?") << ',' << inst.value("iou", 0.0) << ','
                        << series << '\n';
            }
        }
        write_text_file_atomic((fs::path(common.output_dir) / "comparison.csv").string(),
                               out.str());
        did_anything = true;
    }

    if (!did_anything)
        throw Error(ErrorCode::ParseError,
                    "plotdata needs --trace, --labels, or --summaries input");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Polygon-contour instance segmentation toolkit"};
    app.require_subcommand(1);

    CommonOptions common;
    ConvertOptions convert_opts;
    LossesOptions losses_opts;
    FitOptions fit_opts;
    EvalOptions eval_opts;
    PlotOptions plot_opts;

    CLI::App* convert = app.add_subcommand("convert", "Masks or annotations to label files");
    convert->add_option("inputs", convert_opts.inputs, "PNG id-masks and/or annotation JSONs")
        ->required();
    convert->add_option("--n", convert_opts.n_spec, "Vertex count or \"auto\"");
    convert->add_option("--method", convert_opts.method, "Sampling method")
        ->check(CLI::IsMember({"fixed", "adaptive"}));
    convert->add_option("--delta", convert_opts.delta, "IoU gain cutoff for --n auto");
    convert->add_option("--resolution", convert_opts.resolution, "Rasterization resolution");
    add_common(convert, common);

    CLI::App* losses = app.add_subcommand("losses", "Loss value and gradient between label files");
    losses->add_option("--pred", losses_opts.pred_path, "Predicted label file")->required();
    losses->add_option("--gt", losses_opts.gt_path, "Ground-truth label file")->required();
    losses->add_option("--kind", losses_opts.kind, "Loss kind")
        ->check(CLI::IsMember({"logcosh", "polar", "cartesian", "combined"}));
    losses->add_option("--epoch", losses_opts.epoch, "Epoch for the lambda schedule");
    losses->add_option("--lambda", losses_opts.lambda, "Fixed lambda override");
    add_common(losses, common);

    CLI::App* fit = app.add_subcommand("fit", "Optimize a perturbed polygon back onto gt");
    fit->add_option("--gt", fit_opts.gt_path, "Ground-truth label file")->required();
    fit->add_option("--index", fit_opts.index, "Instance line to fit");
    fit->add_option("--perturb", fit_opts.perturb, "Initialization perturbation")
        ->check(CLI::IsMember({"none", "translate", "scale", "shift-index", "jitter"}));
    fit->add_option("--amount", fit_opts.amount, "Perturbation magnitude");
    fit->add_option("--loss", fit_opts.loss, "Loss variant")
        ->check(CLI::IsMember({"regression", "polar", "cartesian"}));
    fit->add_option("--lambda", fit_opts.lambda, "Fixed lambda instead of the schedule");
    fit->add_option("--epochs", fit_opts.epochs, "Training epochs");
    fit->add_option("--lr", fit_opts.learning_rate, "Step size");
    fit->add_option("--optimizer", fit_opts.optimizer, "Optimizer")
        ->check(CLI::IsMember({"adam", "gd"}));
    add_common(fit, common);

    CLI::App* eval = app.add_subcommand("eval", "AP evaluation of detections against gts");
    eval->add_option("--dets", eval_opts.dets_path, "Detections JSON")->required();
    eval->add_option("--gts", eval_opts.gts_path, "Ground-truth JSON")->required();
    eval->add_option("--thresholds", eval_opts.thresholds, "IoU thresholds");
    eval->add_option("--resolution", eval_opts.resolution, "Rasterization resolution");
    add_common(eval, common);

    CLI::App* plot = app.add_subcommand("plotdata", "Plot-ready series and SVG overlays");
    plot->add_option("--trace", plot_opts.trace_path, "Fit trace CSV");
    plot->add_option("--labels", plot_opts.labels_path, "Label file for an SVG overlay");
    plot->add_option("--width", plot_opts.width, "Image width for the overlay");
    plot->add_option("--height", plot_opts.height, "Image height for the overlay");
    plot->add_option("--summaries", plot_opts.summaries, "convert summaries to merge");
    add_common(plot, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (convert->parsed()) return cmd_convert(convert_opts, common);
        if (losses->parsed()) return cmd_losses(losses_opts, common);
        if (fit->parsed()) return cmd_fit(fit_opts, common);
        if (eval->parsed()) return cmd_eval(eval_opts, common);
        if (plot->parsed()) return cmd_plotdata(plot_opts, common);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << std::endl;
        return 2;
    }
    return 0;
}
