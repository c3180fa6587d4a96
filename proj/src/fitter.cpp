#include "polyseg/fitter.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

namespace polyseg {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

Polygon from_coords(const std::vector<double>& x) {
    Polygon p;
    p.vertices.reserve(x.size() / 2);
    for (std::size_t i = 0; i + 1 < x.size(); i += 2) p.vertices.push_back({x[i], x[i + 1]});
    return p;
}

// splitmix64, for perturbation jitter
std::uint64_t mix(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double uniform01(std::uint64_t& state) {
    return static_cast<double>(mix(state) >> 11) * 0x1.0p-53;
}

double gaussian(std::uint64_t& state, double sigma) {
    const double u1 = std::max(uniform01(state), 1e-12);
    const double u2 = uniform01(state);
    return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

FitTrace fit_polygon(const Polygon& init, const Polygon& gt, const FitConfig& cfg) {
    if (init.size() != gt.size())
        throw Error(ErrorCode::ShapeMismatch, "init and gt vertex counts differ");
    if (cfg.epochs < 1 || cfg.learning_rate <= 0.0)
        throw std::invalid_argument("epochs must be >= 1 and learning_rate > 0");

    const std::size_t dim = 2 * init.size();
    std::vector<double> x(dim);
    for (std::size_t i = 0; i < init.size(); ++i) {
        x[2 * i] = init.vertices[i].x;
        x[2 * i + 1] = init.vertices[i].y;
    }
    std::vector<double> m(dim, 0.0), v(dim, 0.0);

    FitTrace trace;
    trace.epochs.reserve(cfg.epochs);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lambda =
            cfg.use_schedule ? lambda_schedule(epoch, cfg.loss) : cfg.fixed_lambda;
        const Polygon current = from_coords(x);

        FitEpoch record;
        record.lambda = lambda;
        record.self_intersecting = is_self_intersecting(current);
        try {
            record.iou = rasterized_iou_unchecked(current, gt, cfg.iou_resolution);
        } catch (const Error&) {
            record.iou = 0.0;  // fully degenerate intermediate polygon
        }

        LossReport report;
        try {
            report = combined_localization_loss(current, gt, lambda, cfg.loss);
        } catch (const Error& e) {
            trace.aborted = true;
            trace.error = e.what();
            break;
        }
        record.loss = report.value;
        trace.epochs.push_back(record);
        if (report.iou_skipped) ++trace.iou_skipped_count;

        if (cfg.optimizer == OptimizerKind::PlainGradient) {
            for (std::size_t i = 0; i < dim; ++i) x[i] -= cfg.learning_rate * report.gradient[i];
        } else {
            const double t = static_cast<double>(epoch);
            for (std::size_t i = 0; i < dim; ++i) {
                m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * report.gradient[i];
                v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * report.gradient[i] * report.gradient[i];
                const double m_hat = m[i] / (1.0 - std::pow(kAdamBeta1, t));
                const double v_hat = v[i] / (1.0 - std::pow(kAdamBeta2, t));
                x[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + kAdamEps);
            }
        }
    }
    trace.final_polygon = from_coords(x);
    return trace;
}

void write_trace_csv(const FitTrace& trace, std::ostream& out) {
    out << "epoch,lambda,loss,iou,self_intersecting\n";
    for (std::size_t i = 0; i < trace.epochs.size(); ++i) {
        const FitEpoch& e = trace.epochs[i];
        out << (i + 1) << ',' << e.lambda << ',' << e.loss << ',' << e.iou << ','
            << (e.self_intersecting ? 1 : 0) << '\n';
    }
}

Polygon apply_perturbation(const Polygon& gt, const Perturbation& perturbation,
                           std::uint64_t seed) {
    std::uint64_t state = seed ? seed : 0x9e3779b97f4a7c15ULL;
    Polygon out = gt;
    switch (perturbation.kind) {
        case Perturbation::Kind::None:
            break;
        case Perturbation::Kind::Translate:
            for (auto& p : out.vertices) {
                p.x += perturbation.amount;
                p.y += perturbation.amount;
            }
            break;
        case Perturbation::Kind::Scale: {
            const Point2 c = centroid(gt);
            for (auto& p : out.vertices) {
                p.x = c.x + (p.x - c.x) * perturbation.amount;
                p.y = c.y + (p.y - c.y) * perturbation.amount;
            }
            break;
        }
        case Perturbation::Kind::IndexShift: {
            const std::size_t n = gt.size();
            const std::size_t k = static_cast<std::size_t>(perturbation.amount) % n;
            for (std::size_t i = 0; i < n; ++i) out.vertices[i] = gt.vertices[(i + k) % n];
            break;
        }
        case Perturbation::Kind::Jitter:
            for (auto& p : out.vertices) {
                p.x += gaussian(state, perturbation.amount);
                p.y += gaussian(state, perturbation.amount);
            }
            break;
    }
    return out;
}

std::vector<ComparisonRow> compare_losses(const std::vector<Polygon>& gt_set,
                                          const Perturbation& perturbation,
                                          const std::vector<LossVariant>& variants) {
    std::vector<ComparisonRow> rows;
    if (gt_set.empty()) return rows;
    for (const LossVariant& variant : variants) {
        ComparisonRow row;
        row.name = variant.name;
        for (std::size_t i = 0; i < gt_set.size(); ++i) {
            const Polygon& gt = gt_set[i];
            const Polygon init =
                apply_perturbation(gt, perturbation, variant.config.seed + i + 1);
            const FitTrace trace = fit_polygon(init, gt, variant.config);

            double final_iou = 0.0;
            try {
                final_iou = rasterized_iou_unchecked(trace.final_polygon, gt,
                                                     variant.config.iou_resolution);
            } catch (const Error&) {
            }
            int convergence = variant.config.epochs;
            for (std::size_t e = 0; e < trace.epochs.size(); ++e) {
                if (trace.epochs[e].iou >= 0.95) {
                    convergence = static_cast<int>(e) + 1;
                    break;
                }
            }
            row.mean_final_iou += final_iou;
            row.mean_convergence_epoch += convergence;
            ++row.fits;
        }
        if (row.fits > 0) {
            row.mean_final_iou /= row.fits;
            row.mean_convergence_epoch /= row.fits;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace polyseg
