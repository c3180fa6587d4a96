#include "polyseg/contour.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace polyseg {

namespace {

// Moore neighborhood in clockwise order for y-down image coordinates,
// starting north: N, NE, E, SE, S, SW, W, NW.
constexpr int kDx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr int kDy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

int direction_of(int from_x, int from_y, int to_x, int to_y) {
    for (int d = 0; d < 8; ++d)
        if (from_x + kDx[d] == to_x && from_y + kDy[d] == to_y) return d;
    return -1;
}

// Moore-neighbor boundary following with Jacob's stopping criterion,
// generalized to a repeated (pixel, backtrack) state: the walk is
// deterministic, so the first repeated state closes the boundary cycle.
// Thin one-pixel runs re-enter the start pixel with a different backtrack
// than the scan entry, which the classic criterion alone would miss.
std::vector<std::pair<int, int>> trace_boundary(const InstanceMask& mask, std::int32_t id,
                                                int sx, int sy) {
    auto fg = [&](int x, int y) { return mask.at(x, y) == id; };

    std::vector<std::pair<int, int>> boundary;
    boundary.emplace_back(sx, sy);

    // First foreground pixel in row-major scan order: its west neighbor is
    // not part of this instance.
    int cx = sx, cy = sy;
    int back = 6;  // backtrack sits west of the current pixel

    std::map<std::int64_t, std::size_t> seen;  // state -> index of its pixel in boundary
    auto state_key = [&](int x, int y, int b) {
        return (static_cast<std::int64_t>(y) * mask.width + x) * 8 + b;
    };
    seen[state_key(sx, sy, back)] = 0;

    const std::size_t max_steps = 8 * mask.pixels.size() + 16;
    for (std::size_t step = 0; step < max_steps; ++step) {
        int d = (back + 1) % 8;
        int found = -1;
        for (int probe = 0; probe < 8; ++probe) {
            const int nx = cx + kDx[d];
            const int ny = cy + kDy[d];
            if (fg(nx, ny)) {
                found = d;
                break;
            }
            d = (d + 1) % 8;
        }
        if (found < 0) return boundary;  // isolated pixel

        const int nx = cx + kDx[found];
        const int ny = cy + kDy[found];
        // Backtrack for the next pixel: the last background probe, seen from
        // the new pixel.
        const int prev_d = (found + 7) % 8;
        const int nback = direction_of(nx, ny, cx + kDx[prev_d], cy + kDy[prev_d]);
        const int next_back = nback >= 0 ? nback : 6;

        const auto [it, inserted] = seen.emplace(state_key(nx, ny, next_back), boundary.size());
        if (!inserted) {
            // Cycle found: drop any pre-cycle prefix of the walk.
            boundary.erase(boundary.begin(), boundary.begin() + static_cast<long>(it->second));
            break;
        }

        boundary.emplace_back(nx, ny);
        cx = nx;
        cy = ny;
        back = next_back;
    }
    return boundary;
}

double perp_signed(const Point2& a, const Point2& b, const Point2& p, double chord_len) {
    return ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)) / chord_len;
}

double point_segment_distance(const Point2& a, const Point2& b, const Point2& p) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    if (len2 <= 0.0) return std::hypot(p.x - a.x, p.y - a.y);
    double t = ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

// Open-curve RDP over index[first..last], marking kept chain indices.
void rdp_open(const std::vector<Point2>& points, const std::vector<std::size_t>& index,
              std::size_t first, std::size_t last, double epsilon, std::vector<char>& keep) {
    if (last <= first + 1) return;
    double best = -1.0;
    std::size_t best_i = first;
    const Point2& a = points[index[first]];
    const Point2& b = points[index[last]];
    for (std::size_t i = first + 1; i < last; ++i) {
        const double d = point_segment_distance(a, b, points[index[i]]);
        if (d > best) {
            best = d;
            best_i = i;
        }
    }
    if (best > epsilon) {
        keep[index[best_i]] = 1;
        rdp_open(points, index, first, best_i, epsilon, keep);
        rdp_open(points, index, best_i, last, epsilon, keep);
    }
}

// Diameter pair of the point set via convex hull + rotating calipers;
// returns indices into `points`.
std::pair<std::size_t, std::size_t> farthest_pair(const std::vector<Point2>& points) {
    const std::size_t n = points.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].x != points[b].x) return points[a].x < points[b].x;
        return points[a].y < points[b].y;
    });
    auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
        return (points[a].x - points[o].x) * (points[b].y - points[o].y) -
               (points[a].y - points[o].y) * (points[b].x - points[o].x);
    };
    std::vector<std::size_t> hull;
    for (std::size_t pass = 0; pass < 2; ++pass) {
        const std::size_t base = hull.size();
        for (std::size_t ii = 0; ii < n; ++ii) {
            const std::size_t i = order[pass == 0 ? ii : n - 1 - ii];
            while (hull.size() >= base + 2 &&
                   cross(hull[hull.size() - 2], hull[hull.size() - 1], i) <= 0)
                hull.pop_back();
            hull.push_back(i);
        }
        hull.pop_back();
    }
    if (hull.empty()) return {0, 0};
    if (hull.size() == 1) return {hull[0], hull[0]};
    auto dist2 = [&](std::size_t a, std::size_t b) {
        const double dx = points[a].x - points[b].x;
        const double dy = points[a].y - points[b].y;
        return dx * dx + dy * dy;
    };
    const std::size_t h = hull.size();
    double best = -1.0;
    std::pair<std::size_t, std::size_t> best_pair{hull[0], hull[0]};
    std::size_t j = 1;
    for (std::size_t i = 0; i < h; ++i) {
        for (;;) {
            const double cur = dist2(hull[i], hull[j]);
            const double nxt = dist2(hull[i], hull[(j + 1) % h]);
            if (nxt > cur)
                j = (j + 1) % h;
            else
                break;
        }
        if (dist2(hull[i], hull[j]) > best) {
            best = dist2(hull[i], hull[j]);
            best_pair = {hull[i], hull[j]};
        }
    }
    if (best_pair.first > best_pair.second) std::swap(best_pair.first, best_pair.second);
    return best_pair;
}

std::vector<std::size_t> rdp_closed_indices(const std::vector<Point2>& points, double epsilon) {
    const std::size_t n = points.size();
    std::vector<char> keep(n, 0);
    const auto [i0, i1] = farthest_pair(points);
    keep[i0] = 1;
    keep[i1] = 1;
    if (i0 != i1) {
        std::vector<std::size_t> half;
        for (std::size_t i = i0; i <= i1; ++i) half.push_back(i);
        rdp_open(points, half, 0, half.size() - 1, epsilon, keep);
        half.clear();
        for (std::size_t i = i1; i != i0 + n; ++i) half.push_back(i % n);
        half.push_back(i0);
        rdp_open(points, half, 0, half.size() - 1, epsilon, keep);
    }
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < n; ++i)
        if (keep[i]) kept.push_back(i);
    return kept;
}

}  // namespace

ContourExtraction extract_contours(const InstanceMask& mask) {
    ContourExtraction out;
    if (mask.width <= 0 || mask.height <= 0) return out;

    std::map<std::int32_t, std::pair<int, int>> starts;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            const std::int32_t id = mask.at(x, y);
            if (id > 0 && !starts.count(id)) starts[id] = {x, y};
        }

    for (const auto& [id, start] : starts) {
        const auto pixels = trace_boundary(mask, id, start.first, start.second);
        std::set<std::pair<int, int>> distinct(pixels.begin(), pixels.end());
        if (distinct.size() < 3) {
            out.skipped.push_back(id);
            continue;
        }
        ContourChain chain;
        chain.points.reserve(pixels.size());
        for (const auto& [x, y] : pixels) chain.points.push_back({x + 0.5, y + 0.5});
        double arc = 0.0;
        for (std::size_t i = 0; i < chain.points.size(); ++i) {
            const Point2& a = chain.points[i];
            const Point2& b = chain.points[(i + 1) % chain.points.size()];
            arc += std::hypot(b.x - a.x, b.y - a.y);
        }
        chain.arc_length = arc;
        out.chains.emplace(id, std::move(chain));
    }
    return out;
}

std::vector<Point2> dominant_points(const ContourChain& chain) {
    const auto& pts = chain.points;
    const std::size_t n = pts.size();
    if (n < 3) throw Error(ErrorCode::TooFewPoints, "chain has fewer than 3 points");

    const std::size_t k_max = std::max<std::size_t>(1, (n - 1) / 2);
    std::vector<std::size_t> ros(n, 1);
    std::vector<double> final_d(n, 0.0);
    std::vector<double> cosine(n, 0.0);

    auto at = [&](std::size_t i, long off) {
        const long m = static_cast<long>(n);
        long j = (static_cast<long>(i) + off) % m;
        if (j < 0) j += m;
        return pts[static_cast<std::size_t>(j)];
    };

    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = 1;
        Point2 a = at(i, -1), b = at(i, 1);
        double l = std::hypot(b.x - a.x, b.y - a.y);
        double d = l > 0 ? perp_signed(a, b, pts[i], l) : 0.0;
        while (k + 1 <= k_max) {
            const Point2 a2 = at(i, -static_cast<long>(k) - 1);
            const Point2 b2 = at(i, static_cast<long>(k) + 1);
            const double l2 = std::hypot(b2.x - a2.x, b2.y - a2.y);
            if (l2 < l || l2 <= 0.0) break;
            const double d2 = perp_signed(a2, b2, pts[i], l2);
            if (std::abs(d) > 1e-12) {
                const double r = d / l, r2 = d2 / l2;
                if (d > 0 && r2 > r) break;
                if (d < 0 && r2 < r) break;
            }
            ++k;
            l = l2;
            d = d2;
        }
        ros[i] = k;
        final_d[i] = std::abs(d);
        const Point2 fwd = at(i, static_cast<long>(k));
        const Point2 bwd = at(i, -static_cast<long>(k));
        const double ax = fwd.x - pts[i].x, ay = fwd.y - pts[i].y;
        const double bx = bwd.x - pts[i].x, by = bwd.y - pts[i].y;
        const double na = std::hypot(ax, ay), nb = std::hypot(bx, by);
        cosine[i] = (na > 0 && nb > 0) ? (ax * bx + ay * by) / (na * nb) : -1.0;
    }

    // Nonmaxima suppression over each point's half region of support.
    std::vector<char> keep(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t w = std::max<std::size_t>(1, ros[i] / 2);
        for (std::size_t off = 1; off <= w; ++off) {
            if (cosine[(i + off) % n] > cosine[i] || cosine[(i + n - off) % n] > cosine[i]) {
                keep[i] = 0;
                break;
            }
        }
    }
    // Collinear points carry no curvature information.
    for (std::size_t i = 0; i < n; ++i)
        if (final_d[i] < 1e-9) keep[i] = 0;

    // Collapse runs of adjacent survivors to their strongest member.
    std::vector<std::size_t> survivors;
    for (std::size_t i = 0; i < n; ++i)
        if (keep[i]) survivors.push_back(i);
    std::set<std::size_t> selected;
    if (!survivors.empty()) {
        std::vector<std::vector<std::size_t>> groups;
        groups.push_back({survivors[0]});
        for (std::size_t s = 1; s < survivors.size(); ++s) {
            if (survivors[s] == survivors[s - 1] + 1)
                groups.back().push_back(survivors[s]);
            else
                groups.push_back({survivors[s]});
        }
        if (groups.size() > 1 && groups.front().front() == 0 && groups.back().back() == n - 1) {
            for (std::size_t idx : groups.back()) groups.front().push_back(idx);
            groups.pop_back();
        }
        for (const auto& g : groups) {
            std::size_t best = g[0];
            for (std::size_t idx : g)
                if (cosine[idx] > cosine[best] ||
                    (cosine[idx] == cosine[best] && final_d[idx] > final_d[best]))
                    best = idx;
            selected.insert(best);
        }
    }

    // Axis-extreme points are always retained; lexicographic tie-breaks keep
    // the selection on true endpoints for degenerate chains.
    auto xy_less = [&](std::size_t a, std::size_t b) {
        if (pts[a].x != pts[b].x) return pts[a].x < pts[b].x;
        return pts[a].y < pts[b].y;
    };
    auto yx_less = [&](std::size_t a, std::size_t b) {
        if (pts[a].y != pts[b].y) return pts[a].y < pts[b].y;
        return pts[a].x < pts[b].x;
    };
    std::size_t exi[4] = {0, 0, 0, 0};
    for (std::size_t i = 1; i < n; ++i) {
        if (xy_less(i, exi[0])) exi[0] = i;
        if (xy_less(exi[1], i)) exi[1] = i;
        if (yx_less(i, exi[2])) exi[2] = i;
        if (yx_less(exi[3], i)) exi[3] = i;
    }
    for (std::size_t e : exi) selected.insert(e);

    std::vector<Point2> out;
    out.reserve(selected.size());
    for (std::size_t i : selected) out.push_back(pts[i]);
    return out;
}

Polygon fixed_step_sample(const std::vector<Point2>& points, std::size_t n) {
    if (n < 3) throw std::invalid_argument("fixed_step_sample needs n >= 3");
    if (points.size() < n)
        throw Error(ErrorCode::TooFewPoints, "fewer points than requested vertices");
    const double step = static_cast<double>(points.size()) / static_cast<double>(n);
    Polygon out;
    out.vertices.reserve(n);
    for (std::size_t k = 0; k < n; ++k)
        out.vertices.push_back(points[static_cast<std::size_t>(std::floor(k * step))]);
    return out;
}

std::vector<Point2> rdp_simplify(const std::vector<Point2>& points, double epsilon) {
    if (points.size() < 2) throw Error(ErrorCode::TooFewPoints, "rdp_simplify needs >= 2 points");
    if (points.size() == 2) return points;
    std::vector<Point2> out;
    for (std::size_t i : rdp_closed_indices(points, epsilon)) out.push_back(points[i]);
    return out;
}

Polygon adaptive_simplify(const ContourChain& chain, std::size_t n) {
    if (n < 3) throw std::invalid_argument("adaptive_simplify needs n >= 3");
    const auto& pts = chain.points;
    if (pts.size() < n) throw Error(ErrorCode::TooFewPoints, "chain shorter than n");
    if (pts.size() == n) return Polygon(pts);

    const double arc = chain.arc_length;
    std::vector<std::size_t> under =  // smallest-epsilon result with <= n vertices
        rdp_closed_indices(pts, 0.5 * arc);
    double gamma_lo = 0.0, gamma_hi = 0.5;

    for (int iter = 0; iter < 60 && gamma_hi - gamma_lo > 1e-7; ++iter) {
        const double gamma = 0.5 * (gamma_lo + gamma_hi);
        auto kept = rdp_closed_indices(pts, gamma * arc);
        if (kept.size() == n) {
            Polygon out;
            for (std::size_t i : kept) out.vertices.push_back(pts[i]);
            return out;
        }
        if (kept.size() > n) {
            gamma_lo = gamma;
        } else {
            gamma_hi = gamma;
            under = std::move(kept);
        }
    }

    // Repair: insert chain points at the arc-length midpoints of the longest
    // arcs until exactly n vertices remain.
    const std::size_t total = pts.size();
    std::vector<double> cum(total + 1, 0.0);
    for (std::size_t i = 0; i < total; ++i) {
        const Point2& a = pts[i];
        const Point2& b = pts[(i + 1) % total];
        cum[i + 1] = cum[i] + std::hypot(b.x - a.x, b.y - a.y);
    }
    auto arc_len = [&](std::size_t from, std::size_t to) {
        return from <= to ? cum[to] - cum[from] : cum[total] - cum[from] + cum[to];
    };

    std::set<std::size_t> kept(under.begin(), under.end());
    while (kept.size() < n) {
        double best_len = -1.0;
        std::size_t best_from = 0, best_to = 0;
        for (auto it = kept.begin(); it != kept.end(); ++it) {
            auto next = std::next(it);
            const std::size_t from = *it;
            const std::size_t to = next != kept.end() ? *next : *kept.begin();
            const std::size_t steps = (to + total - from) % total;
            if (steps < 2) continue;  // no interior chain point to insert
            const double len = arc_len(from, to);
            if (len > best_len) {
                best_len = len;
                best_from = from;
                best_to = to;
            }
        }
        if (best_len < 0.0) break;  // cannot happen while kept.size() < total
        const double target = best_len / 2.0;
        const std::size_t steps = (best_to + total - best_from) % total;
        std::size_t best_idx = (best_from + 1) % total;
        double best_err = std::abs(arc_len(best_from, best_idx) - target);
        for (std::size_t s = 2; s < steps; ++s) {
            const std::size_t idx = (best_from + s) % total;
            const double err = std::abs(arc_len(best_from, idx) - target);
            if (err < best_err) {
                best_err = err;
                best_idx = idx;
            }
        }
        kept.insert(best_idx);
    }

    Polygon out;
    for (std::size_t i : kept) out.vertices.push_back(pts[i]);
    return out;
}

double polygon_mask_iou(const Polygon& poly, const InstanceMask& mask, std::int32_t instance_id,
                        int resolution) {
    if (poly.size() < 3) throw Error(ErrorCode::DegeneratePolygon, "polygon needs >= 3 vertices");
    if (resolution < 1) throw std::invalid_argument("resolution must be >= 1");

    Bounds bb = bounds(poly);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y) == instance_id) {
                bb.min_x = std::min(bb.min_x, static_cast<double>(x));
                bb.min_y = std::min(bb.min_y, static_cast<double>(y));
                bb.max_x = std::max(bb.max_x, static_cast<double>(x + 1));
                bb.max_y = std::max(bb.max_y, static_cast<double>(y + 1));
            }

    const int x0 = static_cast<int>(std::floor(bb.min_x)) - 1;
    const int x1 = static_cast<int>(std::ceil(bb.max_x)) + 1;
    const int y0 = static_cast<int>(std::floor(bb.min_y)) - 1;
    const int y1 = static_cast<int>(std::ceil(bb.max_y)) + 1;
    // Sampling budget: stride > 1 only when the region outgrows `resolution`.
    const int longer = std::max(x1 - x0, y1 - y0);
    const int stride = std::max(1, (longer + resolution - 1) / resolution);

    const std::size_t nv = poly.size();
    auto inside_poly = [&](double px, double py) {
        int crossings = 0;
        for (std::size_t i = 0; i < nv; ++i) {
            const Point2& a = poly.vertices[i];
            const Point2& b = poly.vertices[(i + 1) % nv];
            if (point_segment_distance(a, b, {px, py}) <= 1e-9) return true;  // boundary counts
            if ((a.y <= py && py < b.y) || (b.y <= py && py < a.y)) {
                const double xc = a.x + (py - a.y) * (b.x - a.x) / (b.y - a.y);
                if (px < xc) ++crossings;
            }
        }
        return (crossings & 1) != 0;
    };

    long inter = 0, uni = 0;
    for (int y = y0; y <= y1; y += stride)
        for (int x = x0; x <= x1; x += stride) {
            const bool in_mask = instance_id != 0 && mask.at(x, y) == instance_id;
            const bool in_poly = inside_poly(x + 0.5, y + 0.5);
            if (in_mask && in_poly) ++inter;
            if (in_mask || in_poly) ++uni;
        }
    if (uni == 0) throw Error(ErrorCode::EmptyUnion, "mask instance and polygon are both empty");
    return static_cast<double>(inter) / static_cast<double>(uni);
}

int optimal_vertex_count(const ContourChain& chain, const InstanceMask& mask,
                         std::int32_t instance_id, double delta, int resolution) {
    const std::size_t chain_size = chain.size();
    if (chain_size <= 4) return static_cast<int>(chain_size);

    double prev = polygon_mask_iou(adaptive_simplify(chain, 4), mask, instance_id, resolution);
    for (std::size_t n = 6;; n += 2) {
        if (n > chain_size) return static_cast<int>(chain_size);
        const double cur =
            polygon_mask_iou(adaptive_simplify(chain, n), mask, instance_id, resolution);
        if (cur - prev < delta) return static_cast<int>(n);
        prev = cur;
    }
}

}  // namespace polyseg
