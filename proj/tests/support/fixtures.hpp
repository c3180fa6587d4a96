#pragma once

// Deterministic fixture generators shared by the unit and acceptance suites.
// Randomness goes through a small splitmix64-based generator so results do
// not depend on the standard library's distribution implementations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "polyseg/contour.hpp"
#include "polyseg/geometry.hpp"

namespace fixtures {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    double normal(double sigma) {
        const double u1 = std::max(uniform(), 1e-12);
        const double u2 = uniform();
        return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

// Star-convex polygon about `center`: sorted angles with jitter, radii in
// [r_lo, r_hi]. Always simple. Angular gaps are kept >= min_gap_deg so small
// coordinate perturbations cannot reorder the theta sort.
inline polyseg::Polygon star_polygon(Rng& rng, std::size_t n, polyseg::Point2 center,
                                     double r_lo, double r_hi, double min_gap_deg = 4.0) {
    std::vector<double> angles(n);
    const double base = 360.0 / static_cast<double>(n);
    const double jitter = std::max(0.0, (base - min_gap_deg) / 2.0);
    const double phase = rng.uniform(0.0, 360.0);
    for (std::size_t i = 0; i < n; ++i)
        angles[i] = phase + base * static_cast<double>(i) + rng.uniform(-jitter, jitter);
    polyseg::Polygon p;
    p.vertices.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double rad = angles[i] * std::numbers::pi / 180.0;
        const double r = rng.uniform(r_lo, r_hi);
        p.vertices.push_back({center.x + r * std::cos(rad), center.y + r * std::sin(rad)});
    }
    return p;
}

// pred/gt pair sharing vertex angles with clearly separated radii, so the
// min/max branch assignment cannot flip under finite-difference probing.
struct RadialPair {
    polyseg::Polygon pred, gt;
    polyseg::Point2 center;
};

inline RadialPair radial_pair(Rng& rng, std::size_t n) {
    RadialPair out;
    out.center = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    const double base = 360.0 / static_cast<double>(n);
    const double phase = rng.uniform(0.0, 360.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double theta =
            (phase + base * i + rng.uniform(-base * 0.25, base * 0.25)) * std::numbers::pi / 180.0;
        const double rg = rng.uniform(0.8, 1.2);
        const double delta = rng.uniform(0.18, 0.4) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        const double rp = rg + delta;
        out.gt.vertices.push_back(
            {out.center.x + rg * std::cos(theta), out.center.y + rg * std::sin(theta)});
        out.pred.vertices.push_back(
            {out.center.x + rp * std::cos(theta), out.center.y + rp * std::sin(theta)});
    }
    return out;
}

inline polyseg::Polygon regular_polygon(std::size_t n, polyseg::Point2 center, double radius,
                                        double phase_deg = 0.0) {
    polyseg::Polygon p;
    for (std::size_t i = 0; i < n; ++i) {
        const double rad = (phase_deg + 360.0 * static_cast<double>(i) / static_cast<double>(n)) *
                           std::numbers::pi / 180.0;
        p.vertices.push_back({center.x + radius * std::cos(rad), center.y + radius * std::sin(rad)});
    }
    return p;
}

inline polyseg::Polygon translate(polyseg::Polygon p, double dx, double dy) {
    for (auto& v : p.vertices) {
        v.x += dx;
        v.y += dy;
    }
    return p;
}

inline polyseg::Polygon scale_about(polyseg::Polygon p, double s, polyseg::Point2 c) {
    for (auto& v : p.vertices) {
        v.x = c.x + (v.x - c.x) * s;
        v.y = c.y + (v.y - c.y) * s;
    }
    return p;
}

inline polyseg::Polygon shift_indices(const polyseg::Polygon& p, std::size_t k) {
    polyseg::Polygon out;
    const std::size_t n = p.size();
    out.vertices.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.vertices.push_back(p.vertices[(i + k) % n]);
    return out;
}

// ---- mask fixtures -------------------------------------------------------

inline polyseg::InstanceMask blank_mask(int w, int h) {
    polyseg::InstanceMask m;
    m.width = w;
    m.height = h;
    m.pixels.assign(static_cast<std::size_t>(w) * h, 0);
    return m;
}

inline void fill_rect(polyseg::InstanceMask& m, int x0, int y0, int x1, int y1, std::int32_t id) {
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) m.pixels[static_cast<std::size_t>(y) * m.width + x] = id;
}

inline void fill_disk(polyseg::InstanceMask& m, double cx, double cy, double r, std::int32_t id) {
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            const double dx = x + 0.5 - cx;
            const double dy = y + 0.5 - cy;
            if (dx * dx + dy * dy <= r * r)
                m.pixels[static_cast<std::size_t>(y) * m.width + x] = id;
        }
}

// Radial blob r(theta) = r0 * (1 + sum_k a_k * sin(k*theta + phi_k)); star
// shaped, mixes smooth arcs with straight-ish stretches when amplitudes vary.
inline void fill_blob(polyseg::InstanceMask& m, double cx, double cy, double r0, Rng& rng,
                      std::int32_t id) {
    double a[3], phi[3];
    for (int k = 0; k < 3; ++k) {
        a[k] = rng.uniform(0.03, 0.18) / (k + 1);
        phi[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            const double dx = x + 0.5 - cx;
            const double dy = y + 0.5 - cy;
            const double t = std::atan2(dy, dx);
            double r = 1.0;
            for (int k = 0; k < 3; ++k) r += a[k] * std::sin((k + 1) * t + phi[k]);
            r *= r0;
            if (dx * dx + dy * dy <= r * r)
                m.pixels[static_cast<std::size_t>(y) * m.width + x] = id;
        }
}

// Flat underside, curved top: half-ellipse "hood" over a rectangular body.
inline void fill_car(polyseg::InstanceMask& m, int x0, int y_base, int len, int body_h,
                     int hood_h, std::int32_t id) {
    for (int x = 0; x < len; ++x) {
        const double u = (x + 0.5) / len * 2.0 - 1.0;  // [-1, 1]
        const int top = static_cast<int>(std::round(hood_h * std::sqrt(std::max(0.0, 1.0 - u * u))));
        for (int y = y_base - body_h - top; y <= y_base; ++y) {
            if (y >= 0 && y < m.height && x0 + x >= 0 && x0 + x < m.width)
                m.pixels[static_cast<std::size_t>(y) * m.width + (x0 + x)] = id;
        }
    }
}

// Rectangle with one semicircular end: straight and curved boundary mixed.
inline void fill_capsule(polyseg::InstanceMask& m, int x0, int y0, int len, int radius,
                         std::int32_t id) {
    const double cy = y0 + radius;
    for (int y = y0; y <= y0 + 2 * radius; ++y)
        for (int x = x0; x < x0 + len; ++x)
            if (y >= 0 && y < m.height && x >= 0 && x < m.width)
                m.pixels[static_cast<std::size_t>(y) * m.width + x] = id;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            const double dx = x + 0.5 - (x0 + len);
            const double dy = y + 0.5 - cy;
            if (dx >= 0 && dx * dx + dy * dy <= double(radius) * radius)
                m.pixels[static_cast<std::size_t>(y) * m.width + x] = id;
        }
}

// The 20-shape mixed straight/curved set used by the simplification suite.
inline std::vector<polyseg::InstanceMask> mixed_shape_set(std::uint64_t seed = 11) {
    std::vector<polyseg::InstanceMask> shapes;
    Rng rng(seed);
    for (int i = 0; i < 7; ++i) {
        auto m = blank_mask(96, 96);
        fill_capsule(m, 8, 18 + i, 40 + 2 * i, 14 + i % 5, 1);
        shapes.push_back(m);
    }
    for (int i = 0; i < 7; ++i) {
        auto m = blank_mask(96, 96);
        fill_car(m, 6, 72, 70 + 2 * i, 12, 18 + i, 1);
        shapes.push_back(m);
    }
    for (int i = 0; i < 6; ++i) {
        auto m = blank_mask(96, 96);
        fill_blob(m, 48, 48, 26 + i, rng, 1);
        shapes.push_back(m);
    }
    return shapes;
}

}  // namespace fixtures
