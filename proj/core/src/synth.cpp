#include "dalbt/synth.hpp"

#include "dalbt/error.hpp"
#include "dalbt/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace dalbt {

namespace {

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

} // namespace

std::vector<std::vector<double>> default_blob_means(int num_classes, int dim) {
    std::vector<std::vector<double>> means(num_classes, std::vector<double>(dim, 0.35));
    for (int c = 0; c < num_classes; ++c) {
        means[c][c % dim] = 0.75;
        if (c >= dim) means[c][(c / dim) % dim] = 0.6;
    }
    return means;
}

std::vector<Sample> synth_blobs(int num_classes, int dim, int per_class,
                                const std::vector<std::vector<double>>& class_means,
                                double noise_sigma, std::uint64_t seed,
                                const std::string& origin) {
    // A single cluster is a valid generator output (OOD injection uses one);
    // classification-side class-count constraints live with the consumers.
    if (num_classes < 1) throw ConfigError("synth_blobs: num_classes must be >= 1");
    if (noise_sigma <= 0.0) throw ConfigError("synth_blobs: noise_sigma must be > 0");
    if (static_cast<int>(class_means.size()) != num_classes)
        throw ConfigError("synth_blobs: class_means size != num_classes");
    for (const auto& m : class_means)
        if (static_cast<int>(m.size()) != dim)
            throw ConfigError("synth_blobs: class mean dimension != dim");

    Rng rng(seed);
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(num_classes) * per_class);
    int id = 0;
    for (int c = 0; c < num_classes; ++c) {
        Rng class_rng = rng.derive(static_cast<std::uint64_t>(c));
        for (int i = 0; i < per_class; ++i) {
            Sample s;
            s.id = id++;
            s.label = c;
            s.origin = origin;
            s.pixels = Image(1, 1, dim);
            for (int j = 0; j < dim; ++j)
                s.pixels.v[j] = clip01(class_means[c][j] + class_rng.normal(0.0, noise_sigma));
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::vector<Sample> synth_noise(int count, int h, int w, int c, std::uint64_t seed,
                                const std::string& origin) {
    if (origin == kInDistOrigin)
        throw ConfigError("synth_noise: origin must name an out-of-distribution source");
    Rng rng(seed);
    std::vector<Sample> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        Sample s;
        s.id = i;
        s.origin = origin;
        s.pixels = Image(h, w, c);
        for (auto& v : s.pixels.v) v = rng.uniform();
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Procedural digit glyphs. Each digit is a handful of polylines (arcs are
// sampled into polylines) in a unit box, rendered as antialiased strokes
// after a per-sample affine perturbation. Some digits carry two style
// variants (7 with/without crossbar, 1 with/without base bar) so classes are
// deliberately multi-modal.
// ---------------------------------------------------------------------------
namespace {

using Point = std::array<double, 2>;
using Polyline = std::vector<Point>;

Polyline ellipse_arc(double cx, double cy, double rx, double ry, double deg0, double deg1,
                     int segments = 36) {
    Polyline p;
    p.reserve(segments + 1);
    const double a0 = deg0 * std::numbers::pi / 180.0;
    const double a1 = deg1 * std::numbers::pi / 180.0;
    for (int i = 0; i <= segments; ++i) {
        const double a = a0 + (a1 - a0) * i / segments;
        p.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    }
    return p;
}

std::vector<Polyline> digit_strokes(int digit, int style, Rng& rng) {
    std::vector<Polyline> strokes;
    switch (digit) {
    case 0:
        strokes.push_back(ellipse_arc(0.50, 0.50, 0.22, 0.33, 0, 360));
        break;
    case 1:
        strokes.push_back({{0.36, 0.30}, {0.53, 0.15}, {0.53, 0.85}});
        if (style == 0) strokes.push_back({{0.38, 0.85}, {0.68, 0.85}});
        break;
    case 2:
        strokes.push_back(ellipse_arc(0.50, 0.33, 0.20, 0.18, 195, 345));
        strokes.push_back({{0.68, 0.40}, {0.32, 0.85}, {0.71, 0.85}});
        break;
    case 3:
        strokes.push_back(ellipse_arc(0.47, 0.32, 0.19, 0.17, -80, 90));
        strokes.push_back(ellipse_arc(0.47, 0.67, 0.21, 0.18, -90, 85));
        break;
    case 4: {
        const double knee = style == 0 ? 0.60 : 0.53;
        strokes.push_back({{0.63, 0.15}, {0.63, 0.85}});
        strokes.push_back({{0.60, 0.17}, {0.29, knee}, {0.78, knee}});
        break;
    }
    case 5:
        strokes.push_back({{0.69, 0.15}, {0.35, 0.15}, {0.33, 0.47}});
        strokes.push_back(ellipse_arc(0.47, 0.64, 0.21, 0.21, -70, 135));
        break;
    case 6:
        strokes.push_back({{0.63, 0.15}, {0.43, 0.33}, {0.32, 0.55}, {0.30, 0.66}});
        strokes.push_back(ellipse_arc(0.50, 0.64, 0.20, 0.20, 0, 360));
        break;
    case 7:
        strokes.push_back({{0.30, 0.17}, {0.72, 0.17}, {0.44, 0.85}});
        if (style == 0) strokes.push_back({{0.38, 0.50}, {0.64, 0.50}});
        break;
    case 8:
        strokes.push_back(ellipse_arc(0.50, 0.32, 0.17, 0.17, 0, 360));
        strokes.push_back(ellipse_arc(0.50, 0.67, 0.20, 0.18, 0, 360));
        break;
    case 9:
        strokes.push_back(ellipse_arc(0.50, 0.36, 0.19, 0.20, 0, 360));
        if (style == 0)
            strokes.push_back({{0.69, 0.38}, {0.66, 0.62}, {0.55, 0.85}});
        else
            strokes.push_back({{0.69, 0.38}, {0.69, 0.85}});
        break;
    default:
        throw ConfigError("digit_strokes: digit outside 0..9");
    }
    // Control-point jitter, applied in glyph space.
    for (auto& stroke : strokes)
        for (auto& pt : stroke) {
            pt[0] += rng.normal(0.0, 0.013);
            pt[1] += rng.normal(0.0, 0.013);
        }
    return strokes;
}

double point_segment_dist2(double px, double py, const Point& a, const Point& b) {
    const double vx = b[0] - a[0], vy = b[1] - a[1];
    const double wx = px - a[0], wy = py - a[1];
    const double vv = vx * vx + vy * vy;
    double t = vv > 0 ? (wx * vx + wy * vy) / vv : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - (a[0] + t * vx), dy = py - (a[1] + t * vy);
    return dx * dx + dy * dy;
}

} // namespace

std::vector<Sample> synth_digits(int count, int h, int w, std::uint64_t seed,
                                 const std::string& origin) {
    if (count < 1) throw ConfigError("synth_digits: count must be >= 1");
    if (h < 8 || w < 8) throw ConfigError("synth_digits: image too small");

    Rng base(seed);
    std::vector<Sample> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        const int digit = i % 10;
        Rng rng = base.derive(static_cast<std::uint64_t>(i));

        const int style = rng.bernoulli(0.5) ? 0 : 1;
        auto strokes = digit_strokes(digit, style, rng);

        const double theta = rng.uniform(-0.30, 0.30);
        const double sx = rng.uniform(0.75, 1.05);
        const double sy = rng.uniform(0.75, 1.05);
        const double shear = rng.uniform(-0.20, 0.20);
        const double tx = rng.uniform(-0.07, 0.07);
        const double ty = rng.uniform(-0.07, 0.07);
        const double thick = rng.uniform(0.035, 0.075);
        const double fg = rng.uniform(0.65, 1.0);
        const double noise_sigma = 0.04;
        const double aa = 0.02;

        // Forward map: p = c + R(theta) * [[sx, shear*sx], [0, sy]] * (g - c) + t
        const double ct = std::cos(theta), st = std::sin(theta);
        const double m00 = ct * sx, m01 = ct * shear * sx - st * sy;
        const double m10 = st * sx, m11 = st * shear * sx + ct * sy;
        const double det = m00 * m11 - m01 * m10;
        const double i00 = m11 / det, i01 = -m01 / det;
        const double i10 = -m10 / det, i11 = m00 / det;

        Sample s;
        s.id = i;
        s.label = digit;
        s.origin = origin;
        s.pixels = Image(h, w, 1);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double px = (x + 0.5) / w - 0.5 - tx;
                const double py = (y + 0.5) / h - 0.5 - ty;
                const double gx = 0.5 + i00 * px + i01 * py;
                const double gy = 0.5 + i10 * px + i11 * py;
                double d2 = 1e9;
                for (const auto& stroke : strokes)
                    for (std::size_t k = 0; k + 1 < stroke.size(); ++k)
                        d2 = std::min(d2, point_segment_dist2(gx, gy, stroke[k], stroke[k + 1]));
                const double ink = std::clamp((thick - std::sqrt(d2)) / aa + 0.5, 0.0, 1.0);
                s.pixels.at(y, x, 0) = clip01(ink * fg + rng.normal(0.0, noise_sigma));
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace dalbt
