#include "dalbt/augment.hpp"

#include "dalbt/error.hpp"

#include <algorithm>
#include <cmath>

namespace dalbt {

namespace {

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

void require_prob(double p, const char* name) {
    if (p < 0.0 || p > 1.0)
        throw ConfigError(std::string("augment: ") + name + " must lie in [0,1]");
}

// Bilinear resize of a crop window [top, top+ch) x [left, left+cw) to the
// full output shape, half-pixel-centered sampling, edge clamped.
Image resize_window(const Image& img, int top, int left, int ch, int cw) {
    Image out(img.h, img.w, img.c);
    for (int y = 0; y < out.h; ++y) {
        double sy = (y + 0.5) * ch / out.h - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(ch - 1));
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, ch - 1);
        const double fy = sy - y0;
        for (int x = 0; x < out.w; ++x) {
            double sx = (x + 0.5) * cw / out.w - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(cw - 1));
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, cw - 1);
            const double fx = sx - x0;
            for (int c = 0; c < out.c; ++c) {
                const double v00 = img.at(top + y0, left + x0, c);
                const double v01 = img.at(top + y0, left + x1, c);
                const double v10 = img.at(top + y1, left + x0, c);
                const double v11 = img.at(top + y1, left + x1, c);
                const double v = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                 fy * ((1 - fx) * v10 + fx * v11);
                out.at(y, x, c) = clip01(v);
            }
        }
    }
    return out;
}

} // namespace

void AugmentationConfig::validate() const {
    if (!(crop_scale_range[0] > 0.0 && crop_scale_range[0] <= crop_scale_range[1] &&
          crop_scale_range[1] <= 1.0))
        throw ConfigError("augment: crop_scale_range must satisfy 0 < lo <= hi <= 1");
    require_prob(flip_prob, "flip_prob");
    require_prob(jitter_prob, "jitter_prob");
    require_prob(grayscale_prob, "grayscale_prob");
    require_prob(blur_prob, "blur_prob");
    require_prob(solarize_prob_view1, "solarize_prob_view1");
    require_prob(solarize_prob_view2, "solarize_prob_view2");
    if (solarize_threshold < 0.0 || solarize_threshold > 1.0)
        throw ConfigError("augment: solarize_threshold must lie in [0,1]");
    for (double s : jitter_strengths)
        if (s < 0.0) throw ConfigError("augment: jitter strengths must be nonnegative");
    if (!(blur_sigma_range[0] > 0.0 && blur_sigma_range[0] <= blur_sigma_range[1]))
        throw ConfigError("augment: blur_sigma_range must satisfy 0 < lo <= hi");
}

Image random_crop_resize(const Image& img, std::array<double, 2> scale_range, Rng& rng) {
    if (img.h < 2 || img.w < 2)
        throw UsageError("random_crop_resize: image smaller than 2x2");
    const double s = rng.uniform(scale_range[0], scale_range[1]);
    const double side = std::sqrt(s);
    const int ch = std::clamp(static_cast<int>(std::lround(img.h * side)), 1, img.h);
    const int cw = std::clamp(static_cast<int>(std::lround(img.w * side)), 1, img.w);
    const int top = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(img.h - ch) + 1));
    const int left = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(img.w - cw) + 1));
    if (ch == img.h && cw == img.w) return img; // full-window crop is exact
    return resize_window(img, top, left, ch, cw);
}

Image horizontal_flip(const Image& img) {
    Image out(img.h, img.w, img.c);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < img.c; ++c) out.at(y, x, c) = img.at(y, img.w - 1 - x, c);
    return out;
}

Image solarize(const Image& img, double threshold) {
    if (threshold < 0.0 || threshold > 1.0)
        throw ConfigError("solarize: threshold must lie in [0,1]");
    Image out = img;
    for (auto& v : out.v)
        if (v >= threshold) v = 1.0 - v;
    return out;
}

Image to_grayscale(const Image& img) {
    if (img.c != 3) return img;
    Image out(img.h, img.w, 3);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            const double g = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) +
                             0.114 * img.at(y, x, 2);
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = g;
        }
    return out;
}

namespace {

// RGB <-> HSV on [0,1] values, hue in [0,1).
void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double d = mx - mn;
    v = mx;
    s = mx > 0 ? d / mx : 0.0;
    if (d <= 0) {
        h = 0.0;
        return;
    }
    if (mx == r)
        h = std::fmod((g - b) / d, 6.0);
    else if (mx == g)
        h = (b - r) / d + 2.0;
    else
        h = (r - g) / d + 4.0;
    h /= 6.0;
    if (h < 0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    const double hh = std::fmod(h, 1.0) * 6.0;
    const int i = static_cast<int>(hh) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1 - s);
    const double q = v * (1 - s * f);
    const double t = v * (1 - s * (1 - f));
    switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
    }
}

} // namespace

Image color_jitter(const Image& img, std::array<double, 4> strengths, Rng& rng) {
    for (double s : strengths)
        if (s < 0.0) throw ConfigError("color_jitter: strengths must be nonnegative");

    Image out = img;
    const auto [sb, sc, ss, sh] = strengths;

    // Brightness: multiplicative factor around 1.
    if (sb > 0) {
        const double f = rng.uniform(std::max(0.0, 1.0 - sb), 1.0 + sb);
        for (auto& v : out.v) v = clip01(v * f);
    }
    // Contrast: blend toward the image's gray mean.
    if (sc > 0) {
        const double f = rng.uniform(std::max(0.0, 1.0 - sc), 1.0 + sc);
        const Image gray = to_grayscale(out);
        double mean = 0.0;
        for (double v : gray.v) mean += v;
        mean /= static_cast<double>(gray.v.size());
        for (auto& v : out.v) v = clip01((v - mean) * f + mean);
    }
    // Saturation: blend between grayscale and the image (3-channel only).
    if (ss > 0 && out.c == 3) {
        const double f = rng.uniform(std::max(0.0, 1.0 - ss), 1.0 + ss);
        const Image gray = to_grayscale(out);
        for (std::size_t i = 0; i < out.v.size(); ++i)
            out.v[i] = clip01(gray.v[i] + (out.v[i] - gray.v[i]) * f);
    }
    // Hue: rotate in HSV (3-channel only); strength is a fraction of a turn.
    if (sh > 0 && out.c == 3) {
        const double delta = rng.uniform(-sh, sh);
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x) {
                double h, s, v;
                rgb_to_hsv(out.at(y, x, 0), out.at(y, x, 1), out.at(y, x, 2), h, s, v);
                h = std::fmod(h + delta + 1.0, 1.0);
                double r, g, b;
                hsv_to_rgb(h, s, v, r, g, b);
                out.at(y, x, 0) = clip01(r);
                out.at(y, x, 1) = clip01(g);
                out.at(y, x, 2) = clip01(b);
            }
    }
    return out;
}

Image gaussian_blur(const Image& img, double sigma) {
    if (sigma <= 0.0) throw ConfigError("gaussian_blur: sigma must be > 0");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (auto& k : kernel) k /= sum;

    Image tmp(img.h, img.w, img.c);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < img.c; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[i + radius] * img.at(y, std::clamp(x + i, 0, img.w - 1), c);
                tmp.at(y, x, c) = acc;
            }
    Image out(img.h, img.w, img.c);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < img.c; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[i + radius] * tmp.at(std::clamp(y + i, 0, img.h - 1), x, c);
                out.at(y, x, c) = clip01(acc);
            }
    return out;
}

namespace {

Image distort_one_view(const Image& img, const AugmentationConfig& cfg, double solarize_prob,
                       Rng& rng) {
    // Identity crop windows skip the resize entirely so 1x1xD feature
    // "images" can flow through the pipeline unchanged.
    Image out = cfg.crop_scale_range[0] == 1.0 && cfg.crop_scale_range[1] == 1.0
                    ? img
                    : random_crop_resize(img, cfg.crop_scale_range, rng);
    if (rng.uniform() < cfg.blur_prob) {
        const double sigma = rng.uniform(cfg.blur_sigma_range[0], cfg.blur_sigma_range[1]);
        out = gaussian_blur(out, sigma);
    }
    if (rng.uniform() < cfg.jitter_prob) out = color_jitter(out, cfg.jitter_strengths, rng);
    if (rng.uniform() < cfg.grayscale_prob) out = to_grayscale(out);
    if (rng.uniform() < cfg.flip_prob) out = horizontal_flip(out);
    if (rng.uniform() < solarize_prob) out = solarize(out, cfg.solarize_threshold);
    return out;
}

} // namespace

ViewPair make_views(const Image& img, const AugmentationConfig& cfg, Rng& rng) {
    cfg.validate();
    ViewPair vp;
    vp.view1 = distort_one_view(img, cfg, cfg.solarize_prob_view1, rng);
    vp.view2 = distort_one_view(img, cfg, cfg.solarize_prob_view2, rng);
    return vp;
}

} // namespace dalbt
