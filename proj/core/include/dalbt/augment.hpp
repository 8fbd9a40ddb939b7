#pragma once

#include "dalbt/image.hpp"
#include "dalbt/rng.hpp"

#include <array>

namespace dalbt {

// BYOL-style distortion family. Crop+resize applies to every view; the
// remaining transforms fire independently per view with their probability,
// in the order blur, jitter, grayscale, flip, solarize. Solarize probability
// differs between the two views.
struct AugmentationConfig {
    std::array<double, 2> crop_scale_range = {0.6, 1.0}; // area fractions
    double flip_prob = 0.5;
    std::array<double, 4> jitter_strengths = {0.4, 0.4, 0.2, 0.1}; // brightness, contrast, saturation, hue
    double jitter_prob = 0.8;
    double grayscale_prob = 0.2;
    double blur_prob = 0.5;
    std::array<double, 2> blur_sigma_range = {0.1, 2.0};
    double solarize_prob_view1 = 0.0;
    double solarize_prob_view2 = 0.2;
    double solarize_threshold = 0.5;

    void validate() const;
};

struct ViewPair {
    Image view1;
    Image view2;
};

// Crops a window whose area fraction is drawn from scale_range, then
// bilinearly resizes it back to the input shape (half-pixel centers).
// scale_range (1,1) is the identity.
Image random_crop_resize(const Image& img, std::array<double, 2> scale_range, Rng& rng);

Image horizontal_flip(const Image& img);

// p >= threshold maps to 1-p.
Image solarize(const Image& img, double threshold);

// Brightness/contrast on any channel count; saturation/hue only on 3-channel
// images (no-ops otherwise). Output clamped to [0, 1].
Image color_jitter(const Image& img, std::array<double, 4> strengths, Rng& rng);

// Luma weights 0.299/0.587/0.114 replicated across channels (identity for
// single-channel input).
Image to_grayscale(const Image& img);

// Separable truncated Gaussian (radius ceil(3*sigma)), edge-clamp padding.
Image gaussian_blur(const Image& img, double sigma);

ViewPair make_views(const Image& img, const AugmentationConfig& cfg, Rng& rng);

} // namespace dalbt
