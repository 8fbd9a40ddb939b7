#pragma once

#include "dalbt/sample.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dalbt {

// Gaussian class clusters flattened into 1x1xdim "images", clipped to [0, 1].
// class_means must be num_classes x dim. Deterministic given seed.
std::vector<Sample> synth_blobs(int num_classes, int dim, int per_class,
                                const std::vector<std::vector<double>>& class_means,
                                double noise_sigma, std::uint64_t seed,
                                const std::string& origin = kInDistOrigin);

// Evenly spread default means on [0.15, 0.85] axes (one coordinate per class,
// cycling) for quick synthetic experiments.
std::vector<std::vector<double>> default_blob_means(int num_classes, int dim);

// Procedurally rendered digit glyphs (classes 0..9) at h x w, single channel.
// Each sample perturbs its glyph with a random affine map, stroke thickness,
// intensity, and pixel noise. A deterministic stand-in for MNIST-scale data.
std::vector<Sample> synth_digits(int count, int h, int w, std::uint64_t seed,
                                 const std::string& origin = kInDistOrigin);

// Uniform-noise images, an out-of-distribution source for mixed pools.
std::vector<Sample> synth_noise(int count, int h, int w, int c, std::uint64_t seed,
                                const std::string& origin);

} // namespace dalbt
