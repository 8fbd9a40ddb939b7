#include "dalbt/layers.hpp"

#include "dalbt/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dalbt {

void Layer::init(std::span<double> params, Rng& rng) const {
    (void)rng;
    std::fill(params.begin(), params.end(), 0.0);
}

DenseLayer::DenseLayer(Shape3 in, int out_size, bool he_init)
    : in_(in), out_size_(out_size), he_init_(he_init) {
    if (in.size() == 0 || out_size < 1)
        throw ConfigError("dense layer: sizes must be positive");
}

std::size_t DenseLayer::param_count() const {
    return in_.size() * out_size_ + static_cast<std::size_t>(out_size_);
}

std::vector<std::pair<std::string, std::vector<int>>> DenseLayer::tensor_specs() const {
    return {{"weight", {out_size_, static_cast<int>(in_.size())}}, {"bias", {out_size_}}};
}

void DenseLayer::init(std::span<double> params, Rng& rng) const {
    const double fan_in = static_cast<double>(in_.size());
    const double fan_out = out_size_;
    const double limit =
        he_init_ ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
    const std::size_t nw = in_.size() * out_size_;
    for (std::size_t i = 0; i < nw; ++i) params[i] = rng.uniform(-limit, limit);
    for (std::size_t i = nw; i < params.size(); ++i) params[i] = 0.0;
}

void DenseLayer::forward(std::span<const double> params, std::span<const double> x,
                         std::span<double> y) const {
    const std::size_t n = in_.size();
    const double* bias = params.data() + n * out_size_;
    for (int o = 0; o < out_size_; ++o) {
        const double* wrow = params.data() + static_cast<std::size_t>(o) * n;
        double acc = bias[o];
        for (std::size_t i = 0; i < n; ++i) acc += wrow[i] * x[i];
        y[o] = acc;
    }
}

void DenseLayer::backward(std::span<const double> params, std::span<const double> x,
                          std::span<const double> y, std::span<const double> dy,
                          std::span<double> dparams, std::span<double> dx) const {
    (void)y;
    const std::size_t n = in_.size();
    std::fill(dx.begin(), dx.end(), 0.0);
    double* dbias = dparams.data() + n * out_size_;
    for (int o = 0; o < out_size_; ++o) {
        const double g = dy[o];
        if (g == 0.0) continue;
        const double* wrow = params.data() + static_cast<std::size_t>(o) * n;
        double* dwrow = dparams.data() + static_cast<std::size_t>(o) * n;
        dbias[o] += g;
        for (std::size_t i = 0; i < n; ++i) {
            dwrow[i] += g * x[i];
            dx[i] += g * wrow[i];
        }
    }
}

void ReluLayer::forward(std::span<const double> params, std::span<const double> x,
                        std::span<double> y) const {
    (void)params;
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void ReluLayer::backward(std::span<const double> params, std::span<const double> x,
                         std::span<const double> y, std::span<const double> dy,
                         std::span<double> dparams, std::span<double> dx) const {
    (void)params;
    (void)y;
    (void)dparams;
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
}

Conv2dLayer::Conv2dLayer(Shape3 in, int out_channels, int kernel, bool he_init)
    : in_(in), out_channels_(out_channels), kernel_(kernel), he_init_(he_init) {
    if (in.h < 1 || in.w < 1 || in.c < 1 || out_channels < 1)
        throw ConfigError("conv layer: shape must be positive");
    if (kernel < 1 || kernel % 2 == 0)
        throw ConfigError("conv layer: kernel must be odd, got " + std::to_string(kernel));
}

std::size_t Conv2dLayer::param_count() const {
    return static_cast<std::size_t>(out_channels_) * in_.c * kernel_ * kernel_ +
           static_cast<std::size_t>(out_channels_);
}

std::vector<std::pair<std::string, std::vector<int>>> Conv2dLayer::tensor_specs() const {
    return {{"weight", {out_channels_, in_.c, kernel_, kernel_}}, {"bias", {out_channels_}}};
}

void Conv2dLayer::init(std::span<double> params, Rng& rng) const {
    const double fan_in = static_cast<double>(in_.c) * kernel_ * kernel_;
    const double fan_out = static_cast<double>(out_channels_) * kernel_ * kernel_;
    const double limit =
        he_init_ ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
    const std::size_t nw = static_cast<std::size_t>(out_channels_) * in_.c * kernel_ * kernel_;
    for (std::size_t i = 0; i < nw; ++i) params[i] = rng.uniform(-limit, limit);
    for (std::size_t i = nw; i < params.size(); ++i) params[i] = 0.0;
}

void Conv2dLayer::forward(std::span<const double> params, std::span<const double> x,
                          std::span<double> y) const {
    const int k = kernel_;
    const int pad = k / 2;
    const int cin = in_.c;
    const std::size_t nw = static_cast<std::size_t>(out_channels_) * cin * k * k;
    const double* bias = params.data() + nw;
    for (int y0 = 0; y0 < in_.h; ++y0)
        for (int x0 = 0; x0 < in_.w; ++x0)
            for (int co = 0; co < out_channels_; ++co) {
                double acc = bias[co];
                for (int ky = 0; ky < k; ++ky) {
                    const int iy = y0 + ky - pad;
                    if (iy < 0 || iy >= in_.h) continue;
                    for (int kx = 0; kx < k; ++kx) {
                        const int ix = x0 + kx - pad;
                        if (ix < 0 || ix >= in_.w) continue;
                        const double* xp = x.data() + (static_cast<std::size_t>(iy) * in_.w + ix) * cin;
                        const double* wp = params.data() +
                            ((static_cast<std::size_t>(co) * cin) * k + ky) * k + kx;
                        for (int ci = 0; ci < cin; ++ci)
                            acc += wp[static_cast<std::size_t>(ci) * k * k] * xp[ci];
                    }
                }
                y[(static_cast<std::size_t>(y0) * in_.w + x0) * out_channels_ + co] = acc;
            }
}

void Conv2dLayer::backward(std::span<const double> params, std::span<const double> x,
                           std::span<const double> y, std::span<const double> dy,
                           std::span<double> dparams, std::span<double> dx) const {
    (void)y;
    const int k = kernel_;
    const int pad = k / 2;
    const int cin = in_.c;
    const std::size_t nw = static_cast<std::size_t>(out_channels_) * cin * k * k;
    double* dbias = dparams.data() + nw;
    std::fill(dx.begin(), dx.end(), 0.0);
    for (int y0 = 0; y0 < in_.h; ++y0)
        for (int x0 = 0; x0 < in_.w; ++x0)
            for (int co = 0; co < out_channels_; ++co) {
                const double g =
                    dy[(static_cast<std::size_t>(y0) * in_.w + x0) * out_channels_ + co];
                if (g == 0.0) continue;
                dbias[co] += g;
                for (int ky = 0; ky < k; ++ky) {
                    const int iy = y0 + ky - pad;
                    if (iy < 0 || iy >= in_.h) continue;
                    for (int kx = 0; kx < k; ++kx) {
                        const int ix = x0 + kx - pad;
                        if (ix < 0 || ix >= in_.w) continue;
                        const std::size_t xoff = (static_cast<std::size_t>(iy) * in_.w + ix) * cin;
                        const std::size_t woff =
                            ((static_cast<std::size_t>(co) * cin) * k + ky) * k + kx;
                        for (int ci = 0; ci < cin; ++ci) {
                            dparams[woff + static_cast<std::size_t>(ci) * k * k] += g * x[xoff + ci];
                            dx[xoff + ci] += g * params[woff + static_cast<std::size_t>(ci) * k * k];
                        }
                    }
                }
            }
}

MaxPool2x2Layer::MaxPool2x2Layer(Shape3 in) : in_(in) {
    if (in.h < 2 || in.w < 2)
        throw ConfigError("maxpool2x2: input must be at least 2x2, got " +
                          std::to_string(in.h) + "x" + std::to_string(in.w));
}

void MaxPool2x2Layer::forward(std::span<const double> params, std::span<const double> x,
                              std::span<double> y) const {
    (void)params;
    const int oh = in_.h / 2;
    const int ow = in_.w / 2;
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
            for (int c = 0; c < in_.c; ++c) {
                double best = -std::numeric_limits<double>::infinity();
                for (int dy0 = 0; dy0 < 2; ++dy0)
                    for (int dx0 = 0; dx0 < 2; ++dx0) {
                        const double v =
                            x[(static_cast<std::size_t>(2 * oy + dy0) * in_.w + 2 * ox + dx0) *
                                  in_.c +
                              c];
                        best = std::max(best, v);
                    }
                y[(static_cast<std::size_t>(oy) * ow + ox) * in_.c + c] = best;
            }
}

void MaxPool2x2Layer::backward(std::span<const double> params, std::span<const double> x,
                               std::span<const double> y, std::span<const double> dy,
                               std::span<double> dparams, std::span<double> dx) const {
    (void)params;
    (void)dparams;
    const int oh = in_.h / 2;
    const int ow = in_.w / 2;
    std::fill(dx.begin(), dx.end(), 0.0);
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
            for (int c = 0; c < in_.c; ++c) {
                const std::size_t oidx = (static_cast<std::size_t>(oy) * ow + ox) * in_.c + c;
                const double target = y[oidx];
                for (int dy0 = 0; dy0 < 2; ++dy0) {
                    bool routed = false;
                    for (int dx0 = 0; dx0 < 2; ++dx0) {
                        const std::size_t iidx =
                            (static_cast<std::size_t>(2 * oy + dy0) * in_.w + 2 * ox + dx0) *
                                in_.c +
                            c;
                        if (x[iidx] == target) {
                            dx[iidx] += dy[oidx];
                            routed = true;
                            break;
                        }
                    }
                    if (routed) break;
                }
            }
}

} // namespace dalbt
