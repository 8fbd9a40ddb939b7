#pragma once

#include "dalbt/rng.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dalbt {

struct Shape3 {
    int h = 1;
    int w = 1;
    int c = 1;

    std::size_t size() const {
        return static_cast<std::size_t>(h) * w * c;
    }
    bool operator==(const Shape3&) const = default;
};

/* One differentiable stage operating on flat activation buffers.
 *
 * Layers are stateless: parameters live in an external flat vector and each
 * call receives this layer's slice. backward() accumulates (+=) into dparams
 * so a batch can share one gradient buffer, and expects x/y exactly as the
 * matching forward produced them.
 */
class Layer {
public:
    virtual ~Layer() = default;

    virtual std::string kind() const = 0;
    virtual Shape3 in_shape() const = 0;
    virtual Shape3 out_shape() const = 0;
    virtual std::size_t param_count() const = 0;

    // Named tensors in slice order, e.g. {("weight", {out,in}), ("bias", {out})}.
    virtual std::vector<std::pair<std::string, std::vector<int>>> tensor_specs() const {
        return {};
    }

    virtual void init(std::span<double> params, Rng& rng) const;

    virtual void forward(std::span<const double> params, std::span<const double> x,
                         std::span<double> y) const = 0;

    virtual void backward(std::span<const double> params, std::span<const double> x,
                          std::span<const double> y, std::span<const double> dy,
                          std::span<double> dparams, std::span<double> dx) const = 0;
};

// Fully connected y = Wx + b over the flattened input.
class DenseLayer : public Layer {
public:
    // he_init picks fan-in-only scaling (use when a ReLU follows); otherwise
    // Glorot. Biases always start at zero.
    DenseLayer(Shape3 in, int out_size, bool he_init);

    std::string kind() const override { return "dense"; }
    Shape3 in_shape() const override { return in_; }
    Shape3 out_shape() const override { return {1, 1, out_size_}; }
    std::size_t param_count() const override;
    std::vector<std::pair<std::string, std::vector<int>>> tensor_specs() const override;
    void init(std::span<double> params, Rng& rng) const override;
    void forward(std::span<const double> params, std::span<const double> x,
                 std::span<double> y) const override;
    void backward(std::span<const double> params, std::span<const double> x,
                  std::span<const double> y, std::span<const double> dy,
                  std::span<double> dparams, std::span<double> dx) const override;

private:
    Shape3 in_;
    int out_size_;
    bool he_init_;
};

class ReluLayer : public Layer {
public:
    explicit ReluLayer(Shape3 shape) : shape_(shape) {}

    std::string kind() const override { return "relu"; }
    Shape3 in_shape() const override { return shape_; }
    Shape3 out_shape() const override { return shape_; }
    std::size_t param_count() const override { return 0; }
    void forward(std::span<const double> params, std::span<const double> x,
                 std::span<double> y) const override;
    void backward(std::span<const double> params, std::span<const double> x,
                  std::span<const double> y, std::span<const double> dy,
                  std::span<double> dparams, std::span<double> dx) const override;

private:
    Shape3 shape_;
};

// Square odd-sized kernel, stride 1, zero padding preserving H and W.
// Activations are HWC interleaved.
class Conv2dLayer : public Layer {
public:
    Conv2dLayer(Shape3 in, int out_channels, int kernel, bool he_init);

    std::string kind() const override { return "conv" + std::to_string(kernel_) + "x" +
                                               std::to_string(kernel_); }
    Shape3 in_shape() const override { return in_; }
    Shape3 out_shape() const override { return {in_.h, in_.w, out_channels_}; }
    std::size_t param_count() const override;
    std::vector<std::pair<std::string, std::vector<int>>> tensor_specs() const override;
    void init(std::span<double> params, Rng& rng) const override;
    void forward(std::span<const double> params, std::span<const double> x,
                 std::span<double> y) const override;
    void backward(std::span<const double> params, std::span<const double> x,
                  std::span<const double> y, std::span<const double> dy,
                  std::span<double> dparams, std::span<double> dx) const override;

private:
    Shape3 in_;
    int out_channels_;
    int kernel_;
    bool he_init_;
};

// 2x2 window, stride 2; trailing odd row/column is dropped. Backward routes
// the gradient to the first position in the window attaining the maximum.
class MaxPool2x2Layer : public Layer {
public:
    explicit MaxPool2x2Layer(Shape3 in);

    std::string kind() const override { return "maxpool2x2"; }
    Shape3 in_shape() const override { return in_; }
    Shape3 out_shape() const override { return {in_.h / 2, in_.w / 2, in_.c}; }
    std::size_t param_count() const override { return 0; }
    void forward(std::span<const double> params, std::span<const double> x,
                 std::span<double> y) const override;
    void backward(std::span<const double> params, std::span<const double> x,
                  std::span<const double> y, std::span<const double> dy,
                  std::span<double> dparams, std::span<double> dx) const override;

private:
    Shape3 in_;
};

} // namespace dalbt
