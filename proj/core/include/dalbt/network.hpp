#pragma once

#include "dalbt/image.hpp"
#include "dalbt/layers.hpp"
#include "dalbt/matrix.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace dalbt {

/* Encoder -> latent z, projector -> embedding p (SSL loss input), and a
 * single-layer classifier that reads the latent of the undistorted input.
 *
 * The encoder is either an MLP over the flattened input (encoder_hidden) or a
 * stack of conv3x3 + relu + maxpool blocks followed by one dense layer to the
 * latent (conv_channels). Exactly one of the two lists selects the path; both
 * empty means a single dense layer input -> latent.
 */
struct ArchSpec {
    int input_h = 0;
    int input_w = 0;
    int input_c = 0;
    int num_classes = 0;
    int latent_dim = 0;
    std::vector<int> encoder_hidden;
    std::vector<int> conv_channels;
    std::vector<int> projector_hidden = {128};
    int projector_dim = 128; // 0 selects the identity projector (d_p = latent_dim)

    void validate() const;
};

struct ParamInfo {
    std::string name; // e.g. "encoder.0.weight"
    std::vector<int> shape;
    std::size_t offset = 0;
    std::size_t count = 0;
};

// Per-sample activation record through one stack: acts[0] is the input,
// acts[k+1] the output of layer k.
struct Trace {
    std::vector<std::vector<double>> acts;
};

struct JointForward {
    Matrix logits; // B x K, undistorted inputs
    Matrix probs;  // softmax of logits
    Matrix p1;     // B x d_p, first distorted view
    Matrix p2;     // B x d_p, second distorted view
    // Per-sample traces (encoder x3, projector x2, classifier x1);
    // empty unless requested.
    struct SampleTraces {
        Trace enc_x, enc_v1, enc_v2;
        Trace proj_v1, proj_v2;
        Trace cls;
    };
    std::vector<SampleTraces> traces;
};

struct ClassifierForward {
    Matrix logits;
    Matrix probs;
    struct SampleTraces {
        Trace enc, cls;
    };
    std::vector<SampleTraces> traces;
};

class Network {
public:
    Network(ArchSpec spec, std::uint64_t seed);

    const ArchSpec& arch() const { return spec_; }
    int latent_dim() const { return spec_.latent_dim; }
    int embed_dim() const; // d_p
    int num_classes() const { return spec_.num_classes; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    const std::vector<ParamInfo>& param_infos() const { return infos_; }

    // Re-draws all weights; used when a stage retrains from scratch.
    void reinit(std::uint64_t seed);

    Matrix encode(const std::vector<const Image*>& xs) const;
    Matrix project(const Matrix& z) const;
    Matrix classify_logits(const Matrix& z) const;
    Matrix classify(const Matrix& z) const; // softmax probabilities

    JointForward forward_joint(const std::vector<const Image*>& x,
                               const std::vector<const Image*>& v1,
                               const std::vector<const Image*>& v2,
                               bool keep_traces) const;
    ClassifierForward forward_classifier(const std::vector<const Image*>& x,
                                         bool keep_traces) const;

    // Chain upstream gradients through the recorded traces, accumulating into
    // grad (same length as params). Throws if the forward kept no traces.
    void backward_joint(const JointForward& fwd, const Matrix& dlogits, const Matrix& dp1,
                        const Matrix& dp2, std::vector<double>& grad) const;
    void backward_classifier(const ClassifierForward& fwd, const Matrix& dlogits,
                             std::vector<double>& grad) const;

private:
    struct Stack {
        std::string name;
        std::vector<std::unique_ptr<Layer>> layers;
        std::vector<std::size_t> offsets; // global param offset per layer
        Shape3 in_shape, out_shape;
        std::size_t param_count = 0;
    };

    void build();
    std::vector<double> run_stack(const Stack& s, std::span<const double> input,
                                  Trace* trace) const;
    // Returns d(input); accumulates parameter grads.
    std::vector<double> backward_stack(const Stack& s, const Trace& trace,
                                       std::span<const double> dout,
                                       std::vector<double>& grad) const;
    void check_image(const Image& img) const;

    ArchSpec spec_;
    std::uint64_t seed_;
    Stack encoder_, projector_, classifier_;
    std::vector<double> params_;
    std::vector<ParamInfo> infos_;
};

} // namespace dalbt
