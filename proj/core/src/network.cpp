#include "dalbt/network.hpp"

#include "dalbt/error.hpp"
#include "dalbt/losses.hpp"
#include "dalbt/parallel.hpp"

#include <cmath>
#include <utility>

namespace dalbt {

namespace {

// Samples per partial-gradient buffer. Fixed so reduction order (and thus the
// bit pattern of every training run) is independent of DALBT_THREADS.
constexpr std::size_t kGradChunk = 8;

} // namespace

void ArchSpec::validate() const {
    if (input_h < 1 || input_w < 1 || input_c < 1)
        throw ConfigError("arch: input dims must be positive");
    if (num_classes < 2) throw ConfigError("arch: need at least 2 classes");
    if (latent_dim < 1) throw ConfigError("arch: latent_dim must be positive");
    if (!encoder_hidden.empty() && !conv_channels.empty())
        throw ConfigError("arch: encoder_hidden and conv_channels are mutually exclusive");
    for (int hdim : encoder_hidden)
        if (hdim < 1) throw ConfigError("arch: encoder hidden widths must be positive");
    int h = input_h, w = input_w;
    for (std::size_t i = 0; i < conv_channels.size(); ++i) {
        if (conv_channels[i] < 1)
            throw ConfigError("arch: conv channel counts must be positive");
        if (h / 2 < 2 || w / 2 < 2)
            throw ConfigError("arch: conv block " + std::to_string(i) + " would pool a " +
                              std::to_string(h) + "x" + std::to_string(w) + " map below 2x2");
        h /= 2;
        w /= 2;
    }
    if (projector_dim < 0) throw ConfigError("arch: projector_dim must be >= 0");
    if (projector_dim == 0 && !projector_hidden.empty())
        throw ConfigError("arch: identity projector (projector_dim 0) takes no hidden layers");
    for (int hdim : projector_hidden)
        if (hdim < 1) throw ConfigError("arch: projector hidden widths must be positive");
}

Network::Network(ArchSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {
    spec_.validate();
    build();
    reinit(seed);
}

int Network::embed_dim() const {
    return spec_.projector_dim == 0 ? spec_.latent_dim : spec_.projector_dim;
}

void Network::build() {
    encoder_.name = "encoder";
    projector_.name = "projector";
    classifier_.name = "classifier";

    Shape3 cur{spec_.input_h, spec_.input_w, spec_.input_c};
    encoder_.in_shape = cur;
    if (!spec_.conv_channels.empty()) {
        for (int ch : spec_.conv_channels) {
            encoder_.layers.push_back(std::make_unique<Conv2dLayer>(cur, ch, 3, true));
            cur = {cur.h, cur.w, ch};
            encoder_.layers.push_back(std::make_unique<ReluLayer>(cur));
            encoder_.layers.push_back(std::make_unique<MaxPool2x2Layer>(cur));
            cur = {cur.h / 2, cur.w / 2, cur.c};
        }
        encoder_.layers.push_back(std::make_unique<DenseLayer>(cur, spec_.latent_dim, false));
    } else {
        for (int hdim : spec_.encoder_hidden) {
            encoder_.layers.push_back(std::make_unique<DenseLayer>(cur, hdim, true));
            cur = {1, 1, hdim};
            encoder_.layers.push_back(std::make_unique<ReluLayer>(cur));
        }
        encoder_.layers.push_back(std::make_unique<DenseLayer>(cur, spec_.latent_dim, false));
    }
    cur = {1, 1, spec_.latent_dim};
    encoder_.out_shape = cur;

    projector_.in_shape = cur;
    if (spec_.projector_dim > 0) {
        Shape3 pcur = cur;
        for (int hdim : spec_.projector_hidden) {
            projector_.layers.push_back(std::make_unique<DenseLayer>(pcur, hdim, true));
            pcur = {1, 1, hdim};
            projector_.layers.push_back(std::make_unique<ReluLayer>(pcur));
        }
        projector_.layers.push_back(
            std::make_unique<DenseLayer>(pcur, spec_.projector_dim, false));
        projector_.out_shape = {1, 1, spec_.projector_dim};
    } else {
        projector_.out_shape = cur;
    }

    classifier_.in_shape = cur;
    classifier_.layers.push_back(std::make_unique<DenseLayer>(cur, spec_.num_classes, false));
    classifier_.out_shape = {1, 1, spec_.num_classes};

    std::size_t total = 0;
    for (Stack* s : {&encoder_, &projector_, &classifier_}) {
        s->param_count = 0;
        s->offsets.clear();
        for (std::size_t li = 0; li < s->layers.size(); ++li) {
            s->offsets.push_back(total);
            const std::size_t pc = s->layers[li]->param_count();
            std::size_t toff = total;
            for (const auto& [tname, tshape] : s->layers[li]->tensor_specs()) {
                ParamInfo info;
                info.name = s->name + "." + std::to_string(li) + "." + tname;
                info.shape = tshape;
                info.offset = toff;
                info.count = 1;
                for (int d : tshape) info.count *= static_cast<std::size_t>(d);
                toff += info.count;
                infos_.push_back(std::move(info));
            }
            total += pc;
            s->param_count += pc;
        }
    }
    params_.assign(total, 0.0);
}

void Network::reinit(std::uint64_t seed) {
    seed_ = seed;
    const Rng base(seed);
    std::uint64_t stream = 0;
    for (Stack* s : {&encoder_, &projector_, &classifier_})
        for (std::size_t li = 0; li < s->layers.size(); ++li) {
            Rng rng = base.derive(stream++);
            const std::size_t pc = s->layers[li]->param_count();
            if (pc == 0) continue;
            s->layers[li]->init({params_.data() + s->offsets[li], pc}, rng);
        }
}

void Network::check_image(const Image& img) const {
    if (img.h != spec_.input_h || img.w != spec_.input_w || img.c != spec_.input_c)
        throw UsageError("network: image " + std::to_string(img.h) + "x" +
                         std::to_string(img.w) + "x" + std::to_string(img.c) +
                         " does not match encoder input " + std::to_string(spec_.input_h) +
                         "x" + std::to_string(spec_.input_w) + "x" +
                         std::to_string(spec_.input_c));
}

std::vector<double> Network::run_stack(const Stack& s, std::span<const double> input,
                                       Trace* trace) const {
    if (input.size() != s.in_shape.size())
        throw UsageError(s.name + ": input size " + std::to_string(input.size()) +
                         " does not match expected " + std::to_string(s.in_shape.size()));
    std::vector<double> cur(input.begin(), input.end());
    if (trace) {
        trace->acts.clear();
        trace->acts.reserve(s.layers.size() + 1);
        trace->acts.push_back(cur);
    }
    for (std::size_t li = 0; li < s.layers.size(); ++li) {
        const Layer& layer = *s.layers[li];
        std::vector<double> next(layer.out_shape().size());
        layer.forward({params_.data() + s.offsets[li], layer.param_count()}, cur, next);
        for (double v : next)
            if (!std::isfinite(v))
                throw NumericError(s.name + " layer " + std::to_string(li) + " (" +
                                   layer.kind() + ") produced a non-finite activation");
        cur = std::move(next);
        if (trace) trace->acts.push_back(cur);
    }
    return cur;
}

std::vector<double> Network::backward_stack(const Stack& s, const Trace& trace,
                                            std::span<const double> dout,
                                            std::vector<double>& grad) const {
    if (trace.acts.size() != s.layers.size() + 1)
        throw UsageError(s.name + ": backward called without a recorded forward trace");
    std::vector<double> dcur(dout.begin(), dout.end());
    for (std::size_t li = s.layers.size(); li-- > 0;) {
        const Layer& layer = *s.layers[li];
        std::vector<double> dx(layer.in_shape().size());
        layer.backward({params_.data() + s.offsets[li], layer.param_count()},
                       trace.acts[li], trace.acts[li + 1], dcur,
                       {grad.data() + s.offsets[li], layer.param_count()}, dx);
        dcur = std::move(dx);
    }
    return dcur;
}

Matrix Network::encode(const std::vector<const Image*>& xs) const {
    Matrix z(static_cast<int>(xs.size()), spec_.latent_dim);
    parallel_for(xs.size(), [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
            check_image(*xs[b]);
            z.set_row(static_cast<int>(b), run_stack(encoder_, xs[b]->v, nullptr));
        }
    });
    return z;
}

Matrix Network::project(const Matrix& z) const {
    if (z.cols != spec_.latent_dim)
        throw UsageError("project: latent width " + std::to_string(z.cols) + " != " +
                         std::to_string(spec_.latent_dim));
    Matrix p(z.rows, embed_dim());
    parallel_for(static_cast<std::size_t>(z.rows), [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b)
            p.set_row(static_cast<int>(b),
                      run_stack(projector_, z.row(static_cast<int>(b)), nullptr));
    });
    return p;
}

Matrix Network::classify_logits(const Matrix& z) const {
    if (z.cols != spec_.latent_dim)
        throw UsageError("classify: latent width " + std::to_string(z.cols) + " != " +
                         std::to_string(spec_.latent_dim));
    Matrix logits(z.rows, spec_.num_classes);
    parallel_for(static_cast<std::size_t>(z.rows), [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b)
            logits.set_row(static_cast<int>(b),
                           run_stack(classifier_, z.row(static_cast<int>(b)), nullptr));
    });
    return logits;
}

Matrix Network::classify(const Matrix& z) const { return softmax_rows(classify_logits(z)); }

JointForward Network::forward_joint(const std::vector<const Image*>& x,
                                    const std::vector<const Image*>& v1,
                                    const std::vector<const Image*>& v2,
                                    bool keep_traces) const {
    const std::size_t batch = x.size();
    if (v1.size() != batch || v2.size() != batch)
        throw UsageError("forward_joint: the three batches must be the same size");
    JointForward out;
    out.logits = Matrix(static_cast<int>(batch), spec_.num_classes);
    out.p1 = Matrix(static_cast<int>(batch), embed_dim());
    out.p2 = Matrix(static_cast<int>(batch), embed_dim());
    if (keep_traces) out.traces.resize(batch);

    parallel_for(batch, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
            check_image(*x[b]);
            check_image(*v1[b]);
            check_image(*v2[b]);
            JointForward::SampleTraces* tr = keep_traces ? &out.traces[b] : nullptr;
            const auto zx =
                run_stack(encoder_, x[b]->v, tr ? &tr->enc_x : nullptr);
            out.logits.set_row(static_cast<int>(b),
                               run_stack(classifier_, zx, tr ? &tr->cls : nullptr));
            const auto z1 = run_stack(encoder_, v1[b]->v, tr ? &tr->enc_v1 : nullptr);
            out.p1.set_row(static_cast<int>(b),
                           run_stack(projector_, z1, tr ? &tr->proj_v1 : nullptr));
            const auto z2 = run_stack(encoder_, v2[b]->v, tr ? &tr->enc_v2 : nullptr);
            out.p2.set_row(static_cast<int>(b),
                           run_stack(projector_, z2, tr ? &tr->proj_v2 : nullptr));
        }
    });
    out.probs = softmax_rows(out.logits);
    return out;
}

ClassifierForward Network::forward_classifier(const std::vector<const Image*>& x,
                                              bool keep_traces) const {
    ClassifierForward out;
    out.logits = Matrix(static_cast<int>(x.size()), spec_.num_classes);
    if (keep_traces) out.traces.resize(x.size());
    parallel_for(x.size(), [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
            check_image(*x[b]);
            ClassifierForward::SampleTraces* tr = keep_traces ? &out.traces[b] : nullptr;
            const auto z = run_stack(encoder_, x[b]->v, tr ? &tr->enc : nullptr);
            out.logits.set_row(static_cast<int>(b),
                               run_stack(classifier_, z, tr ? &tr->cls : nullptr));
        }
    });
    out.probs = softmax_rows(out.logits);
    return out;
}

namespace {

void prepare_grad(std::vector<double>& grad, std::size_t want) {
    if (grad.empty()) grad.assign(want, 0.0);
    if (grad.size() != want)
        throw UsageError("backward: gradient buffer size " + std::to_string(grad.size()) +
                         " does not match parameter count " + std::to_string(want));
}

} // namespace

void Network::backward_joint(const JointForward& fwd, const Matrix& dlogits,
                             const Matrix& dp1, const Matrix& dp2,
                             std::vector<double>& grad) const {
    const std::size_t batch = fwd.traces.size();
    if (batch == 0)
        throw UsageError("backward_joint: forward pass kept no traces");
    if (dlogits.rows != static_cast<int>(batch) || dp1.rows != static_cast<int>(batch) ||
        dp2.rows != static_cast<int>(batch))
        throw UsageError("backward_joint: upstream gradient batch mismatch");
    prepare_grad(grad, params_.size());

    const auto chunks = make_chunks(batch, kGradChunk);
    std::vector<std::vector<double>> partial(chunks.size());
    run_chunks(chunks.size(), [&](std::size_t ci) {
        auto& g = partial[ci];
        g.assign(params_.size(), 0.0);
        for (std::size_t b = chunks[ci].begin; b < chunks[ci].end; ++b) {
            const auto& tr = fwd.traces[b];
            const int bi = static_cast<int>(b);
            const auto dz_x = backward_stack(classifier_, tr.cls, dlogits.row(bi), g);
            backward_stack(encoder_, tr.enc_x, dz_x, g);
            const auto dz1 = backward_stack(projector_, tr.proj_v1, dp1.row(bi), g);
            backward_stack(encoder_, tr.enc_v1, dz1, g);
            const auto dz2 = backward_stack(projector_, tr.proj_v2, dp2.row(bi), g);
            backward_stack(encoder_, tr.enc_v2, dz2, g);
        }
    });
    for (const auto& g : partial)
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
}

void Network::backward_classifier(const ClassifierForward& fwd, const Matrix& dlogits,
                                  std::vector<double>& grad) const {
    const std::size_t batch = fwd.traces.size();
    if (batch == 0)
        throw UsageError("backward_classifier: forward pass kept no traces");
    if (dlogits.rows != static_cast<int>(batch))
        throw UsageError("backward_classifier: upstream gradient batch mismatch");
    prepare_grad(grad, params_.size());

    const auto chunks = make_chunks(batch, kGradChunk);
    std::vector<std::vector<double>> partial(chunks.size());
    run_chunks(chunks.size(), [&](std::size_t ci) {
        auto& g = partial[ci];
        g.assign(params_.size(), 0.0);
        for (std::size_t b = chunks[ci].begin; b < chunks[ci].end; ++b) {
            const auto& tr = fwd.traces[b];
            const auto dz = backward_stack(classifier_, tr.cls,
                                           dlogits.row(static_cast<int>(b)), g);
            backward_stack(encoder_, tr.enc, dz, g);
        }
    });
    for (const auto& g : partial)
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
}

} // namespace dalbt
