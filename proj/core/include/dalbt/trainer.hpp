#pragma once

#include "dalbt/augment.hpp"
#include "dalbt/losses.hpp"
#include "dalbt/network.hpp"
#include "dalbt/sample.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace dalbt {

enum class OptimizerKind { adam, sgd };

struct TrainConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-5;
    int batch_size = 64;
    int epochs = 20;
    OptimizerKind optimizer = OptimizerKind::adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    // Retrain each stage from a fresh seeded initialization instead of
    // warm-starting from the previous stage's weights.
    bool reinit_per_stage = true;
    // Subtract column means inside the cross-correlation (off by default;
    // the plain column-cosine form is the reference behavior).
    bool center_embeddings = false;
    // Keep the epoch with the best validation accuracy instead of the last
    // one; needs a validation set passed to train_stage.
    bool select_best_on_val = false;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpochLog {
    int epoch = 0;
    double total_loss = 0.0;
    double ce_term = 0.0;
    double bt_invariance = 0.0;
    double bt_redundancy = 0.0;
    double train_accuracy = 0.0;
    std::optional<double> val_accuracy;
};

struct TrainResult {
    std::vector<EpochLog> epochs;
    int best_epoch = -1; // set when best-on-val selection restored a checkpoint
};

class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual void step(std::vector<double>& params, const std::vector<double>& grad) = 0;
};

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& cfg, std::size_t param_count);

/* One stage of joint training on the current labeled pool.
 *
 * Per epoch: seeded shuffle, then per mini-batch generate a view pair for
 * every sample (skipped entirely when gamma == 0), forward, joint loss,
 * exact backward, additive L2 weight decay (grad += wd * w), optimizer step.
 * The per-sample view stream is derived from (sample id XOR epoch), so view
 * draws do not depend on batch composition or iteration order.
 *
 * A trailing batch shorter than batch_size still trains if it has >= 2
 * samples (the cross-correlation needs two rows); a single leftover sample
 * is dropped.
 */
TrainResult train_stage(Network& net, const std::vector<const Sample*>& labeled,
                        const AugmentationConfig& aug_cfg, const LossWeights& weights,
                        const TrainConfig& cfg,
                        const std::vector<const Sample*>* val_samples = nullptr);

// Fraction of argmax-correct predictions on undistorted inputs; argmax ties
// resolve to the lowest class index.
double evaluate(const Network& net, const std::vector<const Sample*>& eval_samples);

// Central-difference check of the full joint-loss gradient; returns the worst
// relative error |a - b| / max(1e-8, |a| + |b|) over all parameters.
double grad_check(Network& net, const std::vector<const Image*>& x,
                  const std::vector<int>& labels, const std::vector<const Image*>& v1,
                  const std::vector<const Image*>& v2, const LossWeights& weights,
                  double step, const CrossCorrelationOptions& cc_opts = {});

} // namespace dalbt
