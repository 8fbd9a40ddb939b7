#include "dalbt/trainer.hpp"

#include "dalbt/error.hpp"
#include "dalbt/parallel.hpp"
#include "dalbt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace dalbt {

namespace {

// Stream tags for the independent RNG consumers inside a stage.
constexpr std::uint64_t kStreamInit = 0x01;
constexpr std::uint64_t kStreamShuffle = 0x02;
constexpr std::uint64_t kStreamViews = 0x03;

class SgdOptimizer : public Optimizer {
public:
    explicit SgdOptimizer(double lr) : lr_(lr) {}
    void step(std::vector<double>& params, const std::vector<double>& grad) override {
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
    }

private:
    double lr_;
};

class AdamOptimizer : public Optimizer {
public:
    AdamOptimizer(double lr, double b1, double b2, double eps, std::size_t n)
        : lr_(lr), b1_(b1), b2_(b2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad) override {
        ++t_;
        const double bc1 = 1.0 - std::pow(b1_, t_);
        const double bc2 = 1.0 - std::pow(b2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
            v_[i] = b2_ * v_[i] + (1.0 - b2_) * grad[i] * grad[i];
            params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
        }
    }

private:
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

int argmax_lowest(std::span<const double> row) {
    int best = 0;
    for (int k = 1; k < static_cast<int>(row.size()); ++k)
        if (row[k] > row[best]) best = k;
    return best;
}

void require_finite_loss(const JointLossResult& loss, int epoch, int batch) {
    if (std::isfinite(loss.total)) return;
    std::string culprit = "total";
    if (!std::isfinite(loss.ce_term))
        culprit = "ce_term";
    else if (!std::isfinite(loss.bt_invariance))
        culprit = "bt_invariance";
    else if (!std::isfinite(loss.bt_redundancy))
        culprit = "bt_redundancy";
    throw NumericError("training diverged at epoch " + std::to_string(epoch) + " batch " +
                       std::to_string(batch) + ": non-finite " + culprit);
}

} // namespace

void TrainConfig::validate() const {
    if (!(std::isfinite(learning_rate) && learning_rate > 0.0))
        throw ConfigError("train: learning_rate must be finite and > 0");
    if (!(std::isfinite(weight_decay) && weight_decay >= 0.0))
        throw ConfigError("train: weight_decay must be finite and >= 0");
    if (batch_size < 2)
        throw ConfigError("train: batch_size must be >= 2 (the embedding "
                          "cross-correlation needs at least two rows)");
    if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw ConfigError("train: adam betas must lie in [0, 1)");
    if (adam_eps <= 0.0) throw ConfigError("train: adam_eps must be > 0");
}

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& cfg, std::size_t param_count) {
    if (cfg.optimizer == OptimizerKind::sgd)
        return std::make_unique<SgdOptimizer>(cfg.learning_rate);
    return std::make_unique<AdamOptimizer>(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                                           cfg.adam_eps, param_count);
}

TrainResult train_stage(Network& net, const std::vector<const Sample*>& labeled,
                        const AugmentationConfig& aug_cfg, const LossWeights& weights,
                        const TrainConfig& cfg,
                        const std::vector<const Sample*>* val_samples) {
    cfg.validate();
    weights.validate();
    aug_cfg.validate();
    if (labeled.size() < 2)
        throw ConfigError("train: need at least 2 labeled samples, got " +
                          std::to_string(labeled.size()));
    for (const Sample* s : labeled)
        if (!s->label)
            throw ConsistencyError("train: sample " + std::to_string(s->id) + " has no label");
    const bool track_val =
        cfg.select_best_on_val && val_samples != nullptr && !val_samples->empty();

    const Rng base(cfg.seed);
    if (cfg.reinit_per_stage) net.reinit(mix_seed(cfg.seed, kStreamInit));

    auto optimizer = make_optimizer(cfg, net.params().size());
    const bool use_ssl = weights.gamma > 0.0;
    const CrossCorrelationOptions cc_opts{cfg.center_embeddings, 1e-12};
    const Rng view_base = base.derive(kStreamViews);

    TrainResult result;
    std::vector<std::size_t> order(labeled.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad;
    std::vector<double> best_params;
    double best_val = -1.0;
    int best_epoch = -1;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng = base.derive(kStreamShuffle).derive(static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order);

        EpochLog log;
        log.epoch = epoch;
        std::size_t seen = 0;
        std::size_t correct = 0;
        int batch_index = 0;

        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end =
                std::min(begin + static_cast<std::size_t>(cfg.batch_size), order.size());
            const std::size_t nb = end - begin;
            if (nb < 2) break; // a lone trailing sample cannot form a correlation batch

            std::vector<const Image*> x(nb);
            std::vector<int> labels(nb);
            for (std::size_t i = 0; i < nb; ++i) {
                const Sample* s = labeled[order[begin + i]];
                x[i] = &s->pixels;
                labels[i] = *s->label;
            }

            JointLossResult loss;
            Matrix logits;
            grad.assign(net.params().size(), 0.0);

            if (use_ssl) {
                // Views are drawn from a per-(sample, epoch) stream so the
                // distortions are independent of shuffle order.
                std::vector<ViewPair> views(nb);
                std::vector<const Image*> v1(nb), v2(nb);
                parallel_for(nb, [&](std::size_t i0, std::size_t i1) {
                    for (std::size_t i = i0; i < i1; ++i) {
                        const Sample* s = labeled[order[begin + i]];
                        Rng vr = view_base.derive(static_cast<std::uint64_t>(s->id) ^
                                                  static_cast<std::uint64_t>(epoch));
                        views[i] = make_views(s->pixels, aug_cfg, vr);
                    }
                });
                for (std::size_t i = 0; i < nb; ++i) {
                    v1[i] = &views[i].view1;
                    v2[i] = &views[i].view2;
                }

                const JointForward fwd = net.forward_joint(x, v1, v2, true);
                const Matrix c = cross_correlation(fwd.p1, fwd.p2, cc_opts);
                loss = joint_loss(fwd.logits, labels, c, weights);
                require_finite_loss(loss, epoch, batch_index);

                const Matrix dlogits = softmax_ce_grad(fwd.logits, labels);
                Matrix dc = barlow_twins_grad_wrt_c(c, weights.lambda_bt);
                for (auto& v : dc.a) v *= weights.gamma;
                const EmbeddingGrads dp =
                    cross_correlation_backward(fwd.p1, fwd.p2, dc, cc_opts);
                net.backward_joint(fwd, dlogits, dp.dz1, dp.dz2, grad);
                logits = fwd.logits;
            } else {
                const ClassifierForward fwd = net.forward_classifier(x, true);
                loss = joint_loss(fwd.logits, labels, Matrix(), weights);
                require_finite_loss(loss, epoch, batch_index);
                const Matrix dlogits = softmax_ce_grad(fwd.logits, labels);
                net.backward_classifier(fwd, dlogits, grad);
                logits = fwd.logits;
            }

            if (cfg.weight_decay > 0.0) {
                const auto& p = net.params();
                for (std::size_t i = 0; i < grad.size(); ++i)
                    grad[i] += cfg.weight_decay * p[i];
            }
            optimizer->step(net.params(), grad);

            for (std::size_t i = 0; i < nb; ++i)
                if (argmax_lowest(logits.row(static_cast<int>(i))) == labels[i]) ++correct;
            log.total_loss += loss.total * static_cast<double>(nb);
            log.ce_term += loss.ce_term * static_cast<double>(nb);
            log.bt_invariance += loss.bt_invariance * static_cast<double>(nb);
            log.bt_redundancy += loss.bt_redundancy * static_cast<double>(nb);
            seen += nb;
            ++batch_index;
        }

        if (seen > 0) {
            const double inv = 1.0 / static_cast<double>(seen);
            log.total_loss *= inv;
            log.ce_term *= inv;
            log.bt_invariance *= inv;
            log.bt_redundancy *= inv;
            log.train_accuracy = static_cast<double>(correct) * inv;
        }
        if (track_val) {
            log.val_accuracy = evaluate(net, *val_samples);
            if (best_epoch < 0 || *log.val_accuracy > best_val) {
                best_val = *log.val_accuracy;
                best_epoch = epoch;
                best_params = net.params();
            }
        }
        result.epochs.push_back(log);
    }
    if (track_val && best_epoch >= 0) {
        net.params() = best_params;
        result.best_epoch = best_epoch;
    }
    return result;
}

double evaluate(const Network& net, const std::vector<const Sample*>& eval_samples) {
    if (eval_samples.empty()) throw ConfigError("evaluate: empty evaluation set");
    std::vector<const Image*> xs(eval_samples.size());
    std::vector<int> labels(eval_samples.size());
    for (std::size_t i = 0; i < eval_samples.size(); ++i) {
        const Sample* s = eval_samples[i];
        if (!s->label)
            throw ConsistencyError("evaluate: sample " + std::to_string(s->id) +
                                   " has no label");
        xs[i] = &s->pixels;
        labels[i] = *s->label;
    }
    const Matrix logits = net.classify_logits(net.encode(xs));
    std::size_t correct = 0;
    for (int b = 0; b < logits.rows; ++b)
        if (argmax_lowest(logits.row(b)) == labels[b]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(eval_samples.size());
}

double grad_check(Network& net, const std::vector<const Image*>& x,
                  const std::vector<int>& labels, const std::vector<const Image*>& v1,
                  const std::vector<const Image*>& v2, const LossWeights& weights,
                  double step, const CrossCorrelationOptions& cc_opts) {
    if (step < 1e-6 || step > 1e-4)
        throw UsageError("grad_check: step must lie in [1e-6, 1e-4]");
    weights.validate();

    const bool use_ssl = weights.gamma > 0.0;
    const auto loss_at = [&]() {
        if (use_ssl) {
            const JointForward fwd = net.forward_joint(x, v1, v2, false);
            const Matrix c = cross_correlation(fwd.p1, fwd.p2, cc_opts);
            return joint_loss(fwd.logits, labels, c, weights).total;
        }
        const ClassifierForward fwd = net.forward_classifier(x, false);
        return joint_loss(fwd.logits, labels, Matrix(), weights).total;
    };

    // Analytic gradient.
    std::vector<double> analytic(net.params().size(), 0.0);
    if (use_ssl) {
        const JointForward fwd = net.forward_joint(x, v1, v2, true);
        const Matrix c = cross_correlation(fwd.p1, fwd.p2, cc_opts);
        const Matrix dlogits = softmax_ce_grad(fwd.logits, labels);
        Matrix dc = barlow_twins_grad_wrt_c(c, weights.lambda_bt);
        for (auto& v : dc.a) v *= weights.gamma;
        const EmbeddingGrads dp = cross_correlation_backward(fwd.p1, fwd.p2, dc, cc_opts);
        net.backward_joint(fwd, dlogits, dp.dz1, dp.dz2, analytic);
    } else {
        const ClassifierForward fwd = net.forward_classifier(x, true);
        const Matrix dlogits = softmax_ce_grad(fwd.logits, labels);
        net.backward_classifier(fwd, dlogits, analytic);
    }

    double worst = 0.0;
    auto& params = net.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + step;
        const double fp = loss_at();
        params[i] = saved - step;
        const double fm = loss_at();
        params[i] = saved;
        const double numeric = (fp - fm) / (2.0 * step);
        const double rel =
            std::abs(analytic[i] - numeric) /
            std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
        worst = std::max(worst, rel);
    }
    return worst;
}

} // namespace dalbt
