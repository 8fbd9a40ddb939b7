#include "dalbt/active_loop.hpp"

#include "dalbt/cifar_io.hpp"
#include "dalbt/error.hpp"
#include "dalbt/idx_io.hpp"
#include "dalbt/rng.hpp"
#include "dalbt/sampling.hpp"
#include "dalbt/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <utility>

namespace dalbt {
namespace {

// Seed streams consumed by the loop. The trainer derives its own internal
// streams from the per-stage seed, so these only need to be distinct from
// each other.
constexpr std::uint64_t kStreamSplit = 0x10;
constexpr std::uint64_t kStreamNetInit = 0x11;
constexpr std::uint64_t kStreamTrain = 0x12;
constexpr std::uint64_t kStreamSelect = 0x13;

AcquisitionResult pick_random(const std::vector<int>& candidates, const StageEnv& env, int stage) {
    Rng rng(mix_seed(mix_seed(env.run_seed, kStreamSelect), static_cast<std::uint64_t>(stage)));
    return select_random(candidates, env.loop.budget, rng);
}

} // namespace

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::weibull_max: return "weibull_max";
        case Strategy::min_confidence: return "min_confidence";
        case Strategy::random: return "random";
    }
    throw UsageError("unknown strategy enum value");
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "weibull_max") return Strategy::weibull_max;
    if (name == "min_confidence") return Strategy::min_confidence;
    if (name == "random") return Strategy::random;
    throw ConfigError("unknown acquisition strategy '" + name +
                      "' (expected weibull_max, min_confidence, or random)");
}

void LoopConfig::validate() const {
    if (stages < 1) throw ConfigError("loop.stages must be at least 1");
    if (budget < 1) throw ConfigError("loop.budget must be at least 1");
    if (!(labeled_cap_fraction > 0.0) || labeled_cap_fraction > 1.0)
        throw ConfigError("loop.labeled_cap_fraction must be in (0, 1]");
    if (ood_reject_threshold &&
        (!std::isfinite(*ood_reject_threshold) || *ood_reject_threshold < 0.0 ||
         *ood_reject_threshold > 1.0))
        throw ConfigError("loop.ood_reject_threshold must be a probability in [0, 1]");
}

void DatasetSpec::validate() const {
    if (kind == "synth_blobs") {
        if (num_classes < 2) throw ConfigError("dataset.num_classes must be at least 2");
        if (dim < 1) throw ConfigError("dataset.dim must be positive");
        if (per_class < 1) throw ConfigError("dataset.per_class must be positive");
        if (!(noise_sigma >= 0.0)) throw ConfigError("dataset.noise_sigma must be >= 0");
    } else if (kind == "synth_digits") {
        if (train_count < 1) throw ConfigError("dataset.train_count must be positive");
        if (test_count < 0) throw ConfigError("dataset.test_count must be >= 0");
    } else if (kind == "idx") {
        if (train_images.empty() || train_labels.empty() || test_images.empty() ||
            test_labels.empty())
            throw ConfigError("dataset.kind 'idx' needs train/test image and label paths");
    } else if (kind == "cifar10") {
        if (train_files.empty() || test_file.empty())
            throw ConfigError("dataset.kind 'cifar10' needs train_files and test_file");
    } else {
        throw ConfigError("unknown dataset.kind '" + kind +
                          "' (expected synth_blobs, synth_digits, idx, or cifar10)");
    }
}

void OodSpec::validate() const {
    if (kind == "none") {
        if (count != 0) throw ConfigError("ood.count must be 0 when ood.kind is 'none'");
        return;
    }
    if (count < 1) throw ConfigError("ood.count must be positive when an OOD source is set");
    if (kind == "synth_blobs") {
        if (num_classes < 1) throw ConfigError("ood.num_classes must be positive");
        if (!(noise_sigma >= 0.0)) throw ConfigError("ood.noise_sigma must be >= 0");
    } else if (kind == "synth_noise") {
        // dims follow the dataset
    } else if (kind == "idx") {
        if (images.empty() || labels.empty())
            throw ConfigError("ood.kind 'idx' needs images and labels paths");
    } else {
        throw ConfigError("unknown ood.kind '" + kind +
                          "' (expected none, synth_blobs, synth_noise, or idx)");
    }
}

void ExperimentConfig::validate() const {
    dataset.validate();
    ood.validate();
    weights.validate();
    train.validate();
    augment.validate();
    weibull.validate();
    loop.validate();
    if (seeds.empty()) throw ConfigError("seeds must list at least one run seed");
    // Input dims and num_classes come from the dataset; check the rest now.
    if (arch.latent_dim < 1) throw ConfigError("arch.latent_dim must be positive");
    if (!arch.encoder_hidden.empty() && !arch.conv_channels.empty())
        throw ConfigError("arch.encoder_hidden and arch.conv_channels are mutually exclusive");
    if (arch.projector_dim < 0) throw ConfigError("arch.projector_dim must be >= 0");
    if (arch.projector_dim == 0 && !arch.projector_hidden.empty())
        throw ConfigError("arch.projector_hidden must be empty when projector_dim is 0");
    if (split.initial_labeled < 2)
        throw ConfigError("split.initial_labeled must be at least 2 (training needs two samples)");
    if (split.val_size < 0 || split.test_size < 0)
        throw ConfigError("split sizes must be >= 0");
    if (ood.kind == "synth_blobs" && dataset.kind != "synth_blobs")
        throw ConfigError("ood.kind 'synth_blobs' requires a synth_blobs dataset");
    bool dataset_has_test = dataset.kind != "synth_blobs" &&
                            !(dataset.kind == "synth_digits" && dataset.test_count == 0);
    if (dataset_has_test && split.test_size != 0)
        throw ConfigError("dataset provides its own test set; set split.test_size to 0");
    if (!dataset_has_test && split.test_size < 1)
        throw ConfigError("split.test_size must be positive when the dataset has no test set");
}

CorpusBundle build_corpus(const DatasetSpec& ds, const OodSpec& ood) {
    ds.validate();
    ood.validate();

    CorpusBundle b;
    std::vector<Sample> train, test;
    if (ds.kind == "synth_blobs") {
        auto means = default_blob_means(ds.num_classes, ds.dim);
        train = synth_blobs(ds.num_classes, ds.dim, ds.per_class, means, ds.noise_sigma, ds.seed);
    } else if (ds.kind == "synth_digits") {
        train = synth_digits(ds.train_count, 28, 28, ds.seed);
        if (ds.test_count > 0)
            test = synth_digits(ds.test_count, 28, 28, mix_seed(ds.seed, 0x7e57));
    } else if (ds.kind == "idx") {
        train = load_idx(ds.train_images, ds.train_labels);
        test = load_idx(ds.test_images, ds.test_labels);
    } else {
        train = load_cifar_binary(ds.train_files);
        test = load_cifar_binary({ds.test_file});
    }
    if (train.empty()) throw ConsistencyError("dataset produced no training samples");

    b.input_h = train.front().pixels.h;
    b.input_w = train.front().pixels.w;
    b.input_c = train.front().pixels.c;
    int max_label = -1;
    for (const Sample& s : train) {
        if (!s.label) throw ConsistencyError("train sample without a label in " + ds.kind);
        max_label = std::max(max_label, *s.label);
    }
    b.num_classes = max_label + 1;
    if (b.num_classes < 2) throw ConsistencyError("dataset has fewer than two classes");

    std::vector<Sample> oods;
    if (ood.kind == "synth_blobs") {
        // Clusters continue the deterministic mean sequence past the
        // in-distribution classes, so they are distinct by construction.
        auto all_means = default_blob_means(ds.num_classes + ood.num_classes, ds.dim);
        std::vector<std::vector<double>> means(all_means.begin() + ds.num_classes,
                                               all_means.end());
        int per = (ood.count + ood.num_classes - 1) / ood.num_classes;
        oods = synth_blobs(ood.num_classes, ds.dim, per, means, ood.noise_sigma, ood.seed,
                           "ood_blobs");
        oods.resize(static_cast<std::size_t>(ood.count));
    } else if (ood.kind == "synth_noise") {
        oods = synth_noise(ood.count, b.input_h, b.input_w, b.input_c, ood.seed, "ood_noise");
    } else if (ood.kind == "idx") {
        oods = load_idx(ood.images, ood.labels, "ood_idx");
        if (static_cast<int>(oods.size()) < ood.count)
            throw ConfigError("ood.count exceeds the size of the OOD dataset");
        oods.resize(static_cast<std::size_t>(ood.count));
    }
    for (Sample& s : oods) {
        if (s.pixels.h != b.input_h || s.pixels.w != b.input_w || s.pixels.c != b.input_c)
            throw ConsistencyError("OOD image shape does not match the dataset");
        s.label.reset(); // source labels belong to a different task
    }

    b.train_count = static_cast<int>(train.size());
    b.corpus = std::move(train);
    if (!test.empty()) {
        b.test_ids.reserve(test.size());
        for (std::size_t i = 0; i < test.size(); ++i)
            b.test_ids.push_back(b.train_count + static_cast<int>(i));
        b.corpus.insert(b.corpus.end(), std::make_move_iterator(test.begin()),
                        std::make_move_iterator(test.end()));
    }
    if (!oods.empty()) {
        int first = static_cast<int>(b.corpus.size());
        b.ood_ids.reserve(oods.size());
        for (std::size_t i = 0; i < oods.size(); ++i)
            b.ood_ids.push_back(first + static_cast<int>(i));
        b.corpus.insert(b.corpus.end(), std::make_move_iterator(oods.begin()),
                        std::make_move_iterator(oods.end()));
    }
    reindex_samples(b.corpus, 0);
    return b;
}

bool stopping_check(const Pool& pool, const LoopConfig& cfg, int train_size) {
    if (pool.stage >= cfg.stages) return true;
    double cap = cfg.labeled_cap_fraction * static_cast<double>(train_size);
    return static_cast<double>(pool.labeled.size()) >= cap;
}

StageMetrics run_stage(Pool& pool, Network& net, const StageEnv& env) {
    const auto t0 = std::chrono::steady_clock::now();
    if (env.corpus == nullptr || env.oracle == nullptr)
        throw UsageError("run_stage needs a corpus and an oracle");
    if (pool.labeled.size() < 2)
        throw ConsistencyError("stage " + std::to_string(pool.stage) +
                               ": labeled pool has fewer than two samples");

    StageMetrics m;
    m.run_id = env.run_id;
    m.seed = env.run_seed;
    m.stage = pool.stage;
    m.strategy = to_string(env.loop.strategy);
    m.labeled_size = static_cast<int>(pool.labeled.size());
    m.unlabeled_size = static_cast<int>(pool.unlabeled.size());

    // 1. Train on the current labeled pool with a stage-derived seed.
    auto labeled_samples = gather(*env.corpus, pool.labeled);
    TrainConfig tc = env.train;
    tc.seed = mix_seed(mix_seed(env.run_seed, kStreamTrain), static_cast<std::uint64_t>(pool.stage));
    std::vector<const Sample*> val_samples;
    if (!env.val_ids.empty()) val_samples = gather(*env.corpus, env.val_ids);
    TrainResult tr = train_stage(net, labeled_samples, env.augment, env.weights, tc,
                                 val_samples.empty() ? nullptr : &val_samples);
    if (!tr.epochs.empty()) {
        const EpochLog& last = tr.epochs.back();
        m.ce_term = last.ce_term;
        m.bt_invariance = last.bt_invariance;
        m.bt_redundancy = last.bt_redundancy;
    }

    std::vector<int> candidates;
    if (env.loop.exclude_rejected) {
        candidates.reserve(pool.unlabeled.size());
        for (int id : pool.unlabeled)
            if (!pool.was_rejected(id)) candidates.push_back(id);
    } else {
        candidates = pool.unlabeled;
    }

    // 2-4. Score the candidates and pick the stage batch.
    AcquisitionResult acq;
    if (candidates.empty()) {
        // nothing left to ask about; the stage still trains and evaluates
    } else if (env.loop.strategy == Strategy::random) {
        acq = pick_random(candidates, env, pool.stage);
    } else if (env.loop.strategy == Strategy::min_confidence) {
        auto cand = gather(*env.corpus, candidates);
        std::vector<const Image*> images;
        images.reserve(cand.size());
        for (const Sample* s : cand) images.push_back(&s->pixels);
        Matrix probs = net.classify(net.encode(images));
        acq = select_min_confidence(candidates, probs, env.loop.budget);
    } else {
        try {
            OpenSetModel model = fit_openset_model(net, labeled_samples, env.weibull);
            auto cand = gather(*env.corpus, candidates);
            std::vector<double> scores = score_outliers(net, model, cand);
            std::vector<int> ids = candidates;
            if (env.loop.ood_reject_threshold) {
                std::vector<int> kept_ids;
                std::vector<double> kept_scores;
                for (std::size_t i = 0; i < ids.size(); ++i) {
                    if (scores[i] <= *env.loop.ood_reject_threshold) {
                        kept_ids.push_back(ids[i]);
                        kept_scores.push_back(scores[i]);
                    }
                }
                ids = std::move(kept_ids);
                scores = std::move(kept_scores);
            }
            acq = select_weibull_max(ids, scores, env.loop.budget);
        } catch (const StrategyUnavailableError&) {
            acq = pick_random(candidates, env, pool.stage);
            m.weibull_fallback = true;
        }
    }

    m.selected_count = static_cast<int>(acq.selected_ids.size());
    for (int id : acq.selected_ids)
        if (!env.oracle->is_in_distribution(id)) ++m.ood_selected_count;
    m.in_dist_precision =
        m.selected_count == 0
            ? 1.0
            : static_cast<double>(m.selected_count - m.ood_selected_count) / m.selected_count;

    // 5-6. Oracle annotation and pool commit.
    AnnotationResult ann = oracle_annotate(*env.oracle, acq.selected_ids);
    m.ood_rejected_count = static_cast<int>(ann.rejected.size());
    commit_labels(pool, ann);

    // 7. Evaluate the stage model.
    m.test_accuracy = evaluate(net, gather(*env.corpus, env.test_ids));
    if (!val_samples.empty()) m.val_accuracy = evaluate(net, val_samples);

    m.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return m;
}

std::vector<SeedRun> run_experiment(const ExperimentConfig& cfg, const std::string& run_id,
                                    const MetricsSink& sink) {
    cfg.validate();
    CorpusBundle bundle = build_corpus(cfg.dataset, cfg.ood);
    OracleSim oracle = OracleSim::from_samples(bundle.corpus);

    ArchSpec arch = cfg.arch;
    arch.input_h = bundle.input_h;
    arch.input_w = bundle.input_w;
    arch.input_c = bundle.input_c;
    arch.num_classes = bundle.num_classes;
    arch.validate();

    std::span<const Sample> train_span(bundle.corpus.data(),
                                       static_cast<std::size_t>(bundle.train_count));
    // OOD samples are the corpus tail.
    std::span<const Sample> ood_span(
        bundle.corpus.data() + (bundle.corpus.size() - bundle.ood_ids.size()),
        bundle.ood_ids.size());

    std::vector<SeedRun> runs;
    runs.reserve(cfg.seeds.size());
    for (std::uint64_t seed : cfg.seeds) {
        SeedRun run;
        run.seed = seed;
        try {
            SplitResult sr =
                make_splits(train_span, cfg.split, mix_seed(seed, kStreamSplit));
            Pool pool = sr.pool;
            inject_ood(pool, ood_span);

            StageEnv env;
            env.corpus = &bundle.corpus;
            env.oracle = &oracle;
            env.test_ids = bundle.test_ids.empty() ? sr.test_ids : bundle.test_ids;
            env.val_ids = sr.val_ids;
            // D_train excludes the carved test set but keeps validation.
            env.train_size = bundle.train_count - static_cast<int>(sr.test_ids.size());
            env.augment = cfg.augment;
            env.weights = cfg.weights;
            env.train = cfg.train;
            env.weibull = cfg.weibull;
            env.loop = cfg.loop;
            env.run_seed = seed;
            env.run_id = run_id;

            Network net(arch, mix_seed(seed, kStreamNetInit));
            while (!stopping_check(pool, cfg.loop, env.train_size)) {
                StageMetrics m = run_stage(pool, net, env);
                if (sink) sink(m);
                run.stages.push_back(std::move(m));
            }
        } catch (const std::exception& e) {
            run.error = e.what();
        }
        runs.push_back(std::move(run));
    }
    return runs;
}

} // namespace dalbt
