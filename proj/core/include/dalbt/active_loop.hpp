#pragma once

#include "dalbt/augment.hpp"
#include "dalbt/losses.hpp"
#include "dalbt/network.hpp"
#include "dalbt/pool.hpp"
#include "dalbt/sample.hpp"
#include "dalbt/trainer.hpp"
#include "dalbt/weibull_openset.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dalbt {

enum class Strategy { weibull_max, min_confidence, random };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

// One row of the per-stage metrics stream.
struct StageMetrics {
    int schema_version = 1;
    std::string run_id;
    std::uint64_t seed = 0;
    int stage = 0;
    std::string strategy;
    int labeled_size = 0;   // |L^t| this stage trained on
    int unlabeled_size = 0; // |U^t| before selection
    double test_accuracy = 0.0;
    std::optional<double> val_accuracy;
    int selected_count = 0;
    int ood_selected_count = 0;
    int ood_rejected_count = 0;
    double in_dist_precision = 1.0; // (selected - ood_selected) / selected
    double ce_term = 0.0;           // final training epoch's loss breakdown
    double bt_invariance = 0.0;
    double bt_redundancy = 0.0;
    double wall_time_s = 0.0;
    bool weibull_fallback = false; // outlier scoring degraded to random
};

struct LoopConfig {
    int stages = 1; // T
    int budget = 1; // b, oracle queries per stage
    Strategy strategy = Strategy::weibull_max;
    double labeled_cap_fraction = 0.4; // stop once labeled >= cap * train size
    bool exclude_rejected = false;     // mask previously rejected ids permanently
    // Drop candidates whose outlier score exceeds this before the top-b pick
    // (experimental; the default keeps every candidate eligible).
    std::optional<double> ood_reject_threshold;

    void validate() const;
};

struct DatasetSpec {
    std::string kind = "synth_blobs"; // synth_blobs | synth_digits | idx | cifar10
    std::uint64_t seed = 1234;        // generation seed, fixed across run seeds

    // synth_blobs
    int num_classes = 3;
    int dim = 8;
    int per_class = 200;
    double noise_sigma = 0.08;

    // synth_digits (28x28 glyphs, 10 classes)
    int train_count = 2000;
    int test_count = 1000;

    // idx
    std::string train_images, train_labels, test_images, test_labels;

    // cifar10
    std::vector<std::string> train_files;
    std::string test_file;

    void validate() const;
};

struct OodSpec {
    std::string kind = "none"; // none | synth_blobs | synth_noise | idx
    int count = 0;
    std::uint64_t seed = 4321;

    // synth_blobs: clusters placed after the in-distribution means
    int num_classes = 1;
    double noise_sigma = 0.08;

    // idx
    std::string images, labels;

    void validate() const;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    OodSpec ood;
    SplitConfig split;
    ArchSpec arch; // input dims and num_classes are filled from the dataset
    LossWeights weights;
    TrainConfig train; // seed is derived per stage; the field here is ignored
    AugmentationConfig augment;
    WeibullFitConfig weibull;
    LoopConfig loop;
    std::vector<std::uint64_t> seeds = {1};

    // The zero-argument config is a valid small blobs experiment, so a
    // minimal config file can leave everything defaulted. Blob samples are
    // 1x1xdim, where cropping is undefined, so the experiment-level default
    // is the identity crop; pixel datasets should set crop_scale_range.
    ExperimentConfig() {
        split.initial_labeled = 10;
        split.test_size = 100;
        arch.latent_dim = 16;
        arch.encoder_hidden = {32};
        arch.projector_hidden = {32};
        arch.projector_dim = 16;
        augment.crop_scale_range = {1.0, 1.0};
    }

    void validate() const;
};

// The experiment corpus: in-distribution train samples first, then the test
// set (when the dataset ships one), then OOD samples. Ids equal positions.
struct CorpusBundle {
    std::vector<Sample> corpus;
    int train_count = 0;
    std::vector<int> test_ids; // empty when the test set is carved by the split
    std::vector<int> ood_ids;
    int input_h = 0, input_w = 0, input_c = 0;
    int num_classes = 0;
};

CorpusBundle build_corpus(const DatasetSpec& ds, const OodSpec& ood);

// Everything a stage needs besides the evolving (pool, net) pair.
struct StageEnv {
    const std::vector<Sample>* corpus = nullptr;
    const OracleSim* oracle = nullptr;
    std::vector<int> test_ids;
    std::vector<int> val_ids;
    int train_size = 0; // in-distribution train size backing the labeled cap
    AugmentationConfig augment;
    LossWeights weights;
    TrainConfig train;
    WeibullFitConfig weibull;
    LoopConfig loop;
    std::uint64_t run_seed = 0;
    std::string run_id;
};

/* One stage: (1) train on the labeled pool, (2) fit per-class Weibull models
 * on correct latents, (3) score the unlabeled pool, (4) pick b candidates,
 * (5) ask the oracle (OOD comes back rejected), (6) commit, (7) evaluate.
 * Steps 2-3 are skipped for the random strategy and replaced by random
 * selection (with the metrics flag set) when no Weibull model can be fit.
 */
StageMetrics run_stage(Pool& pool, Network& net, const StageEnv& env);

// True once the stage count reaches T or the labeled pool reaches the
// configured fraction of the train size.
bool stopping_check(const Pool& pool, const LoopConfig& cfg, int train_size);

struct SeedRun {
    std::uint64_t seed = 0;
    std::vector<StageMetrics> stages;
    std::string error; // nonempty when this seed aborted mid-run
};

using MetricsSink = std::function<void(const StageMetrics&)>;

// Runs every configured seed; each stage record is handed to the sink the
// moment it exists, so partial results survive a later failure.
std::vector<SeedRun> run_experiment(const ExperimentConfig& cfg, const std::string& run_id,
                                    const MetricsSink& sink = {});

} // namespace dalbt
