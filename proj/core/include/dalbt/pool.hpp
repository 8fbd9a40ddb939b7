#pragma once

#include "dalbt/sample.hpp"

#include <cstdint>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace dalbt {

// Labeled/unlabeled partition of the training corpus at stage t. Id sets are
// kept sorted; labeled and unlabeled are disjoint and their union is constant
// across stages. Rejected out-of-distribution ids stay in unlabeled and are
// additionally tracked in rejected.
struct Pool {
    std::vector<int> labeled;
    std::vector<int> unlabeled;
    std::vector<int> rejected;
    int stage = 0;

    int total() const { return static_cast<int>(labeled.size() + unlabeled.size()); }
    bool is_labeled(int id) const;
    bool is_unlabeled(int id) const;
    bool was_rejected(int id) const;
};

// Simulated labeling authority. In-distribution ids always return their
// ground-truth label; out-of-distribution ids always return a rejection.
class OracleSim {
public:
    static OracleSim from_samples(std::span<const Sample> samples);

    bool knows(int id) const;
    bool is_in_distribution(int id) const;
    int truth(int id) const;

private:
    std::unordered_map<int, int> truth_;
    std::unordered_set<int> ood_;
};

struct AnnotationResult {
    std::vector<std::pair<int, int>> annotated; // (id, label)
    std::vector<int> rejected;
};

struct SplitConfig {
    int initial_labeled = 0;
    int val_size = 0;
    int test_size = 0; // 0 when the test set comes from separate files
    bool stratified = true;
};

struct SplitResult {
    Pool pool;
    std::vector<int> val_ids;
    std::vector<int> test_ids;
};

// Deterministic split of train_samples into (initial labeled, val, test,
// unlabeled). The initial labeled pool is class-stratified when labels
// permit and cfg.stratified is set, otherwise uniform.
SplitResult make_splits(std::span<const Sample> train_samples, const SplitConfig& cfg,
                        std::uint64_t seed);

// Appends out-of-distribution sample ids to the unlabeled set. Every sample
// must carry a non-in_dist origin and an id unseen by the pool.
void inject_ood(Pool& pool, std::span<const Sample> ood_samples);

// Splits the requested ids into (annotated, rejected) per the oracle.
AnnotationResult oracle_annotate(const OracleSim& oracle, const std::vector<int>& ids);

// Moves annotated ids unlabeled -> labeled, records rejections, bumps stage.
void commit_labels(Pool& pool, const AnnotationResult& result);

} // namespace dalbt
