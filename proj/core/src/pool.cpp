#include "dalbt/pool.hpp"

#include "dalbt/error.hpp"
#include "dalbt/rng.hpp"

#include <algorithm>
#include <map>

namespace dalbt {

namespace {

bool sorted_contains(const std::vector<int>& v, int id) {
    return std::binary_search(v.begin(), v.end(), id);
}

void sorted_insert(std::vector<int>& v, int id) {
    v.insert(std::lower_bound(v.begin(), v.end(), id), id);
}

void sorted_erase(std::vector<int>& v, int id) {
    auto it = std::lower_bound(v.begin(), v.end(), id);
    if (it == v.end() || *it != id)
        throw ConsistencyError("pool: id " + std::to_string(id) + " not in expected set");
    v.erase(it);
}

} // namespace

bool Pool::is_labeled(int id) const { return sorted_contains(labeled, id); }
bool Pool::is_unlabeled(int id) const { return sorted_contains(unlabeled, id); }
bool Pool::was_rejected(int id) const { return sorted_contains(rejected, id); }

OracleSim OracleSim::from_samples(std::span<const Sample> samples) {
    OracleSim oracle;
    for (const auto& s : samples) {
        if (s.in_distribution()) {
            if (!s.label)
                throw ConsistencyError("oracle: in-distribution sample " + std::to_string(s.id) +
                                       " has no ground-truth label");
            oracle.truth_[s.id] = *s.label;
        } else {
            oracle.ood_.insert(s.id);
        }
    }
    return oracle;
}

bool OracleSim::knows(int id) const { return truth_.count(id) || ood_.count(id); }
bool OracleSim::is_in_distribution(int id) const { return truth_.count(id) > 0; }

int OracleSim::truth(int id) const {
    auto it = truth_.find(id);
    if (it == truth_.end())
        throw ConsistencyError("oracle: no ground truth for id " + std::to_string(id));
    return it->second;
}

SplitResult make_splits(std::span<const Sample> train_samples, const SplitConfig& cfg,
                        std::uint64_t seed) {
    const int n = static_cast<int>(train_samples.size());
    if (cfg.initial_labeled < 0 || cfg.val_size < 0 || cfg.test_size < 0)
        throw ConfigError("make_splits: negative split size");
    if (cfg.initial_labeled + cfg.val_size + cfg.test_size > n)
        throw ConfigError("make_splits: requested " +
                          std::to_string(cfg.initial_labeled + cfg.val_size + cfg.test_size) +
                          " samples from " + std::to_string(n));

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = train_samples[i].id;
    Rng rng(seed);
    rng.shuffle(order);

    SplitResult res;
    auto it = order.begin();
    res.test_ids.assign(it, it + cfg.test_size);
    it += cfg.test_size;
    res.val_ids.assign(it, it + cfg.val_size);
    it += cfg.val_size;
    std::vector<int> remainder(it, order.end());

    // Index samples by id for label lookups (ids need not be 0-based here).
    std::map<int, const Sample*> by_id;
    for (const auto& s : train_samples) by_id[s.id] = &s;

    const bool have_labels =
        std::all_of(remainder.begin(), remainder.end(),
                    [&](int id) { return by_id.at(id)->label.has_value(); });

    std::vector<int> initial;
    if (cfg.stratified && have_labels && cfg.initial_labeled > 0) {
        // Round-robin over classes in shuffled order until the quota is met.
        std::map<int, std::vector<int>> per_class;
        for (int id : remainder) per_class[*by_id.at(id)->label].push_back(id);
        std::vector<std::size_t> cursor(per_class.size(), 0);
        while (static_cast<int>(initial.size()) < cfg.initial_labeled) {
            bool any = false;
            std::size_t k = 0;
            for (auto& [cls, ids] : per_class) {
                if (cursor[k] < ids.size() &&
                    static_cast<int>(initial.size()) < cfg.initial_labeled) {
                    initial.push_back(ids[cursor[k]++]);
                    any = true;
                }
                ++k;
            }
            if (!any) break;
        }
    } else {
        initial.assign(remainder.begin(),
                       remainder.begin() + std::min<std::size_t>(cfg.initial_labeled, remainder.size()));
    }

    std::sort(initial.begin(), initial.end());
    res.pool.labeled = initial;
    for (int id : remainder)
        if (!sorted_contains(initial, id)) res.pool.unlabeled.push_back(id);
    std::sort(res.pool.unlabeled.begin(), res.pool.unlabeled.end());
    std::sort(res.val_ids.begin(), res.val_ids.end());
    std::sort(res.test_ids.begin(), res.test_ids.end());
    return res;
}

void inject_ood(Pool& pool, std::span<const Sample> ood_samples) {
    for (const auto& s : ood_samples) {
        if (s.in_distribution())
            throw ConsistencyError("inject_ood: sample " + std::to_string(s.id) +
                                   " carries the in-distribution origin");
        if (pool.is_labeled(s.id) || pool.is_unlabeled(s.id))
            throw ConsistencyError("inject_ood: id collision on " + std::to_string(s.id));
    }
    for (const auto& s : ood_samples) sorted_insert(pool.unlabeled, s.id);
}

AnnotationResult oracle_annotate(const OracleSim& oracle, const std::vector<int>& ids) {
    AnnotationResult res;
    for (int id : ids) {
        if (!oracle.knows(id))
            throw ConsistencyError("oracle: unknown id " + std::to_string(id));
        if (oracle.is_in_distribution(id))
            res.annotated.emplace_back(id, oracle.truth(id));
        else
            res.rejected.push_back(id);
    }
    return res;
}

void commit_labels(Pool& pool, const AnnotationResult& result) {
    for (const auto& [id, label] : result.annotated) {
        (void)label;
        sorted_erase(pool.unlabeled, id);
        sorted_insert(pool.labeled, id);
    }
    for (int id : result.rejected) {
        if (!pool.is_unlabeled(id))
            throw ConsistencyError("commit_labels: rejected id " + std::to_string(id) +
                                   " is not in the unlabeled pool");
        if (!pool.was_rejected(id)) sorted_insert(pool.rejected, id);
    }
    ++pool.stage;
}

} // namespace dalbt
