#include "dalbt/sampling.hpp"

#include "dalbt/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace dalbt {

namespace {

struct Scored {
    int id;
    double score;
};

// Shared partial-selection core: pick k best under cmp, emit in cmp order.
AcquisitionResult take_best(std::vector<Scored> pool, int b,
                            bool (*cmp)(const Scored&, const Scored&)) {
    if (b < 0) throw UsageError("selection: budget must be >= 0");
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(b), pool.size());
    AcquisitionResult out;
    if (k == 0) return out;
    std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     pool.end(), cmp);
    std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k), cmp);
    out.selected_ids.reserve(k);
    out.scores.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.selected_ids.push_back(pool[i].id);
        out.scores.push_back(pool[i].score);
    }
    return out;
}

bool by_score_desc(const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
}

bool by_score_asc(const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.id < b.id;
}

} // namespace

AcquisitionResult select_weibull_max(std::span<const int> ids,
                                     std::span<const double> scores, int b) {
    if (ids.size() != scores.size())
        throw UsageError("select_weibull_max: ids and scores must align");
    std::vector<Scored> pool(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!std::isfinite(scores[i]))
            throw NumericError("select_weibull_max: non-finite score for id " +
                               std::to_string(ids[i]));
        pool[i] = {ids[i], scores[i]};
    }
    return take_best(std::move(pool), b, by_score_desc);
}

AcquisitionResult select_min_confidence(std::span<const int> ids, const Matrix& probs,
                                        int b) {
    if (static_cast<std::size_t>(probs.rows) != ids.size())
        throw UsageError("select_min_confidence: ids and probability rows must align");
    std::vector<Scored> pool(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto row = probs.row(static_cast<int>(i));
        double sum = 0.0, conf = 0.0;
        for (double p : row) {
            if (!(p >= 0.0 && p <= 1.0 + 1e-9))
                throw ConsistencyError("select_min_confidence: invalid probability for id " +
                                       std::to_string(ids[i]));
            sum += p;
            conf = std::max(conf, p);
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw ConsistencyError("select_min_confidence: probabilities for id " +
                                   std::to_string(ids[i]) + " sum to " + std::to_string(sum));
        pool[i] = {ids[i], conf};
    }
    return take_best(std::move(pool), b, by_score_asc);
}

AcquisitionResult select_random(std::span<const int> ids, int b, Rng& rng) {
    if (b < 0) throw UsageError("selection: budget must be >= 0");
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(b), ids.size());
    std::vector<int> pool(ids.begin(), ids.end());
    AcquisitionResult out;
    out.selected_ids.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(pool.size() - i));
        std::swap(pool[i], pool[j]);
        out.selected_ids.push_back(pool[i]);
    }
    return out;
}

} // namespace dalbt
