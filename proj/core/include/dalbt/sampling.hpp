#pragma once

#include "dalbt/matrix.hpp"
#include "dalbt/rng.hpp"

#include <span>
#include <vector>

namespace dalbt {

struct AcquisitionResult {
    std::vector<int> selected_ids;
    // Per-selected-id score (outlier probability or confidence); empty for
    // the random strategy.
    std::vector<double> scores;
};

// Top-b by score, descending, ties broken by ascending id. Runs a partial
// selection (O(n) expected) rather than a full sort.
AcquisitionResult select_weibull_max(std::span<const int> ids,
                                     std::span<const double> scores, int b);

// b least-confident rows where confidence = max_k probs[row][k]; ascending
// confidence, ties by ascending id.
AcquisitionResult select_min_confidence(std::span<const int> ids, const Matrix& probs, int b);

// Uniform sample without replacement, deterministic given the rng state.
AcquisitionResult select_random(std::span<const int> ids, int b, Rng& rng);

} // namespace dalbt
