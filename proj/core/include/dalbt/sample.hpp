#pragma once

#include "dalbt/image.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dalbt {

// Origin tag for samples drawn from the task's source dataset. Anything
// else marks an out-of-distribution source and is rejected by the oracle.
inline constexpr const char* kInDistOrigin = "in_dist";

struct Sample {
    int id = -1;
    Image pixels;
    std::optional<int> label;
    std::string origin = kInDistOrigin;

    bool in_distribution() const { return origin == kInDistOrigin; }
};

// Reassigns ids sequentially starting at first_id (file loaders emit
// 0..N-1; the experiment corpus re-bases appended sets).
void reindex_samples(std::vector<Sample>& samples, int first_id);

// Pointer view of a subset of a corpus, by id == index position.
std::vector<const Sample*> gather(const std::vector<Sample>& corpus, const std::vector<int>& ids);

} // namespace dalbt
