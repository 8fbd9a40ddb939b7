#include "dalbt/sample.hpp"

#include "dalbt/error.hpp"

namespace dalbt {

void reindex_samples(std::vector<Sample>& samples, int first_id) {
    int id = first_id;
    for (auto& s : samples) s.id = id++;
}

std::vector<const Sample*> gather(const std::vector<Sample>& corpus, const std::vector<int>& ids) {
    std::vector<const Sample*> out;
    out.reserve(ids.size());
    for (int id : ids) {
        if (id < 0 || id >= static_cast<int>(corpus.size()))
            throw ConsistencyError("gather: id " + std::to_string(id) + " outside corpus");
        out.push_back(&corpus[id]);
    }
    return out;
}

} // namespace dalbt
