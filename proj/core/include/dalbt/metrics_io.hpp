#pragma once

#include "dalbt/active_loop.hpp"

#include <fstream>
#include <string>
#include <vector>

namespace dalbt {

inline constexpr int kMetricsSchemaVersion = 1;

// One stage record as a single JSON line: fixed key order, doubles printed
// with 17 significant digits so parse -> serialize -> parse is exact.
std::string metrics_to_json(const StageMetrics& m);

// Strict inverse: unknown keys rejected, every field except val_accuracy
// required.
StageMetrics metrics_from_json(const std::string& line);

std::vector<StageMetrics> load_metrics_file(const std::string& path);

// Same line with run_id and wall_time_s replaced by fixed placeholders, for
// determinism comparisons between runs.
std::string masked_metrics_line(const StageMetrics& m);

// Append-only line writer, flushed per record so a crashed run keeps every
// finished stage on disk.
class MetricsWriter {
public:
    explicit MetricsWriter(const std::string& path);
    void write(const StageMetrics& m);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
};

// Learning curves aggregated over seeds: one row per (strategy, stage) with
// the across-seed mean labeled size, mean accuracy, and sample std dev.
// Deterministic row order (strategy, then stage).
std::string export_curves_csv(const std::vector<StageMetrics>& records);

} // namespace dalbt
