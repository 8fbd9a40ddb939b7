#pragma once

#include "dalbt/active_loop.hpp"

#include <cstdint>
#include <string>

namespace dalbt {

// Strict JSON -> ExperimentConfig: unknown keys are rejected with their full
// path, types are checked, and the result passes ExperimentConfig::validate().
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Fully resolved snapshot with every field explicit, keys sorted, so the hash
// is independent of the source file's key order and whitespace.
std::string dump_config(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(std::string_view s);

// Hash of the canonical snapshot, as 16 lowercase hex digits.
std::string config_hash_hex(const ExperimentConfig& cfg);

// "<UTC timestamp>-<config hash>"; unique per invocation, masked in
// determinism comparisons.
std::string make_run_id(const ExperimentConfig& cfg);

struct SeedOutput {
    std::uint64_t seed = 0;
    std::string metrics_path;
    int stages = 0;
    std::string error; // nonempty when this seed aborted
};

struct RunManifest {
    int artifact_version = 1;
    std::string run_id;
    std::string config_hash;
    std::string config_json; // resolved snapshot
    std::vector<SeedOutput> seeds;
    bool partial = false; // true when any seed holds an error
};

std::string manifest_to_json(const RunManifest& m);
void write_manifest(const RunManifest& m, const std::string& path);

} // namespace dalbt
