#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qdiff/harness/config.hpp"

namespace qdiff::harness {

struct ExperimentInfo {
    std::string name;
    std::string description;
};

const std::vector<ExperimentInfo>& experiment_registry();

/// Appends the preconditions of config.name's operations that the config violates.
void experiment_preconditions(const ExperimentConfig& config, std::vector<std::string>& errors);

struct FileRecord {
    std::string path;  ///< relative to the output directory
    std::size_t rows = 0;
    std::vector<std::uint64_t> seeds;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct RunManifest {
    std::string config_hash;
    std::string version;
    std::vector<FileRecord> files;
    std::vector<StageTiming> timings;
    std::string failed_stage;  ///< empty on success
    std::string error;
};

/// Validates, runs and writes every output (CSV tables, summary.csv, manifest.json)
/// into config.output_dir. On a stage failure the outputs written so far and a
/// manifest naming the stage are kept, then the error is rethrown.
RunManifest run_experiment(const ExperimentConfig& config);

/// JSON with keys config_hash, version, files, timings (plus failed_stage/error on failure).
std::string manifest_json(const RunManifest& manifest);

}  // namespace qdiff::harness
