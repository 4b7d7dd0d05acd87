#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mstates/artifacts.hpp"
#include "mstates/corrmat.hpp"

namespace mstates {

/// Exit codes shared by the CLI and run_pipeline.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/// Maps the exception currently being handled to an exit code.
int exit_code_for_current_exception();

/// Stage subseeds: splitmix64(seed + stage_id).
std::uint64_t subseed(std::uint64_t seed, std::uint64_t stage_id);

/// `a:step:b` inclusive grid or comma list.
std::vector<double> parse_epsilon_grid(const std::string& text);
/// `a..b` inclusive range or comma list.
std::vector<int> parse_k_range(const std::string& text);

struct PipelineConfig {
    std::string prices;
    std::string sectors;  // optional
    std::string events;   // optional
    std::string output_dir = "mstates_out";

    int max_gap = 2;
    EpochSpec epochs{20, 1};
    std::vector<double> epsilons{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<int> k_values{2, 3, 4, 5, 6, 7, 8, 9, 10};
    int k_min = 4;
    int n_inits = 1000;
    std::uint64_t seed = 7;
    int mds_dim = 3;
    double mds_epsilon = 0.0;
    double threshold = 0.4;
    int window = 125;
    std::string sector_diagonal = "exclude_self_pairs";

    int rmt_n = 200;
    int rmt_t = 800;
    int rmt_ensemble = 50;
    int rmt_bins = 100;

    /// Applies one `key = value` setting; throws std::invalid_argument for an
    /// unknown key or bad value.
    void set(const std::string& key, const std::string& value);
    /// Range checks, plus existence of referenced input files.
    void validate() const;
};

/// Flat `key = value` text, `#` comments. Relative input paths are resolved
/// against base_dir.
PipelineConfig parse_config(const std::string& text, const std::string& base_dir = {});
PipelineConfig load_config(const std::string& path);

struct StageRecord {
    std::string name;
    std::string status;  // done | up_to_date | failed | not_run | not_applicable
    std::string inputs_hash;
    std::string artifact;
    std::vector<std::pair<std::string, std::string>> outputs;  // relative path, sha256
    std::string error;
    Json params;
};

struct PipelineResult {
    int exit_code = kExitOk;
    std::vector<StageRecord> stages;
    std::string manifest_path;
};

/// ingest -> corr -> rmt -> mds -> states -> sectors -> trajectory. Every
/// stage records its input hash, parameters and output hashes in
/// <output_dir>/manifest.json; a stage whose inputs and outputs are unchanged
/// since the last manifest is skipped unless `force`. A failed stage stops
/// all downstream stages.
PipelineResult run_pipeline(const PipelineConfig& config, bool force = false);

/// Writes the synthetic 20-stock fixture (prices.csv, sectors.csv,
/// events.csv, demo.conf) into dir and returns the config for it.
PipelineConfig write_demo_fixture(const std::string& dir, std::uint64_t seed = 2020);

}  // namespace mstates
