#pragma once

#include "lstmtrade/analytics.hpp"
#include "lstmtrade/lstm.hpp"
#include "lstmtrade/run_config.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lstmtrade {

struct GridSpec {
    std::vector<int> layers{2, 3};
    std::vector<int> hidden{32, 64, 128};
    std::vector<int> window{11, 22, 44};
    std::vector<double> dropout{0.0, 0.5, 0.7};
    int repeats = 1;  // seeds per config; CR is averaged over them

    void validate() const;
    std::size_t size() const { return layers.size() * hidden.size() * window.size() * dropout.size(); }
};

GridSpec parse_grid_spec(std::string_view json_text);
std::string grid_spec_json(const GridSpec& spec);

/// Lexicographic over (layers, hidden, window, dropout); every other field comes from `base`.
std::vector<NetworkConfig> enumerate(const GridSpec& spec, const NetworkConfig& base);

/// Seed for one config: a function of the global seed and the config fingerprint only.
std::uint64_t config_seed(std::uint64_t global_seed, const NetworkConfig& config);

struct GridResult {
    std::size_t index = 0;
    NetworkConfig config;
    std::string fingerprint;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string failure;
    std::optional<double> cr;
    std::vector<double> cr_repeats;
    std::optional<ReturnMetrics> returns;
    std::optional<ErrorMetrics> errors;
    std::size_t trades = 0;
    std::string policy_snapshot;  // JSON, final hyper-select policy
    double runtime_seconds = 0.0; // kept out of results.csv so it stays reproducible
};

nlohmann::json grid_result_json(const GridResult& r);
GridResult grid_result_from_json(const nlohmann::json& j);

struct GridContext {
    const PriceSeries& series;
    const PriceSeries* traded = nullptr;
    RunConfig run;
};

/// Phase 1 (policy build) and phase 2 (hyper-select backtest) for one configuration.
/// Divergence or data problems produce a failed result rather than an exception.
GridResult evaluate_config(const NetworkConfig& config, const GridContext& ctx, int repeats = 1);

/// Highest CR; ties go to fewer parameters, then the earlier grid position.
std::size_t select_best(const std::vector<GridResult>& results);

struct GridRun {
    std::vector<GridResult> results;  // grid order
    std::size_t best = 0;
    std::size_t reused = 0;           // results taken from the manifest
};

using GridProgressFn = std::function<void(const GridResult&, std::size_t done, std::size_t total)>;

/// Writes manifest.jsonl, results.csv, timings.csv and best.json into `out_dir`.
GridRun run_grid(const GridSpec& spec, const GridContext& ctx, const std::filesystem::path& out_dir, int workers,
                 bool resume, const GridProgressFn& progress = {});

std::string results_csv(const std::vector<GridResult>& results, const std::string& preamble = {});

}  // namespace lstmtrade
