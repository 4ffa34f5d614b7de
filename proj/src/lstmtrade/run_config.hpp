#pragma once

#include "lstmtrade/arima.hpp"
#include "lstmtrade/lstm.hpp"
#include "lstmtrade/market_data.hpp"
#include "lstmtrade/policy.hpp"
#include "lstmtrade/simulator.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace lstmtrade {

enum class Strategy { proposed, up_down, buy_and_hold, arima, naive };
enum class PredictorKind { lstm, arima, naive };

struct ArimaSettings {
    int max_order = 3;
    RefitMode refit = RefitMode::growing;
    InterceptMode intercept = InterceptMode::automatic;
    std::optional<ArimaOrder> order;  // skips the order search when set
};

struct RunConfig {
    static constexpr int kVersion = 1;

    std::filesystem::path series_path;
    std::optional<std::filesystem::path> traded_path;
    std::optional<std::filesystem::path> predictions_path;

    PeriodSplit split{
        {Date::from_ymd(2005, 1, 1), Date::from_ymd(2007, 12, 31)},
        {Date::from_ymd(2008, 1, 1), Date::from_ymd(2009, 12, 31)},
        {Date::from_ymd(2010, 1, 4), Date::from_ymd(2018, 5, 1)},
    };
    NetworkConfig network;
    PolicyConfig policy;
    std::optional<AllocationPolicy> policy_override;

    Strategy strategy = Strategy::proposed;
    std::optional<PredictorKind> predictor;
    ExecutionTiming execution = ExecutionTiming::next_close;
    double capital = 28365.0;
    double fee_bps = 0.0;
    double risk_free = 0.0;
    ArimaSettings arima;

    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;

    /// Predictor implied by strategy and the optional explicit choice.
    PredictorKind effective_predictor() const;
    /// Throws ConfigError for inconsistent values or missing input files.
    void validate() const;

    nlohmann::json to_json() const;
    /// Hash of every setting except the seed and the output directory.
    std::string fingerprint() const;
    /// "# config=<fingerprint> seed=<seed>\n", prepended to every CSV output.
    std::string preamble() const;
};

/// Rejects unknown keys at every level and a missing or unsupported `version`.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json network_to_json(const NetworkConfig& config);
/// Applies the keys present in `j` on top of `base`.
NetworkConfig network_from_json(const nlohmann::json& j, NetworkConfig base = {});
std::string network_fingerprint(const NetworkConfig& config);

const char* to_string(Strategy s);
const char* to_string(PredictorKind p);

}  // namespace lstmtrade
