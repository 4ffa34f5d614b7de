#include "lstmtrade/run_config.hpp"

#include "lstmtrade/errors.hpp"
#include "lstmtrade/io.hpp"

#include <algorithm>
#include <set>

namespace lstmtrade {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
    }
}

Date parse_date(const json& j, const std::string& where) {
    if (!j.is_string()) throw ConfigError(where + ": dates must be strings");
    auto d = Date::parse(j.get<std::string>());
    if (!d) throw ConfigError(where + ": invalid date '" + j.get<std::string>() + "'");
    return *d;
}

DateRange parse_range(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) throw ConfigError(where + " must be [first, last]");
    return {parse_date(j[0], where), parse_date(j[1], where)};
}

json range_json(const DateRange& r) { return json::array({r.first.to_string(), r.last.to_string()}); }

Strategy parse_strategy(const std::string& s) {
    if (s == "proposed") return Strategy::proposed;
    if (s == "up_down") return Strategy::up_down;
    if (s == "buy_and_hold") return Strategy::buy_and_hold;
    if (s == "arima") return Strategy::arima;
    if (s == "naive") return Strategy::naive;
    throw ConfigError("unknown strategy '" + s + "'");
}

PredictorKind parse_predictor(const std::string& s) {
    if (s == "lstm") return PredictorKind::lstm;
    if (s == "arima") return PredictorKind::arima;
    if (s == "naive") return PredictorKind::naive;
    throw ConfigError("unknown predictor '" + s + "'");
}

QuantileBasis parse_basis(const std::string& s) {
    if (s == "absolute") return QuantileBasis::absolute;
    if (s == "signed") return QuantileBasis::signed_;
    throw ConfigError("unknown quantile basis '" + s + "'");
}

InterceptMode parse_intercept(const std::string& s) {
    if (s == "auto") return InterceptMode::automatic;
    if (s == "always") return InterceptMode::always;
    if (s == "never") return InterceptMode::never;
    throw ConfigError("unknown intercept mode '" + s + "'");
}

const char* intercept_name(InterceptMode m) {
    switch (m) {
        case InterceptMode::always: return "always";
        case InterceptMode::never: return "never";
        case InterceptMode::automatic: break;
    }
    return "auto";
}

AllocationPolicy parse_override(const json& j) {
    check_keys(j, {"q", "a"}, "policy.override");
    AllocationPolicy p;
    p.q = get<std::vector<double>>(j, "q", "policy.override");
    const json& a = j.at("a");
    if (!a.is_array()) throw ConfigError("policy.override.a must be an array");
    for (const auto& v : a) {
        if (v.is_string() && v.get<std::string>() == "SELL") {
            p.a.push_back(Allocation::sell());
        } else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
            p.a.push_back(Allocation::units(v.get<std::int64_t>()));
        } else {
            throw ConfigError("policy.override.a entries must be \"SELL\" or non-negative integers");
        }
    }
    p.validate();
    return p;
}

json override_json(const AllocationPolicy& p) {
    json a = json::array();
    for (const auto& x : p.a) {
        if (x.is_sell()) {
            a.push_back("SELL");
        } else {
            a.push_back(x.units());
        }
    }
    return {{"q", p.q}, {"a", a}};
}

}  // namespace

json network_to_json(const NetworkConfig& c) {
    return {{"layers", c.num_layers},
            {"hidden", c.hidden_size},
            {"window", c.window},
            {"dropout", c.dropout},
            {"iterations", c.iterations},
            {"batch_size", c.batch_size},
            {"per_position_bias", c.per_position_bias},
            {"learning_rate", c.learning_rate},
            {"decay_rate", c.decay_rate},
            {"decay_steps", c.decay_steps},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"adam_epsilon", c.adam_epsilon},
            {"normalize", c.normalize},
            {"warm_start", c.warm_start}};
}

NetworkConfig network_from_json(const json& j, NetworkConfig c) {
    const std::string where = "network";
    check_keys(j,
               {"layers", "hidden", "window", "dropout", "iterations", "batch_size", "per_position_bias",
                "learning_rate", "decay_rate", "decay_steps", "beta1", "beta2", "adam_epsilon", "normalize",
                "warm_start"},
               where);
    if (j.contains("layers")) c.num_layers = get<int>(j, "layers", where);
    if (j.contains("hidden")) c.hidden_size = get<int>(j, "hidden", where);
    if (j.contains("window")) c.window = get<int>(j, "window", where);
    if (j.contains("dropout")) c.dropout = get<double>(j, "dropout", where);
    if (j.contains("iterations")) c.iterations = get<int>(j, "iterations", where);
    if (j.contains("batch_size")) c.batch_size = get<int>(j, "batch_size", where);
    if (j.contains("per_position_bias")) c.per_position_bias = get<bool>(j, "per_position_bias", where);
    if (j.contains("learning_rate")) c.learning_rate = get<double>(j, "learning_rate", where);
    if (j.contains("decay_rate")) c.decay_rate = get<double>(j, "decay_rate", where);
    if (j.contains("decay_steps")) c.decay_steps = get<int>(j, "decay_steps", where);
    if (j.contains("beta1")) c.beta1 = get<double>(j, "beta1", where);
    if (j.contains("beta2")) c.beta2 = get<double>(j, "beta2", where);
    if (j.contains("adam_epsilon")) c.adam_epsilon = get<double>(j, "adam_epsilon", where);
    if (j.contains("normalize")) c.normalize = get<bool>(j, "normalize", where);
    if (j.contains("warm_start")) c.warm_start = get<bool>(j, "warm_start", where);
    return c;
}

std::string network_fingerprint(const NetworkConfig& config) {
    return hex64(fnv1a64(network_to_json(config).dump()));
}

PredictorKind RunConfig::effective_predictor() const {
    switch (strategy) {
        case Strategy::arima: return PredictorKind::arima;
        case Strategy::naive: return PredictorKind::naive;
        default: break;
    }
    return predictor.value_or(PredictorKind::lstm);
}

void RunConfig::validate() const {
    split.validate();
    network.validate();
    policy.validate();
    if (!(capital > 0.0)) throw ConfigError("capital must be positive");
    if (fee_bps < 0.0) throw ConfigError("fee_bps must be non-negative");
    if (arima.max_order < 0 || arima.max_order > 5) throw ConfigError("arima.max_order must be within 0..5");
    if (predictor && (strategy == Strategy::arima || strategy == Strategy::naive) &&
        *predictor != effective_predictor()) {
        throw ConfigError(std::string("strategy '") + to_string(strategy) + "' fixes the predictor to '" +
                          to_string(effective_predictor()) + "'");
    }
    if (predictor && strategy == Strategy::buy_and_hold) {
        throw ConfigError("buy_and_hold does not use a predictor");
    }
    if (policy_override && strategy != Strategy::proposed && strategy != Strategy::arima &&
        strategy != Strategy::naive) {
        throw ConfigError("policy.override applies only to the proposed strategy");
    }
    if (series_path.empty()) throw ConfigError("data.series is required");
    auto must_exist = [](const std::filesystem::path& p, const char* what) {
        if (!std::filesystem::is_regular_file(p)) {
            throw ConfigError(std::string(what) + " file not found: " + p.string());
        }
    };
    must_exist(series_path, "data.series");
    if (traded_path) must_exist(*traded_path, "data.traded");
    if (predictions_path) must_exist(*predictions_path, "data.predictions");
}

json RunConfig::to_json() const {
    json j;
    j["version"] = kVersion;
    json data = {{"series", series_path.string()}};
    if (traded_path) data["traded"] = traded_path->string();
    if (predictions_path) data["predictions"] = predictions_path->string();
    j["data"] = data;
    j["periods"] = {{"policy_build", range_json(split.policy_build)},
                    {"hyper_select", range_json(split.hyper_select)},
                    {"out_of_sample", range_json(split.out_of_sample)}};
    j["network"] = network_to_json(network);
    json pol = {{"fractions", policy.fractions},
                {"epsilon", policy.epsilon},
                {"bootstrap_steps", policy.bootstrap_steps},
                {"basis", policy.basis == QuantileBasis::absolute ? "absolute" : "signed"},
                {"min_samples", policy.min_samples}};
    if (policy_override) pol["override"] = override_json(*policy_override);
    j["policy"] = pol;
    j["strategy"] = to_string(strategy);
    if (predictor) j["predictor"] = to_string(*predictor);
    j["execution"] = to_string(execution);
    j["capital"] = capital;
    j["fee_bps"] = fee_bps;
    j["risk_free"] = risk_free;
    json ar = {{"max_order", arima.max_order},
               {"refit", to_string(arima.refit)},
               {"intercept", intercept_name(arima.intercept)}};
    if (arima.order) ar["order"] = {arima.order->p, arima.order->d, arima.order->q};
    j["arima"] = ar;
    j["output_dir"] = output_dir.string();
    j["seed"] = seed;
    return j;
}

std::string RunConfig::fingerprint() const {
    json j = to_json();
    j.erase("output_dir");
    j.erase("seed");
    return hex64(fnv1a64(j.dump()));
}

std::string RunConfig::preamble() const {
    return "# config=" + fingerprint() + " seed=" + std::to_string(seed) + "\n";
}

RunConfig parse_run_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(j,
               {"version", "data", "periods", "network", "policy", "strategy", "predictor", "execution", "capital",
                "fee_bps", "risk_free", "arima", "output_dir", "seed"},
               "config");
    if (!j.contains("version")) throw ConfigError("config is missing 'version'");
    if (get<int>(j, "version", "config") != RunConfig::kVersion) {
        throw ConfigError("unsupported config version " + j["version"].dump());
    }

    RunConfig c;
    if (!j.contains("data")) throw ConfigError("config is missing 'data'");
    const json& data = j["data"];
    check_keys(data, {"series", "traded", "predictions"}, "data");
    c.series_path = get<std::string>(data, "series", "data");
    if (data.contains("traded")) c.traded_path = get<std::string>(data, "traded", "data");
    if (data.contains("predictions")) c.predictions_path = get<std::string>(data, "predictions", "data");

    if (j.contains("periods")) {
        const json& p = j["periods"];
        check_keys(p, {"policy_build", "hyper_select", "out_of_sample"}, "periods");
        if (p.contains("policy_build")) c.split.policy_build = parse_range(p["policy_build"], "periods.policy_build");
        if (p.contains("hyper_select")) c.split.hyper_select = parse_range(p["hyper_select"], "periods.hyper_select");
        if (p.contains("out_of_sample")) {
            c.split.out_of_sample = parse_range(p["out_of_sample"], "periods.out_of_sample");
        }
    }
    if (j.contains("network")) c.network = network_from_json(j["network"]);
    if (j.contains("policy")) {
        const json& p = j["policy"];
        check_keys(p, {"fractions", "epsilon", "bootstrap_steps", "basis", "min_samples", "override"}, "policy");
        if (p.contains("fractions")) c.policy.fractions = get<std::vector<double>>(p, "fractions", "policy");
        if (p.contains("epsilon")) c.policy.epsilon = get<double>(p, "epsilon", "policy");
        if (p.contains("bootstrap_steps")) c.policy.bootstrap_steps = get<std::size_t>(p, "bootstrap_steps", "policy");
        if (p.contains("basis")) c.policy.basis = parse_basis(get<std::string>(p, "basis", "policy"));
        if (p.contains("min_samples")) c.policy.min_samples = get<std::size_t>(p, "min_samples", "policy");
        if (p.contains("override")) c.policy_override = parse_override(p["override"]);
    }
    if (j.contains("strategy")) c.strategy = parse_strategy(get<std::string>(j, "strategy", "config"));
    if (j.contains("predictor")) c.predictor = parse_predictor(get<std::string>(j, "predictor", "config"));
    if (j.contains("execution")) {
        auto t = parse_timing(get<std::string>(j, "execution", "config"));
        if (!t) throw ConfigError("execution must be 'next_close' or 'same_close'");
        c.execution = *t;
    }
    if (j.contains("capital")) c.capital = get<double>(j, "capital", "config");
    if (j.contains("fee_bps")) c.fee_bps = get<double>(j, "fee_bps", "config");
    if (j.contains("risk_free")) c.risk_free = get<double>(j, "risk_free", "config");
    if (j.contains("arima")) {
        const json& a = j["arima"];
        check_keys(a, {"max_order", "refit", "intercept", "order"}, "arima");
        if (a.contains("max_order")) c.arima.max_order = get<int>(a, "max_order", "arima");
        if (a.contains("refit")) {
            const auto r = get<std::string>(a, "refit", "arima");
            if (r == "growing") {
                c.arima.refit = RefitMode::growing;
            } else if (r == "fixed") {
                c.arima.refit = RefitMode::fixed;
            } else {
                throw ConfigError("arima.refit must be 'growing' or 'fixed'");
            }
        }
        if (a.contains("intercept")) c.arima.intercept = parse_intercept(get<std::string>(a, "intercept", "arima"));
        if (a.contains("order")) {
            const auto o = get<std::vector<int>>(a, "order", "arima");
            if (o.size() != 3 || *std::min_element(o.begin(), o.end()) < 0) {
                throw ConfigError("arima.order must be [p, d, q] with non-negative entries");
            }
            c.arima.order = ArimaOrder{o[0], o[1], o[2]};
        }
    }
    if (j.contains("output_dir")) c.output_dir = get<std::string>(j, "output_dir", "config");
    if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed", "config");
    c.network.seed = c.seed;
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    return parse_run_config(text);
}

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::proposed: return "proposed";
        case Strategy::up_down: return "up_down";
        case Strategy::buy_and_hold: return "buy_and_hold";
        case Strategy::arima: return "arima";
        case Strategy::naive: return "naive";
    }
    return "?";
}

const char* to_string(PredictorKind p) {
    switch (p) {
        case PredictorKind::lstm: return "lstm";
        case PredictorKind::arima: return "arima";
        case PredictorKind::naive: return "naive";
    }
    return "?";
}

}  // namespace lstmtrade
