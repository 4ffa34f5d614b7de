#include "lstmtrade/gridsearch.hpp"

#include "lstmtrade/errors.hpp"
#include "lstmtrade/io.hpp"
#include "lstmtrade/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace lstmtrade {

using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.jsonl";

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

std::string csv_opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

json manifest_header(const GridSpec& spec, const RunConfig& run) {
    return {{"manifest", 1},
            {"run", run.fingerprint()},
            {"seed", run.seed},
            {"grid", json::parse(grid_spec_json(spec))}};
}

}  // namespace

void GridSpec::validate() const {
    if (layers.empty() || hidden.empty() || window.empty() || dropout.empty()) {
        throw ConfigError("every grid axis needs at least one value");
    }
    if (repeats < 1) throw ConfigError("grid repeats must be at least 1");
}

GridSpec parse_grid_spec(std::string_view text) {
    GridSpec spec;
    if (trim(text).empty()) return spec;
    try {
        const auto j = json::parse(text);
        if (!j.is_object()) throw ConfigError("grid spec must be a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (key == "layers") {
                spec.layers = value.get<std::vector<int>>();
            } else if (key == "hidden") {
                spec.hidden = value.get<std::vector<int>>();
            } else if (key == "window") {
                spec.window = value.get<std::vector<int>>();
            } else if (key == "dropout") {
                spec.dropout = value.get<std::vector<double>>();
            } else if (key == "repeats") {
                spec.repeats = value.get<int>();
            } else {
                throw ConfigError("unknown key '" + key + "' in grid spec");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad grid spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

std::string grid_spec_json(const GridSpec& spec) {
    return json{{"layers", spec.layers},
                {"hidden", spec.hidden},
                {"window", spec.window},
                {"dropout", spec.dropout},
                {"repeats", spec.repeats}}
        .dump();
}

std::vector<NetworkConfig> enumerate(const GridSpec& spec, const NetworkConfig& base) {
    spec.validate();
    std::vector<NetworkConfig> out;
    out.reserve(spec.size());
    for (int l : spec.layers) {
        for (int h : spec.hidden) {
            for (int t : spec.window) {
                for (double d : spec.dropout) {
                    NetworkConfig c = base;
                    c.num_layers = l;
                    c.hidden_size = h;
                    c.window = t;
                    c.dropout = d;
                    out.push_back(c);
                }
            }
        }
    }
    return out;
}

std::uint64_t config_seed(std::uint64_t global_seed, const NetworkConfig& config) {
    return mix_seed(global_seed, fnv1a64(network_fingerprint(config)));
}

json grid_result_json(const GridResult& r) {
    json j;
    j["index"] = r.index;
    j["fingerprint"] = r.fingerprint;
    j["network"] = network_to_json(r.config);
    j["seed"] = r.seed;
    j["ok"] = r.ok;
    j["failure"] = r.failure;
    j["cr"] = opt(r.cr);
    j["cr_repeats"] = r.cr_repeats;
    if (r.returns) {
        j["returns"] = {{"cr", r.returns->cr}, {"ar", r.returns->ar}, {"av", r.returns->av},
                        {"sr", opt(r.returns->sr)}, {"dd", r.returns->dd}, {"n", r.returns->n_returns}};
    } else {
        j["returns"] = nullptr;
    }
    if (r.errors) {
        j["errors"] = {{"mda", r.errors->mda}, {"mape", r.errors->mape}, {"mae", r.errors->mae},
                       {"mse", r.errors->mse}, {"r2_paper", opt(r.errors->r2_paper)}, {"n", r.errors->n}};
    } else {
        j["errors"] = nullptr;
    }
    j["trades"] = r.trades;
    j["policy"] = r.policy_snapshot;
    j["runtime_seconds"] = r.runtime_seconds;
    return j;
}

GridResult grid_result_from_json(const json& j) {
    GridResult r;
    r.index = j.at("index").get<std::size_t>();
    r.fingerprint = j.at("fingerprint").get<std::string>();
    r.config = network_from_json(j.at("network"));
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config.seed = r.seed;
    r.ok = j.at("ok").get<bool>();
    r.failure = j.at("failure").get<std::string>();
    r.cr = opt_from(j, "cr");
    r.cr_repeats = j.at("cr_repeats").get<std::vector<double>>();
    if (!j.at("returns").is_null()) {
        const auto& m = j["returns"];
        ReturnMetrics rm;
        rm.cr = m.at("cr").get<double>();
        rm.ar = m.at("ar").get<double>();
        rm.av = m.at("av").get<double>();
        rm.sr = opt_from(m, "sr");
        rm.dd = m.at("dd").get<double>();
        rm.n_returns = m.at("n").get<std::size_t>();
        r.returns = rm;
    }
    if (!j.at("errors").is_null()) {
        const auto& e = j["errors"];
        ErrorMetrics em;
        em.mda = e.at("mda").get<double>();
        em.mape = e.at("mape").get<double>();
        em.mae = e.at("mae").get<double>();
        em.mse = e.at("mse").get<double>();
        em.r2_paper = opt_from(e, "r2_paper");
        em.n = e.at("n").get<std::size_t>();
        r.errors = em;
    }
    r.trades = j.at("trades").get<std::size_t>();
    r.policy_snapshot = j.at("policy").get<std::string>();
    r.runtime_seconds = j.value("runtime_seconds", 0.0);
    return r;
}

GridResult evaluate_config(const NetworkConfig& config, const GridContext& ctx, int repeats) {
    const auto started = std::chrono::steady_clock::now();
    GridResult r;
    r.config = config;
    r.fingerprint = network_fingerprint(config);
    r.seed = config.seed;
    const auto& split = ctx.run.split;
    const DateRange range{split.policy_build.first, split.hyper_select.last};
    try {
        for (int rep = 0; rep < repeats; ++rep) {
            NetworkConfig c = config;
            if (rep > 0) c.seed = mix_seed(config.seed, static_cast<std::uint64_t>(rep));
            auto pred = rolling_predict(ctx.series, c, range);
            if (!pred.warnings.empty()) {
                throw NumericError("training diverged on " + std::to_string(pred.warnings.size()) + " day(s); first: " +
                                   pred.warnings.front());
            }
            PhaseInputs in{ctx.series, ctx.traded, ctx.run.policy, ctx.run.capital, ctx.run.execution,
                           ctx.run.fee_bps, false};
            auto phases = run_in_sample(in, pred.records, split);
            const auto metrics = return_metrics(phases.hyper.equity, 252.0, ctx.run.risk_free);
            r.cr_repeats.push_back(metrics.cr);
            if (rep == 0) {
                r.returns = metrics;
                r.errors = error_metrics(slice(pred.records, split.hyper_select));
                r.trades = phases.hyper.trades.size();
                r.policy_snapshot = snapshot_json(snapshot(phases.hyper.final_policy, phases.hyper.stats));
            }
        }
        double sum = 0.0;
        for (double v : r.cr_repeats) sum += v;
        r.cr = sum / static_cast<double>(r.cr_repeats.size());
        r.ok = true;
    } catch (const Error& e) {
        r.ok = false;
        r.failure = e.what();
        r.cr.reset();
        r.cr_repeats.clear();
        r.returns.reset();
        r.errors.reset();
        r.trades = 0;
        r.policy_snapshot.clear();
    }
    r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return r;
}

std::size_t select_best(const std::vector<GridResult>& results) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        if (!r.ok || !r.cr) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = results[*best];
        if (*r.cr != *b.cr) {
            if (*r.cr > *b.cr) best = i;
            continue;
        }
        const auto pr = r.config.parameter_count();
        const auto pb = b.config.parameter_count();
        if (pr != pb) {
            if (pr < pb) best = i;
            continue;
        }
        const auto kr = std::tie(r.config.num_layers, r.config.hidden_size, r.config.window, r.config.dropout);
        const auto kb = std::tie(b.config.num_layers, b.config.hidden_size, b.config.window, b.config.dropout);
        if (kr < kb) best = i;
    }
    if (!best) throw NumericError("every grid configuration failed");
    return *best;
}

std::string results_csv(const std::vector<GridResult>& results, const std::string& preamble) {
    std::string out = preamble;
    out += "index,fingerprint,layers,hidden,window,dropout,seed,status,cr,ar,av,sr,dd,trades,mda,mape,mae,mse,"
           "r2_paper,failure\n";
    for (const auto& r : results) {
        std::optional<double> ar, av, sr, dd, mda, mape, mae, mse, r2;
        if (r.returns) {
            ar = r.returns->ar;
            av = r.returns->av;
            sr = r.returns->sr;
            dd = r.returns->dd;
        }
        if (r.errors) {
            mda = r.errors->mda;
            mape = r.errors->mape;
            mae = r.errors->mae;
            mse = r.errors->mse;
            r2 = r.errors->r2_paper;
        }
        out += std::to_string(r.index) + ',' + r.fingerprint + ',' + std::to_string(r.config.num_layers) + ',' +
               std::to_string(r.config.hidden_size) + ',' + std::to_string(r.config.window) + ',' +
               format_double(r.config.dropout) + ',' + std::to_string(r.seed) + ',' + (r.ok ? "ok" : "failed") +
               ',' + csv_opt(r.cr) + ',' + csv_opt(ar) + ',' + csv_opt(av) + ',' + csv_opt(sr) + ',' + csv_opt(dd) +
               ',' + std::to_string(r.trades) + ',' + csv_opt(mda) + ',' + csv_opt(mape) + ',' + csv_opt(mae) + ',' +
               csv_opt(mse) + ',' + csv_opt(r2) + ',' + csv_escape(r.failure) + '\n';
    }
    return out;
}

GridRun run_grid(const GridSpec& spec, const GridContext& ctx, const std::filesystem::path& out_dir, int workers,
                 bool resume, const GridProgressFn& progress) {
    if (workers < 1) throw ConfigError("workers must be at least 1");
    auto configs = enumerate(spec, ctx.run.network);
    for (auto& c : configs) c.seed = config_seed(ctx.run.seed, c);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());
    const auto manifest_path = out_dir / kManifest;
    const json header = manifest_header(spec, ctx.run);

    GridRun run;
    run.results.resize(configs.size());
    std::vector<bool> done(configs.size(), false);

    // On resume the manifest is rewritten with only the usable lines, so a torn tail from an
    // interrupted run cannot merge with the next appended result.
    std::string kept = header.dump() + "\n";
    if (resume && std::filesystem::exists(manifest_path)) {
        const std::string text = read_file(manifest_path);
        std::size_t pos = 0;
        bool first = true;
        while (pos < text.size()) {
            auto nl = text.find('\n', pos);
            if (nl == std::string::npos) break;
            const auto line = text.substr(pos, nl - pos);
            pos = nl + 1;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::exception&) {
                continue;
            }
            if (first) {
                if (j != header) {
                    throw ConfigError("manifest in " + out_dir.string() + " belongs to a different run or grid");
                }
                first = false;
                continue;
            }
            try {
                auto r = grid_result_from_json(j);
                const std::size_t i = r.index;
                if (i < configs.size() && !done[i] && r.fingerprint == network_fingerprint(configs[i]) &&
                    r.seed == configs[i].seed) {
                    run.results[i] = std::move(r);
                    done[i] = true;
                    ++run.reused;
                    kept += line + "\n";
                }
            } catch (const std::exception&) {
                continue;
            }
        }
    }
    write_file_atomic(manifest_path, kept);

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        if (!done[i]) pending.push_back(i);
    }
    std::mutex mu;
    std::size_t completed = configs.size() - pending.size();
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < pending.size(); k = next++) {
            const std::size_t i = pending[k];
            GridResult r = evaluate_config(configs[i], ctx, spec.repeats);
            r.index = i;
            std::lock_guard lock(mu);
            std::ofstream m(manifest_path, std::ios::app | std::ios::binary);
            m << grid_result_json(r).dump() << '\n';
            m.flush();
            run.results[i] = std::move(r);
            ++completed;
            if (progress) progress(run.results[i], completed, configs.size());
        }
    };
    const int n_threads = std::min<int>(workers, static_cast<int>(std::max<std::size_t>(pending.size(), 1)));
    if (n_threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    const std::string preamble = ctx.run.preamble();
    write_file_atomic(out_dir / "results.csv", results_csv(run.results, preamble));
    std::string timings = "fingerprint,seconds\n";
    for (const auto& r : run.results) timings += r.fingerprint + ',' + format_double(r.runtime_seconds) + '\n';
    write_file_atomic(out_dir / "timings.csv", timings);

    run.best = select_best(run.results);
    const auto& b = run.results[run.best];
    json best = {{"fingerprint", b.fingerprint}, {"index", b.index},   {"seed", b.seed},
                 {"cr", opt(b.cr)},              {"network", network_to_json(b.config)},
                 {"policy", json::parse(b.policy_snapshot)}, {"config", ctx.run.fingerprint()}};
    write_file_atomic(out_dir / "best.json", best.dump(2) + "\n");
    return run;
}

}  // namespace lstmtrade
