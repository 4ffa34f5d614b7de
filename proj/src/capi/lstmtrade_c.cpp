#include "lstmtrade/lstmtrade.h"

#include "lstmtrade/commands.hpp"
#include "lstmtrade/errors.hpp"
#include "lstmtrade/io.hpp"
#include "lstmtrade/market_data.hpp"
#include "lstmtrade/run_config.hpp"

#include <json.hpp>

#include <cstdlib>
#include <cstring>
#include <string>

struct lt_series {
    lstmtrade::PriceSeries series;
};

struct lt_config {
    nlohmann::json doc;
    lstmtrade::RunConfig run;
};

namespace {

thread_local std::string g_last_error;

lt_status fail(lt_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

template <typename F>
lt_status guarded(F&& body) {
    try {
        g_last_error.clear();
        body();
        return LT_OK;
    } catch (const lstmtrade::ConfigError& e) {
        return fail(LT_ERR_CONFIG, e.what());
    } catch (const lstmtrade::DataError& e) {
        return fail(LT_ERR_DATA, e.what());
    } catch (const lstmtrade::NumericError& e) {
        return fail(LT_ERR_NUMERIC, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(LT_ERR_CONFIG, std::string("invalid JSON: ") + e.what());
    } catch (const std::exception& e) {
        return fail(LT_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(LT_ERR_INTERNAL, "unknown error");
    }
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.data(), s.size() + 1);
    return out;
}

void put(char** out, const std::string& s) {
    if (out) *out = dup(s);
}

void require(bool ok, const char* what) {
    if (!ok) throw lstmtrade::ConfigError(std::string(what) + " must not be NULL");
}

lstmtrade::LogFn bridge(lt_log_fn log, void* user) {
    if (!log) return {};
    return [log, user](const std::string& msg) { log(msg.c_str(), user); };
}

std::vector<std::filesystem::path> paths(const char* const* list, std::size_t count) {
    require(list != nullptr || count == 0, "path list");
    std::vector<std::filesystem::path> out;
    for (std::size_t i = 0; i < count; ++i) {
        require(list[i] != nullptr, "path");
        out.emplace_back(list[i]);
    }
    return out;
}

std::filesystem::path out_dir_of(const lt_config* config, const char* out_dir) {
    return out_dir && *out_dir ? std::filesystem::path(out_dir) : config->run.output_dir;
}

void reparse(lt_config* c, nlohmann::json doc) {
    auto run = lstmtrade::parse_run_config(doc.dump());
    // File checks wait until a command runs; value checks happen now so a bad set leaves c untouched.
    run.split.validate();
    run.network.validate();
    run.policy.validate();
    c->doc = std::move(doc);
    c->run = std::move(run);
}

}  // namespace

extern "C" {

const char* lt_version(void) { return "1.0.0"; }

const char* lt_last_error(void) { return g_last_error.c_str(); }

void lt_string_free(char* s) { std::free(s); }

lt_status lt_series_load(const char* csv_path, lt_series** out) {
    return guarded([&] {
        require(csv_path && out, "csv_path and out");
        *out = nullptr;
        auto s = std::make_unique<lt_series>();
        s->series = lstmtrade::parse_csv(csv_path);
        *out = s.release();
    });
}

void lt_series_free(lt_series* series) { delete series; }

size_t lt_series_size(const lt_series* series) { return series ? series->series.size() : 0; }

size_t lt_series_adj_close(const lt_series* series, double* out, size_t capacity) {
    if (!series || !out) return 0;
    const std::size_t n = std::min(capacity, series->series.size());
    for (std::size_t i = 0; i < n; ++i) out[i] = series->series.bars[i].adj_close;
    return n;
}

lt_status lt_series_date(const lt_series* series, size_t index, char* out, size_t capacity) {
    return guarded([&] {
        require(series && out, "series and out");
        if (index >= series->series.size()) throw lstmtrade::DataError("row index out of range");
        const auto text = series->series.bars[index].date.to_string();
        if (capacity < text.size() + 1) throw lstmtrade::ConfigError("date buffer too small");
        std::memcpy(out, text.c_str(), text.size() + 1);
    });
}

lt_status lt_series_summary(const lt_series* series, char** json_out) {
    return guarded([&] {
        require(series && json_out, "series and json_out");
        put(json_out, lstmtrade::series_summary_json(series->series));
    });
}

lt_status lt_ingest(const char* input_csv, const char* output_csv, char** summary_json_out) {
    return guarded([&] {
        require(input_csv, "input_csv");
        auto summary = lstmtrade::cmd_ingest(input_csv, output_csv ? output_csv : "");
        put(summary_json_out, summary.json);
    });
}

lt_status lt_config_load(const char* path, lt_config** out) {
    return guarded([&] {
        require(path && out, "path and out");
        *out = nullptr;
        std::string text;
        try {
            text = lstmtrade::read_file(path);
        } catch (const lstmtrade::Error& e) {
            throw lstmtrade::ConfigError(e.what());
        }
        auto c = std::make_unique<lt_config>();
        reparse(c.get(), nlohmann::json::parse(text));
        *out = c.release();
    });
}

lt_status lt_config_parse(const char* json_text, lt_config** out) {
    return guarded([&] {
        require(json_text && out, "json_text and out");
        *out = nullptr;
        auto c = std::make_unique<lt_config>();
        reparse(c.get(), nlohmann::json::parse(json_text));
        *out = c.release();
    });
}

void lt_config_free(lt_config* config) { delete config; }

void lt_config_set_seed(lt_config* config, uint64_t seed) {
    if (!config) return;
    config->doc["seed"] = seed;
    config->run.seed = seed;
    config->run.network.seed = seed;
}

lt_status lt_config_set_output_dir(lt_config* config, const char* dir) {
    return guarded([&] {
        require(config && dir, "config and dir");
        config->doc["output_dir"] = dir;
        config->run.output_dir = dir;
    });
}

lt_status lt_config_set(lt_config* config, const char* key_path, const char* json_value) {
    return guarded([&] {
        require(config && key_path && json_value, "config, key_path and json_value");
        std::string pointer = "/";
        for (const char* p = key_path; *p; ++p) pointer += *p == '.' ? '/' : *p;
        nlohmann::json value;
        try {
            value = nlohmann::json::parse(json_value);
        } catch (const nlohmann::json::exception&) {
            value = json_value;  // bare strings such as dates or file paths
        }
        auto doc = config->doc;
        doc[nlohmann::json::json_pointer(pointer)] = value;
        reparse(config, std::move(doc));
    });
}

lt_status lt_config_fingerprint(const lt_config* config, char** out) {
    return guarded([&] {
        require(config && out, "config and out");
        put(out, config->run.fingerprint());
    });
}

lt_status lt_config_output_dir(const lt_config* config, char** out) {
    return guarded([&] {
        require(config && out, "config and out");
        put(out, config->run.output_dir.string());
    });
}

lt_status lt_config_json(const lt_config* config, char** out) {
    return guarded([&] {
        require(config && out, "config and out");
        put(out, config->run.to_json().dump(2) + "\n");
    });
}

lt_status lt_backtest_run(const lt_config* config, const char* out_dir, lt_log_fn log, void* user,
                          char** report_json_out) {
    return guarded([&] {
        require(config, "config");
        auto rep = lstmtrade::cmd_backtest(config->run, out_dir_of(config, out_dir), bridge(log, user));
        put(report_json_out, lstmtrade::report_to_json(rep));
    });
}

lt_status lt_gridsearch_run(const lt_config* config, const char* grid_json, const char* out_dir, int workers,
                            int resume, lt_log_fn log, void* user, char** best_json_out) {
    return guarded([&] {
        require(config, "config");
        if (workers < 1) throw lstmtrade::ConfigError("workers must be at least 1");
        const auto spec = lstmtrade::parse_grid_spec(grid_json ? grid_json : "");
        const auto dir = out_dir_of(config, out_dir);
        lstmtrade::cmd_gridsearch(config->run, spec, dir, workers, resume != 0, bridge(log, user));
        if (best_json_out) put(best_json_out, lstmtrade::read_file(dir / "best.json"));
    });
}

lt_status lt_compare(const char* const* report_paths, size_t count, char** table_out, char** json_out) {
    return guarded([&] {
        auto c = lstmtrade::cmd_compare(paths(report_paths, count));
        put(table_out, c.table);
        put(json_out, c.json);
    });
}

lt_status lt_plot(const char* const* equity_paths, size_t count, const char* svg_path) {
    return guarded([&] {
        require(svg_path, "svg_path");
        lstmtrade::cmd_plot(paths(equity_paths, count), svg_path);
    });
}

}  // extern "C"
