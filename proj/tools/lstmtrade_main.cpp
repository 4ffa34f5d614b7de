#include "lstmtrade/lstmtrade.h"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

struct ConfigDeleter {
    void operator()(lt_config* c) const { lt_config_free(c); }
};
using ConfigPtr = std::unique_ptr<lt_config, ConfigDeleter>;

struct Owned {
    char* p = nullptr;
    ~Owned() { lt_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

int report(lt_status status) {
    if (status != LT_OK) std::cerr << "error: " << lt_last_error() << '\n';
    return static_cast<int>(status);
}

void log_line(const char* message, void*) { std::cerr << message << '\n'; }

struct RunOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> sets;
    bool quiet = false;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
    cmd->add_option("--config,-c", o.config, "Run configuration (JSON)")->required()->envname("LSTMTRADE_CONFIG");
    cmd->add_option("--seed", o.seed, "Global seed, overrides the config")->envname("LSTMTRADE_SEED");
    cmd->add_option("--out,-o", o.out, "Output directory, overrides the config")->envname("LSTMTRADE_OUT");
    cmd->add_option("--set", o.sets, "Override a config value: key.path=JSON")
        ->check(CLI::Validator(
            [](std::string& v) {
                const auto eq = v.find('=');
                return eq == std::string::npos || eq == 0 ? std::string("expected key.path=value") : std::string();
            },
            "KEY=VALUE"));
    cmd->add_flag("--quiet,-q", o.quiet, "No progress output");
}

lt_status load_config(const RunOptions& o, ConfigPtr& out) {
    lt_config* raw = nullptr;
    if (auto st = lt_config_load(o.config.c_str(), &raw); st != LT_OK) return st;
    out.reset(raw);
    for (const auto& s : o.sets) {
        const auto eq = s.find('=');
        const auto key = s.substr(0, eq);
        const auto value = s.substr(eq + 1);
        if (auto st = lt_config_set(out.get(), key.c_str(), value.c_str()); st != LT_OK) return st;
    }
    if (o.seed) lt_config_set_seed(out.get(), *o.seed);
    if (!o.out.empty()) {
        if (auto st = lt_config_set_output_dir(out.get(), o.out.c_str()); st != LT_OK) return st;
    }
    return LT_OK;
}

bool write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
    return static_cast<bool>(f);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Walk-forward LSTM trading backtester"};
    app.require_subcommand(1);
    app.set_version_flag("--version", lt_version());

    auto* ingest = app.add_subcommand("ingest", "Validate and normalize an OHLC CSV");
    std::string ingest_in, ingest_out;
    ingest->add_option("input", ingest_in, "Raw CSV")->required();
    ingest->add_option("--out,-o", ingest_out, "Write the normalized CSV here");

    RunOptions bt;
    auto* backtest = app.add_subcommand("backtest", "Run the configured strategy over the out-of-sample period");
    add_run_options(backtest, bt);

    RunOptions gs;
    std::string grid_path;
    int workers = 1;
    bool resume = false;
    auto* grid = app.add_subcommand("gridsearch", "Profit-ranked hyperparameter search");
    add_run_options(grid, gs);
    grid->add_option("--grid", grid_path, "Grid spec (JSON); default grid when omitted")->check(CLI::ExistingFile);
    grid->add_option("--workers,-j", workers, "Worker threads")->check(CLI::PositiveNumber)->envname(
        "LSTMTRADE_WORKERS");
    grid->add_flag("--resume", resume, "Reuse finished configs from the manifest");

    std::vector<std::string> reports;
    std::string compare_json;
    auto* compare = app.add_subcommand("compare", "Side-by-side metrics and Diebold-Mariano tests");
    compare->add_option("reports", reports, "report.json files")->required()->expected(2, -1);
    compare->add_option("--json", compare_json, "Also write the comparison as JSON");

    std::vector<std::string> curves;
    std::string svg_out;
    auto* plot = app.add_subcommand("plot", "Overlay normalized equity curves as SVG");
    plot->add_option("equity", curves, "equity.csv files")->required()->expected(1, -1);
    plot->add_option("--out,-o", svg_out, "SVG path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : LT_ERR_CONFIG;
    }

    if (*ingest) {
        Owned summary;
        const auto st = lt_ingest(ingest_in.c_str(), ingest_out.empty() ? nullptr : ingest_out.c_str(), &summary.p);
        if (st == LT_OK) std::cout << summary.str();
        return report(st);
    }
    if (*backtest) {
        ConfigPtr cfg;
        if (auto st = load_config(bt, cfg); st != LT_OK) return report(st);
        Owned rep;
        const auto st = lt_backtest_run(cfg.get(), nullptr, bt.quiet ? nullptr : log_line, nullptr, &rep.p);
        if (st == LT_OK) {
            Owned dir;
            lt_config_output_dir(cfg.get(), &dir.p);
            std::ifstream table(dir.str() + "/report.txt");
            std::cout << table.rdbuf();
        }
        return report(st);
    }
    if (*grid) {
        ConfigPtr cfg;
        if (auto st = load_config(gs, cfg); st != LT_OK) return report(st);
        std::string spec;
        if (!grid_path.empty()) {
            std::ifstream f(grid_path, std::ios::binary);
            spec.assign(std::istreambuf_iterator<char>(f), {});
        }
        Owned best;
        const auto st = lt_gridsearch_run(cfg.get(), spec.c_str(), nullptr, workers, resume ? 1 : 0,
                                          gs.quiet ? nullptr : log_line, nullptr, &best.p);
        if (st == LT_OK) std::cout << best.str();
        return report(st);
    }
    if (*compare) {
        std::vector<const char*> list;
        for (const auto& r : reports) list.push_back(r.c_str());
        Owned table, json;
        const auto st = lt_compare(list.data(), list.size(), &table.p, &json.p);
        if (st == LT_OK) {
            std::cout << table.str();
            if (!compare_json.empty() && !write_text(compare_json, json.str())) {
                std::cerr << "error: cannot write " << compare_json << '\n';
                return LT_ERR_DATA;
            }
        }
        return report(st);
    }
    if (*plot) {
        std::vector<const char*> list;
        for (const auto& c : curves) list.push_back(c.c_str());
        return report(lt_plot(list.data(), list.size(), svg_out.c_str()));
    }
    return LT_ERR_CONFIG;
}
