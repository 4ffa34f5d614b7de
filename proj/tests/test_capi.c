/* Exercises the shared library through its C header only. */
#include "lstmtrade/lstmtrade.h"

#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/stat.h>

static int failures = 0;

#define CHECK(cond)                                                             \
    do {                                                                        \
        if (!(cond)) {                                                          \
            fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__, __LINE__, #cond); \
            ++failures;                                                         \
        }                                                                       \
    } while (0)

#define CHECK_STATUS(expr, expected)                                            \
    do {                                                                        \
        lt_status s_ = (expr);                                                  \
        if (s_ != (expected)) {                                                 \
            fprintf(stderr, "%s:%d: %s returned %d, wanted %d (%s)\n", __FILE__, __LINE__, #expr, (int)s_, \
                    (int)(expected), lt_last_error());                          \
            ++failures;                                                         \
        }                                                                       \
    } while (0)

static char data_dir[1024];
static char out_dir[1024];

static const char* path_in(const char* dir, const char* name) {
    static char buf[4][2048];
    static int slot = 0;
    slot = (slot + 1) % 4;
    snprintf(buf[slot], sizeof buf[slot], "%s/%s", dir, name);
    return buf[slot];
}

static int log_lines = 0;
static void count_log(const char* message, void* user) {
    (void)message;
    ++*(int*)user;
}

static lt_config* load_config(const char* name) {
    lt_config* cfg = NULL;
    CHECK_STATUS(lt_config_load(path_in(data_dir, name), &cfg), LT_OK);
    if (cfg) {
        /* Relative data paths resolve against the working directory, so pin them here. */
        char value[2048];
        snprintf(value, sizeof value, "%s", path_in(data_dir, "index.csv"));
        CHECK_STATUS(lt_config_set(cfg, "data.series", value), LT_OK);
    }
    return cfg;
}

static void test_series(void) {
    lt_series* s = NULL;
    CHECK_STATUS(lt_series_load(path_in(data_dir, "missing.csv"), &s), LT_ERR_DATA);
    CHECK(s == NULL);
    CHECK(strlen(lt_last_error()) > 0);
    CHECK_STATUS(lt_series_load(path_in(data_dir, "broken.csv"), &s), LT_ERR_DATA);

    CHECK_STATUS(lt_series_load(path_in(data_dir, "index.csv"), &s), LT_OK);
    CHECK(strlen(lt_last_error()) == 0);
    const size_t n = lt_series_size(s);
    CHECK(n == 348);
    double* prices = malloc(n * sizeof *prices);
    CHECK(lt_series_adj_close(s, prices, n) == n);
    CHECK(lt_series_adj_close(s, prices, 3) == 3);
    CHECK(prices[0] > 0.0);
    free(prices);

    char date[11];
    CHECK_STATUS(lt_series_date(s, 0, date, sizeof date), LT_OK);
    CHECK(strcmp(date, "2004-09-01") == 0);
    CHECK_STATUS(lt_series_date(s, n, date, sizeof date), LT_ERR_DATA);
    char tiny[4];
    CHECK_STATUS(lt_series_date(s, 0, tiny, sizeof tiny), LT_ERR_CONFIG);

    char* summary = NULL;
    CHECK_STATUS(lt_series_summary(s, &summary), LT_OK);
    CHECK(summary && strstr(summary, "\"rows\"") && strstr(summary, "348"));
    lt_string_free(summary);
    lt_series_free(s);
    lt_series_free(NULL);
    CHECK(lt_series_size(NULL) == 0);

    summary = NULL;
    CHECK_STATUS(lt_ingest(path_in(data_dir, "index.csv"), path_in(out_dir, "clean.csv"), &summary), LT_OK);
    CHECK(summary != NULL);
    lt_string_free(summary);
    struct stat st;
    CHECK(stat(path_in(out_dir, "clean.csv"), &st) == 0);
    CHECK_STATUS(lt_ingest(NULL, NULL, NULL), LT_ERR_CONFIG);
}

static void test_config(void) {
    lt_config* cfg = NULL;
    CHECK_STATUS(lt_config_parse("{not json", &cfg), LT_ERR_CONFIG);
    CHECK(cfg == NULL);
    CHECK_STATUS(lt_config_parse("{\"version\": 1, \"bogus\": 1}", &cfg), LT_ERR_CONFIG);
    CHECK_STATUS(lt_config_load(path_in(data_dir, "bad_version.json"), &cfg), LT_ERR_CONFIG);
    CHECK_STATUS(lt_config_load(path_in(data_dir, "nope.json"), &cfg), LT_ERR_CONFIG);

    cfg = load_config("small.json");
    if (!cfg) return;
    char* fp = NULL;
    char* fp2 = NULL;
    CHECK_STATUS(lt_config_fingerprint(cfg, &fp), LT_OK);
    lt_config_set_seed(cfg, 1234);
    CHECK_STATUS(lt_config_set_output_dir(cfg, out_dir), LT_OK);
    CHECK_STATUS(lt_config_fingerprint(cfg, &fp2), LT_OK);
    CHECK(fp && fp2 && strcmp(fp, fp2) == 0);
    lt_string_free(fp2);

    CHECK_STATUS(lt_config_set(cfg, "network.hidden", "4"), LT_OK);
    CHECK_STATUS(lt_config_fingerprint(cfg, &fp2), LT_OK);
    CHECK(strcmp(fp, fp2) != 0);
    lt_string_free(fp2);
    lt_string_free(fp);

    /* A rejected override leaves the config as it was. */
    char* before = NULL;
    char* after = NULL;
    CHECK_STATUS(lt_config_json(cfg, &before), LT_OK);
    CHECK_STATUS(lt_config_set(cfg, "network.bogus", "1"), LT_ERR_CONFIG);
    CHECK_STATUS(lt_config_set(cfg, "network.hidden", "-3"), LT_ERR_CONFIG);
    CHECK_STATUS(lt_config_json(cfg, &after), LT_OK);
    CHECK(before && after && strcmp(before, after) == 0);
    CHECK(strstr(after, "\"seed\": 1234") != NULL);
    lt_string_free(before);
    lt_string_free(after);

    char* dir = NULL;
    CHECK_STATUS(lt_config_output_dir(cfg, &dir), LT_OK);
    CHECK(dir && strcmp(dir, out_dir) == 0);
    lt_string_free(dir);
    lt_config_free(cfg);
    CHECK_STATUS(lt_config_fingerprint(NULL, &fp), LT_ERR_CONFIG);
}

static void test_commands(void) {
    lt_config* lstm = load_config("small.json");
    lt_config* bnh = load_config("bnh.json");
    if (!lstm || !bnh) return;

    char* report = NULL;
    log_lines = 0;
    CHECK_STATUS(lt_backtest_run(lstm, path_in(out_dir, "lstm"), count_log, &log_lines, &report), LT_OK);
    CHECK(report && strstr(report, "\"CR_pct\""));
    CHECK(log_lines > 0);
    lt_string_free(report);
    CHECK_STATUS(lt_backtest_run(bnh, path_in(out_dir, "bnh"), NULL, NULL, NULL), LT_OK);

    const char* reports[] = {path_in(out_dir, "lstm/report.json"), path_in(out_dir, "bnh/report.json")};
    char* table = NULL;
    char* json = NULL;
    CHECK_STATUS(lt_compare(reports, 2, &table, &json), LT_OK);
    CHECK(table && strstr(table, "buy_and_hold"));
    CHECK(json && strstr(json, "\"diebold_mariano\""));
    lt_string_free(table);
    lt_string_free(json);
    CHECK_STATUS(lt_compare(reports, 1, NULL, NULL), LT_ERR_CONFIG);
    CHECK_STATUS(lt_compare(NULL, 2, NULL, NULL), LT_ERR_CONFIG);

    const char* curves[] = {path_in(out_dir, "lstm/equity.csv"), path_in(out_dir, "bnh/equity.csv")};
    CHECK_STATUS(lt_plot(curves, 2, path_in(out_dir, "equity.svg")), LT_OK);
    struct stat st;
    CHECK(stat(path_in(out_dir, "equity.svg"), &st) == 0 && st.st_size > 0);

    char* best = NULL;
    const char* grid = "{\"layers\": [1], \"hidden\": [2], \"window\": [3, 5], \"dropout\": [0.0]}";
    CHECK_STATUS(lt_gridsearch_run(lstm, grid, path_in(out_dir, "grid"), 2, 0, NULL, NULL, &best), LT_OK);
    CHECK(best && strstr(best, "\"fingerprint\""));
    lt_string_free(best);
    CHECK_STATUS(lt_gridsearch_run(lstm, grid, path_in(out_dir, "grid"), 0, 0, NULL, NULL, NULL), LT_ERR_CONFIG);
    CHECK_STATUS(lt_gridsearch_run(lstm, "{\"layers\": []}", path_in(out_dir, "grid2"), 1, 0, NULL, NULL, NULL),
                 LT_ERR_CONFIG);

    lt_config_free(lstm);
    lt_config_free(bnh);
}

int main(int argc, char** argv) {
    if (argc != 3) {
        fprintf(stderr, "usage: %s DATA_DIR OUT_DIR\n", argv[0]);
        return 2;
    }
    snprintf(data_dir, sizeof data_dir, "%s", argv[1]);
    snprintf(out_dir, sizeof out_dir, "%s", argv[2]);
    mkdir(out_dir, 0755);

    CHECK(strcmp(lt_version(), "1.0.0") == 0);
    test_series();
    test_config();
    test_commands();
    if (failures) {
        fprintf(stderr, "%d check(s) failed\n", failures);
        return 1;
    }
    printf("C API checks passed\n");
    return 0;
}
