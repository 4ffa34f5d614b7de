#include "lstmtrade/policy.hpp"

#include "lstmtrade/errors.hpp"
#include "lstmtrade/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace lstmtrade {

namespace {

double basis_value(double r, QuantileBasis basis) { return basis == QuantileBasis::absolute ? std::fabs(r) : r; }

// Nearest-rank percentile of sorted data; the small slack keeps p*N = 3 from becoming rank 4.
double nearest_rank(std::span<const double> sorted, double p) {
    const double n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

Cutoffs cutoffs_from_sorted(std::span<const double> sorted, const PolicyConfig& config) {
    if (sorted.size() < config.min_samples) {
        throw DataError("cutoffs need at least " + std::to_string(config.min_samples) + " predicted returns, have " +
                        std::to_string(sorted.size()));
    }
    Cutoffs out;
    out.q.reserve(config.fractions.size() + 1);
    out.q.push_back(0.0);
    for (double p : config.fractions) {
        double v = std::max(0.0, nearest_rank(sorted, p));
        if (v <= out.q.back()) {
            out.merged = true;
            v = out.q.back();
        }
        out.q.push_back(v);
    }
    return out;
}

}  // namespace

void PolicyConfig::validate() const {
    if (fractions.empty()) {
        throw ConfigError("policy needs at least one percentile fraction");
    }
    double prev = 0.0;
    for (double f : fractions) {
        if (!(f > prev && f < 1.0)) {
            throw ConfigError("percentile fractions must be strictly increasing inside (0, 1)");
        }
        prev = f;
    }
    if (!(epsilon >= 0.0)) {
        throw ConfigError("epsilon must be non-negative");
    }
    if (a_max <= 0) {
        throw ConfigError("A_max must be positive");
    }
    if (min_samples < 1) {
        throw ConfigError("min_samples must be positive");
    }
}

Cutoffs compute_cutoffs(std::span<const double> predicted_returns, const PolicyConfig& config) {
    std::vector<double> sorted;
    sorted.reserve(predicted_returns.size());
    for (double r : predicted_returns) {
        if (!std::isfinite(r)) throw NumericError("non-finite predicted return");
        sorted.push_back(basis_value(r, config.basis));
    }
    std::sort(sorted.begin(), sorted.end());
    return cutoffs_from_sorted(sorted, config);
}

int classify(double r_hat, std::span<const double> q) {
    if (!std::isfinite(r_hat)) {
        throw NumericError("cannot classify a non-finite predicted return");
    }
    if (q.empty()) {
        throw ConfigError("policy has no cutoffs");
    }
    // Count of cutoffs <= r; equals the half-open bin rule and skips zero-width bins.
    auto it = std::upper_bound(q.begin(), q.end(), r_hat);
    return 1 + static_cast<int>(it - q.begin());
}

std::vector<Allocation> optimal_allocations(const BinStats& stats, const PolicyConfig& config) {
    std::vector<Allocation> a;
    a.reserve(stats.bins());
    a.push_back(Allocation::sell());
    for (std::size_t i = 1; i < stats.bins(); ++i) {
        a.push_back(Allocation::units(stats.delta[i] > config.epsilon ? config.a_max : 0));
    }
    return a;
}

bool record_trade_outcome(BinStats& stats, int entry_bin, double y_buy, double y_sell, double epsilon) {
    if (entry_bin < 2 || static_cast<std::size_t>(entry_bin) > stats.bins()) {
        throw ConfigError("invalid entry bin " + std::to_string(entry_bin));
    }
    auto& d = stats.delta[static_cast<std::size_t>(entry_bin - 1)];
    const bool before = d > epsilon;
    d += y_sell - y_buy;
    ++stats.count[static_cast<std::size_t>(entry_bin - 1)];
    return before != (d > epsilon);
}

double realized_profit(std::span<const CompletedCycle> cycles, std::span<const Allocation> allocations) {
    double g = 0.0;
    for (const auto& c : cycles) {
        if (c.entry_bin < 2 || static_cast<std::size_t>(c.entry_bin) > allocations.size()) {
            throw ConfigError("cycle entry bin outside the allocation vector");
        }
        g += static_cast<double>(allocations[static_cast<std::size_t>(c.entry_bin - 1)].units()) *
             (c.y_sell - c.y_buy);
    }
    return g;
}

void ReturnHistory::append(double r_hat) {
    if (!std::isfinite(r_hat)) throw NumericError("non-finite predicted return");
    raw_.push_back(r_hat);
    const double v = basis_value(r_hat, basis_);
    sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), v), v);
}

Cutoffs ReturnHistory::cutoffs(const PolicyConfig& config) const {
    if (config.basis != basis_) {
        throw ConfigError("history basis differs from policy basis");
    }
    return cutoffs_from_sorted(sorted_, config);
}

void AllocationPolicy::validate() const {
    if (q.empty() || q.front() != 0.0) {
        throw ConfigError("first cutoff must be zero");
    }
    if (!std::is_sorted(q.begin(), q.end())) {
        throw ConfigError("cutoffs must be non-decreasing");
    }
    if (a.size() != q.size() + 1) {
        throw ConfigError("allocation vector must have one more entry than the cutoff vector");
    }
    if (!a.front().is_sell()) {
        throw ConfigError("bin 1 must hold the SELL allocation");
    }
    for (std::size_t i = 1; i < a.size(); ++i) {
        if (a[i].is_sell()) throw ConfigError("only bin 1 may hold the SELL allocation");
    }
}

AllocationPolicy AllocationPolicy::up_down(std::int64_t a_max) {
    return AllocationPolicy{{0.0}, {Allocation::sell(), Allocation::units(a_max)}, false};
}

AllocationPolicy update_cutoffs(AllocationPolicy policy, double new_r_hat, ReturnHistory& history,
                                const PolicyConfig& config) {
    history.append(new_r_hat);
    auto c = history.cutoffs(config);
    policy.q = std::move(c.q);
    policy.merged = c.merged;
    return policy;
}

AMax compute_a_max(double capital, double unit_price) {
    if (!(unit_price > 0.0) || !std::isfinite(unit_price)) {
        throw DataError("unit price must be positive");
    }
    if (!(capital > 0.0) || !std::isfinite(capital)) {
        throw ConfigError("capital must be positive");
    }
    auto n = static_cast<std::int64_t>(std::floor(capital / unit_price));
    const double slack = capital * 1e-12;
    while (static_cast<double>(n + 1) * unit_price <= capital + slack) ++n;
    while (n > 0 && static_cast<double>(n) * unit_price > capital + slack) --n;
    return AMax{n, n > 0};
}

std::vector<PolicySnapshotRow> snapshot(const AllocationPolicy& policy, const BinStats& stats) {
    std::vector<PolicySnapshotRow> rows;
    const std::size_t n = policy.bins();
    for (std::size_t i = 1; i <= n; ++i) {
        PolicySnapshotRow row;
        row.bin = static_cast<int>(i);
        if (i >= 2) row.lower = policy.q[i - 2];
        if (i <= policy.q.size()) row.upper = policy.q[i - 1];
        if (i - 1 < stats.bins()) {
            row.delta = stats.delta[i - 1];
            row.count = stats.count[i - 1];
        }
        row.allocation = policy.a[i - 1];
        rows.push_back(row);
    }
    return rows;
}

std::string snapshot_csv_header() { return "date,bin,lower,upper,delta,count,allocation\n"; }

std::string snapshot_csv_rows(const std::string& date, const std::vector<PolicySnapshotRow>& rows) {
    std::string out;
    for (const auto& r : rows) {
        out += date + ',' + std::to_string(r.bin) + ',' + (r.lower ? format_double(*r.lower) : "") + ',' +
               (r.upper ? format_double(*r.upper) : "") + ',' + format_double(r.delta) + ',' +
               std::to_string(r.count) + ',' + r.allocation.to_string() + '\n';
    }
    return out;
}

std::string snapshot_json(const std::vector<PolicySnapshotRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j;
        j["bin"] = r.bin;
        j["lower"] = r.lower ? nlohmann::json(*r.lower) : nlohmann::json(nullptr);
        j["upper"] = r.upper ? nlohmann::json(*r.upper) : nlohmann::json(nullptr);
        j["delta"] = r.delta;
        j["count"] = r.count;
        j["allocation"] = r.allocation.to_string();
        arr.push_back(std::move(j));
    }
    return arr.dump(2);
}

}  // namespace lstmtrade
