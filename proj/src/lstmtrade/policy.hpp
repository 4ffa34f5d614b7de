#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lstmtrade {

/// Units to buy in a bin, or the sell-everything sentinel.
class Allocation {
public:
    static constexpr Allocation sell() { return Allocation(-1); }
    static constexpr Allocation units(std::int64_t n) { return Allocation(n < 0 ? 0 : n); }

    constexpr bool is_sell() const { return units_ < 0; }
    constexpr std::int64_t units() const { return units_ < 0 ? 0 : units_; }
    std::string to_string() const { return is_sell() ? "SELL" : std::to_string(units_); }

    friend constexpr bool operator==(Allocation, Allocation) = default;

private:
    explicit constexpr Allocation(std::int64_t units) : units_(units) {}
    std::int64_t units_;
};

enum class QuantileBasis {
    absolute,  // deciles of |r_hat|
    signed_,   // deciles of r_hat itself, clamped at the zero cutoff
};

struct PolicyConfig {
    std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    double epsilon = 0.0;
    std::int64_t a_max = 1;
    std::size_t bootstrap_steps = 120;
    QuantileBasis basis = QuantileBasis::absolute;
    std::size_t min_samples = 10;

    void validate() const;
    /// Zero cutoff plus one per fraction, so n = fractions + 2.
    std::size_t bin_count() const { return fractions.size() + 2; }
};

struct Cutoffs {
    std::vector<double> q;  // q[0] == 0; non-decreasing
    bool merged = false;    // some bins collapsed to zero width
};

/// Nearest-rank (type 1) percentiles of the configured basis over `predicted_returns`.
Cutoffs compute_cutoffs(std::span<const double> predicted_returns, const PolicyConfig& config);

/// 1 if r < q[0], n if r >= q.back(), else j+1 for r in [q[j-1], q[j]). 1-based as in trade logs.
int classify(double r_hat, std::span<const double> q);

/// Per-bin realized price-difference sums; index 0 (the sell bin) stays empty.
struct BinStats {
    std::vector<double> delta;
    std::vector<std::int64_t> count;

    BinStats() = default;
    explicit BinStats(std::size_t bins) : delta(bins, 0.0), count(bins, 0) {}
    std::size_t bins() const { return delta.size(); }
};

std::vector<Allocation> optimal_allocations(const BinStats& stats, const PolicyConfig& config);

/// Adds one completed buy/sell cycle; returns true when delta crossed epsilon.
bool record_trade_outcome(BinStats& stats, int entry_bin, double y_buy, double y_sell, double epsilon = 0.0);

struct CompletedCycle {
    int entry_bin = 0;
    double y_buy = 0.0;
    double y_sell = 0.0;
};

/// G = sum_i A_i * sum_j (y_sell - y_buy) over a fixed cycle history.
double realized_profit(std::span<const CompletedCycle> cycles, std::span<const Allocation> allocations);

/// Growing window of predicted returns, kept sorted in basis units.
class ReturnHistory {
public:
    explicit ReturnHistory(QuantileBasis basis = QuantileBasis::absolute) : basis_(basis) {}

    void append(double r_hat);
    std::size_t size() const { return sorted_.size(); }
    std::span<const double> raw() const { return raw_; }
    Cutoffs cutoffs(const PolicyConfig& config) const;

private:
    QuantileBasis basis_;
    std::vector<double> raw_;
    std::vector<double> sorted_;
};

struct AllocationPolicy {
    std::vector<double> q;
    std::vector<Allocation> a;
    bool merged = false;

    std::size_t bins() const { return a.size(); }
    void validate() const;

    /// Q = [0], A = [SELL, a_max]: buy on any non-negative predicted return.
    static AllocationPolicy up_down(std::int64_t a_max);
};

/// Appends `new_r_hat` to `history` and refreshes the cutoffs; allocations are untouched.
AllocationPolicy update_cutoffs(AllocationPolicy policy, double new_r_hat, ReturnHistory& history,
                                const PolicyConfig& config);

struct AMax {
    std::int64_t units = 0;
    bool tradeable = false;
};

/// floor(capital / unit_price), tolerant of decimal round-off in exact multiples.
AMax compute_a_max(double capital, double unit_price);

struct PolicySnapshotRow {
    int bin = 0;
    std::optional<double> lower;
    std::optional<double> upper;
    double delta = 0.0;
    std::int64_t count = 0;
    Allocation allocation = Allocation::units(0);
};

std::vector<PolicySnapshotRow> snapshot(const AllocationPolicy& policy, const BinStats& stats);
std::string snapshot_csv_header();
std::string snapshot_csv_rows(const std::string& date, const std::vector<PolicySnapshotRow>& rows);
std::string snapshot_json(const std::vector<PolicySnapshotRow>& rows);

}  // namespace lstmtrade
