#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpmab/env.hpp"
#include "mpmab/protocol.hpp"

namespace mpmab {

/// Regret trajectory of one run at a grid of checkpoint rounds.
struct RunSummary {
    std::vector<Round> checkpoints;
    std::vector<double> regret;         // collective pseudo-regret
    std::vector<double> player_regret;  // checkpoint-major, size C*M
    std::array<std::vector<double>, kNumCategories> category_regret;
    std::array<std::vector<std::int64_t>, kNumCategories> category_pulls;
    std::vector<double> realized_regret;  // only when requested
    int num_players = 0;
    std::int64_t total_activations = 0;

    double final_regret() const { return regret.empty() ? 0.0 : regret.back(); }
    double category_final_regret(ArmCategory c) const {
        const auto& v = category_regret[static_cast<int>(c)];
        return v.empty() ? 0.0 : v.back();
    }
    double player_regret_at(std::size_t checkpoint, PlayerId p) const {
        return player_regret[checkpoint * num_players + p];
    }
};

/// `count` evenly spaced rounds ceil(c*T/count), c = 1..count; always ends at T.
inline std::vector<Round> default_checkpoints(Round horizon, int count = 100) {
    std::vector<Round> out;
    if (horizon <= 0) return out;
    for (int c = 1; c <= count; ++c) {
        const Round r = (static_cast<Round>(c) * horizon + count - 1) / count;
        if (out.empty() || r > out.back()) out.push_back(r);
    }
    if (out.back() != horizon) out.push_back(horizon);
    return out;
}

namespace detail {

inline void check_checkpoints(const std::vector<Round>& checkpoints, Round horizon) {
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        if (checkpoints[c] < 0 || checkpoints[c] > horizon)
            throw std::invalid_argument("checkpoint outside [0, T]");
        if (c > 0 && checkpoints[c] <= checkpoints[c - 1])
            throw std::invalid_argument("checkpoints must be strictly increasing");
    }
}

}  // namespace detail

/// One pass over the trace: cumulative pseudo-regret sum of gap(p, i_t^p),
/// split by player and by arm category, sampled at each checkpoint.
inline RunSummary summarize_run(const RunTrace& trace, const GapTable& gaps, const CategoryTable& categories,
                                const std::vector<Round>& checkpoints, bool realized = false) {
    detail::check_checkpoints(checkpoints, trace.horizon);
    const int M = trace.num_players;
    RunSummary s;
    s.checkpoints = checkpoints;
    s.num_players = M;
    s.total_activations = static_cast<std::int64_t>(trace.num_records());
    const auto C = checkpoints.size();
    s.regret.reserve(C);
    s.player_regret.reserve(C * M);
    for (auto& v : s.category_regret) v.reserve(C);
    for (auto& v : s.category_pulls) v.reserve(C);

    double total = 0.0;
    double realized_total = 0.0;
    std::vector<double> per_player(M, 0.0);
    std::array<double, kNumCategories> cat_regret{};
    std::array<std::int64_t, kNumCategories> cat_pulls{};

    std::size_t next = 0;
    auto emit = [&] {
        s.regret.push_back(total);
        s.player_regret.insert(s.player_regret.end(), per_player.begin(), per_player.end());
        for (int c = 0; c < kNumCategories; ++c) {
            s.category_regret[c].push_back(cat_regret[c]);
            s.category_pulls[c].push_back(cat_pulls[c]);
        }
        if (realized) s.realized_regret.push_back(realized_total);
    };
    while (next < C && checkpoints[next] == 0) {
        emit();
        ++next;
    }
    for (Round t = 1; t <= trace.horizon && next < C; ++t) {
        const auto [b, e] = trace.round_range(t);
        for (std::size_t r = b; r < e; ++r) {
            const PlayerId p = trace.players[r];
            const ArmId i = trace.arms[r];
            const double d = gaps.gap(p, i);
            total += d;
            per_player[p] += d;
            const int c = static_cast<int>(categories(p, i));
            cat_regret[c] += d;
            ++cat_pulls[c];
            if (realized) realized_total += gaps.best_mean[p] - trace.rewards[r];
        }
        if (t == checkpoints[next]) {
            emit();
            ++next;
        }
    }
    return s;
}

/// Collective and per-player pseudo-regret at each checkpoint.
inline RunSummary regret_trajectory(const RunTrace& trace, const GapTable& gaps, const std::vector<Round>& checkpoints) {
    const CategoryTable categories(gaps, {});
    return summarize_run(trace, gaps, categories, checkpoints);
}

/// Sum over (p, i) of n_i^p(T) * gap(p, i), from final counts only.
inline double final_count_regret(const RunTrace& trace, const GapTable& gaps) {
    double total = 0.0;
    for (PlayerId p = 0; p < trace.num_players; ++p)
        for (ArmId i = 0; i < trace.num_arms; ++i)
            total += static_cast<double>(trace.final_count(p, i)) * gaps.gap(p, i);
    return total;
}

struct CategoryBreakdown {
    std::array<std::int64_t, kNumCategories> pulls{};
    std::array<double, kNumCategories> pull_fraction{};
    std::array<double, kNumCategories> regret{};
};

/// Partition of every recorded pull over the whole trace by arm category.
inline CategoryBreakdown category_breakdown(const RunTrace& trace, const GapTable& gaps,
                                            const std::vector<ArmId>& subpar) {
    const CategoryTable categories(gaps, subpar);
    CategoryBreakdown out;
    for (std::size_t r = 0; r < trace.num_records(); ++r) {
        const int c = static_cast<int>(categories(trace.players[r], trace.arms[r]));
        ++out.pulls[c];
        out.regret[c] += gaps.gap(trace.players[r], trace.arms[r]);
    }
    const auto n = trace.num_records();
    if (n > 0)
        for (int c = 0; c < kNumCategories; ++c)
            out.pull_fraction[c] = static_cast<double>(out.pulls[c]) / static_cast<double>(n);
    return out;
}

// ---------------------------------------------------------------------------
// Cross-run aggregation
// ---------------------------------------------------------------------------

struct SampleStats {
    std::vector<double> mean;
    std::vector<double> stddev;  // n-1 denominator; 0 when n = 1
    std::vector<double> std_error;
};

struct AggregateSummary {
    std::size_t num_runs = 0;
    std::vector<Round> checkpoints;
    SampleStats regret;
    std::array<SampleStats, kNumCategories> category_regret;
    std::array<SampleStats, kNumCategories> category_pulls;

    double final_mean() const { return regret.mean.empty() ? 0.0 : regret.mean.back(); }
    double final_stderr() const { return regret.std_error.empty() ? 0.0 : regret.std_error.back(); }
};

class MismatchedCheckpoints : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

template <typename Get>
SampleStats elementwise_stats(std::size_t runs, std::size_t points, Get&& get) {
    SampleStats s;
    s.mean.assign(points, 0.0);
    s.stddev.assign(points, 0.0);
    s.std_error.assign(points, 0.0);
    for (std::size_t c = 0; c < points; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < runs; ++r) sum += get(r, c);
        const double mean = sum / static_cast<double>(runs);
        double ss = 0.0;
        for (std::size_t r = 0; r < runs; ++r) {
            const double d = get(r, c) - mean;
            ss += d * d;
        }
        s.mean[c] = mean;
        if (runs > 1) {
            s.stddev[c] = std::sqrt(ss / static_cast<double>(runs - 1));
            s.std_error[c] = s.stddev[c] / std::sqrt(static_cast<double>(runs));
        }
    }
    return s;
}

}  // namespace detail

inline AggregateSummary aggregate_runs(const std::vector<RunSummary>& runs) {
    AggregateSummary a;
    a.num_runs = runs.size();
    if (runs.empty()) return a;
    a.checkpoints = runs.front().checkpoints;
    for (const auto& r : runs)
        if (r.checkpoints != a.checkpoints) throw MismatchedCheckpoints("aggregate_runs: checkpoint grids differ");
    const auto n = runs.size();
    const auto C = a.checkpoints.size();
    a.regret = detail::elementwise_stats(n, C, [&](std::size_t r, std::size_t c) { return runs[r].regret[c]; });
    for (int k = 0; k < kNumCategories; ++k) {
        a.category_regret[k] = detail::elementwise_stats(
            n, C, [&](std::size_t r, std::size_t c) { return runs[r].category_regret[k][c]; });
        a.category_pulls[k] = detail::elementwise_stats(n, C, [&](std::size_t r, std::size_t c) {
            return static_cast<double>(runs[r].category_pulls[k][c]);
        });
    }
    return a;
}

// ---------------------------------------------------------------------------
// summary.csv
// ---------------------------------------------------------------------------

struct RunRecord {
    std::int64_t run_id = 0;
    std::string algorithm;
    std::uint64_t instance_seed = 0;
    std::string schedule_kind;
    int v_subpar = 0;
    std::int64_t total_activations = 0;  // P of the schedule
    RunSummary summary;
};

inline constexpr const char* kSummaryCsvHeader =
    "run_id,algorithm,instance_seed,schedule_kind,v_subpar,checkpoint,regret_total,regret_optimal,"
    "regret_nearopt,regret_subpar,pulls_optimal,pulls_nearopt,pulls_subpar,P";

inline std::string format_real(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_summary_rows(std::ostream& out, const RunRecord& rec) {
    const auto& s = rec.summary;
    for (std::size_t c = 0; c < s.checkpoints.size(); ++c) {
        out << rec.run_id << ',' << rec.algorithm << ',' << rec.instance_seed << ',' << rec.schedule_kind << ','
            << rec.v_subpar << ',' << s.checkpoints[c] << ',' << format_real(s.regret[c]);
        for (int k = 0; k < kNumCategories; ++k) out << ',' << format_real(s.category_regret[k][c]);
        for (int k = 0; k < kNumCategories; ++k) out << ',' << s.category_pulls[k][c];
        out << ',' << rec.total_activations << '\n';
    }
}

inline void write_summary_csv(std::ostream& out, const std::vector<RunRecord>& records) {
    out << kSummaryCsvHeader << '\n';
    for (const auto& r : records) write_summary_rows(out, r);
}

}  // namespace mpmab
