#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpmab/env.hpp"
#include "mpmab/parallel.hpp"
#include "mpmab/policy.hpp"
#include "mpmab/protocol.hpp"
#include "mpmab/random.hpp"
#include "mpmab/schedule.hpp"

namespace mpmab {

enum class ConcDirection {
    Lower,     // mu - estimate <= radius
    Upper,     // estimate - mu <= radius + 2 eps
    TwoSided,  // |estimate - mu| <= radius (individual estimates)
};

inline const char* to_string(ConcDirection d) {
    switch (d) {
        case ConcDirection::Lower: return "lower";
        case ConcDirection::Upper: return "upper";
        case ConcDirection::TwoSided: return "two_sided";
    }
    return "unknown";
}

struct ConcCheckReport {
    std::string estimate;  // "aggregate" or "individual"
    ConcDirection direction = ConcDirection::Lower;
    ArmId arm = 0;
    PlayerId player = -1;  // individual checks only
    std::int64_t k = 0;
    double delta = 0.0;
    std::int64_t episodes = 0;
    std::int64_t stopped = 0;  // episodes with the stopping time <= T
    std::int64_t violations = 0;
    std::int64_t count_range_failures = 0;  // n_j(tau_k) outside [k, k+M-1]
    double rate = 0.0;
    double slack = 0.0;  // 3 binomial standard deviations at delta
    bool insufficient_n = false;
    bool pass = false;
};

/// Radius sqrt(2 ln(2/delta) / ((n - M) v 1)) of the aggregate bound.
inline double agg_radius(std::int64_t n, int num_players, double delta) {
    return std::sqrt(2.0 * std::log(2.0 / delta) / static_cast<double>(std::max<std::int64_t>(n - num_players, 1)));
}

/// Radius sqrt(2 ln(4/delta) / (n v 1)) of the individual bound.
inline double ind_radius(std::int64_t n, double delta) {
    return std::sqrt(2.0 * std::log(4.0 / delta) / static_cast<double>(std::max<std::int64_t>(n, 1)));
}

inline double binomial_slack(double delta, std::int64_t episodes) {
    return 3.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(episodes));
}

namespace detail {

inline void finish_report(ConcCheckReport& r) {
    r.rate = r.episodes > 0 ? static_cast<double>(r.violations) / static_cast<double>(r.episodes) : 0.0;
    r.slack = r.episodes > 0 ? binomial_slack(r.delta, r.episodes) : 0.0;
    r.insufficient_n = r.episodes == 0 || r.slack > r.delta;
    r.pass = r.rate <= r.delta + r.slack && r.count_range_failures == 0;
}

/// State at a stopping time, as observed in one episode.
struct StopState {
    Round round;        // T+1 when not reached
    std::int64_t count;  // pulls counted through that round
    double sum;         // rewards summed through that round
};

/// For each k (sorted ascending), the first round with cumulative count >= k
/// over the records selected by `take`, plus count and sum through that round.
template <typename Take>
std::vector<StopState> stopping_states(const RunTrace& trace, const std::vector<std::int64_t>& ks, Take&& take) {
    std::vector<StopState> out(ks.size(), StopState{trace.horizon + 1, 0, 0.0});
    std::size_t next = 0;
    while (next < ks.size() && ks[next] == 0) out[next++] = {0, 0, 0.0};
    std::int64_t n = 0;
    double sum = 0.0;
    for (Round t = 1; t <= trace.horizon && next < ks.size(); ++t) {
        const auto [b, e] = trace.round_range(t);
        for (std::size_t r = b; r < e; ++r)
            if (take(r)) {
                ++n;
                sum += trace.rewards[r];
            }
        while (next < ks.size() && n >= ks[next]) out[next++] = {t, n, sum};
    }
    if (next < ks.size()) {
        // Unreached stopping times still report the totals through T.
        for (; next < ks.size(); ++next) out[next] = {trace.horizon + 1, n, sum};
    }
    return out;
}

inline std::vector<std::int64_t> sorted_unique(std::vector<std::int64_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace detail

struct ConcGrid {
    std::vector<ArmId> arms;
    std::vector<std::int64_t> ks;
    std::vector<double> deltas;
};

/// Monte-Carlo check of the aggregate-estimate concentration bound at the
/// stopping times tau_k(j). For every (j, k, delta) and both directions,
/// counts episodes where tau_k <= T and some player's mean is outside the
/// radius around agg(tau_k) = S_j(tau_k)/(n_j(tau_k) v 1) + eps, computed
/// from all data through round tau_k.
inline std::vector<ConcCheckReport> check_agg_concentration_grid(const MpmabInstance& inst, const Schedule& schedule,
                                                                 const Policy& prototype, const ConcGrid& grid,
                                                                 std::int64_t episodes, std::uint64_t seed,
                                                                 unsigned workers = 1) {
    const int M = inst.num_players;
    const Round T = schedule.horizon();
    const auto ks = detail::sorted_unique(grid.ks);
    for (auto k : ks)
        if (k < 0 || k > T * M) throw std::invalid_argument("check_agg_concentration: k must lie in [0, T*M]");
    for (auto j : grid.arms)
        if (j < 0 || j >= inst.num_arms) throw std::invalid_argument("check_agg_concentration: arm out of range");
    for (double d : grid.deltas)
        if (!(d > 0.0 && d <= 1.0)) throw std::invalid_argument("check_agg_concentration: delta must lie in (0,1]");
    if (episodes <= 0) throw std::invalid_argument("check_agg_concentration: need at least one episode");

    const std::size_t A = grid.arms.size(), Kn = ks.size(), D = grid.deltas.size();
    // Per episode: [arm][k][delta][direction] violation flags plus stopped/range flags.
    struct EpisodeResult {
        std::vector<char> lower, upper, stopped, range_fail;
    };
    std::vector<EpisodeResult> results(static_cast<std::size_t>(episodes));

    const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(workers, results.size()));
    parallel_for(chunks, workers, [&](std::size_t chunk) {
        auto policy = prototype.clone();
        for (std::size_t e = chunk; e < results.size(); e += chunks) {
            const auto trace = run_episode(inst, schedule, *policy, hash_words(seed, e));
            auto& res = results[e];
            res.lower.assign(A * Kn * D, 0);
            res.upper.assign(A * Kn * D, 0);
            res.stopped.assign(A * Kn, 0);
            res.range_fail.assign(A * Kn, 0);
            for (std::size_t a = 0; a < A; ++a) {
                const ArmId j = grid.arms[a];
                const auto states = detail::stopping_states(trace, ks, [&](std::size_t r) { return trace.arms[r] == j; });
                double mu_lo = 1.0, mu_hi = 0.0;
                for (PlayerId p = 0; p < M; ++p) {
                    mu_lo = std::min(mu_lo, inst.mean(p, j));
                    mu_hi = std::max(mu_hi, inst.mean(p, j));
                }
                for (std::size_t ki = 0; ki < Kn; ++ki) {
                    const auto& st = states[ki];
                    if (st.round > T) continue;
                    res.stopped[a * Kn + ki] = 1;
                    if (st.count < ks[ki] || st.count > ks[ki] + M - 1) res.range_fail[a * Kn + ki] = 1;
                    const double agg =
                        st.sum / static_cast<double>(std::max<std::int64_t>(st.count, 1)) + inst.epsilon;
                    for (std::size_t di = 0; di < D; ++di) {
                        const double rad = agg_radius(st.count, M, grid.deltas[di]);
                        const std::size_t slot = (a * Kn + ki) * D + di;
                        res.lower[slot] = mu_hi - agg > rad;
                        res.upper[slot] = agg - mu_lo > rad + 2.0 * inst.epsilon;
                    }
                }
            }
        }
    });

    std::vector<ConcCheckReport> reports;
    for (std::size_t a = 0; a < A; ++a)
        for (std::size_t ki = 0; ki < Kn; ++ki)
            for (std::size_t di = 0; di < D; ++di)
                for (auto dir : {ConcDirection::Lower, ConcDirection::Upper}) {
                    ConcCheckReport r;
                    r.estimate = "aggregate";
                    r.direction = dir;
                    r.arm = grid.arms[a];
                    r.k = ks[ki];
                    r.delta = grid.deltas[di];
                    r.episodes = episodes;
                    const std::size_t slot = (a * Kn + ki) * D + di;
                    for (const auto& res : results) {
                        r.stopped += res.stopped[a * Kn + ki];
                        r.count_range_failures += res.range_fail[a * Kn + ki];
                        r.violations += dir == ConcDirection::Lower ? res.lower[slot] : res.upper[slot];
                    }
                    detail::finish_report(r);
                    reports.push_back(r);
                }
    return reports;
}

inline ConcCheckReport check_agg_concentration(const MpmabInstance& inst, const Schedule& schedule,
                                               const Policy& prototype, ArmId arm, std::int64_t k, double delta,
                                               ConcDirection direction, std::int64_t episodes, std::uint64_t seed,
                                               unsigned workers = 1) {
    if (direction == ConcDirection::TwoSided)
        throw std::invalid_argument("check_agg_concentration: direction must be lower or upper");
    const auto reports =
        check_agg_concentration_grid(inst, schedule, prototype, {{arm}, {k}, {delta}}, episodes, seed, workers);
    return reports[direction == ConcDirection::Lower ? 0 : 1];
}

/// Monte-Carlo check of the individual-estimate bound at pi_k(i, p):
/// |own mean after k own pulls - mu_i^p| <= sqrt(2 ln(4/delta) / (k v 1)).
inline std::vector<ConcCheckReport> check_ind_concentration_grid(const MpmabInstance& inst, const Schedule& schedule,
                                                                 const Policy& prototype, PlayerId player,
                                                                 const ConcGrid& grid, std::int64_t episodes,
                                                                 std::uint64_t seed, unsigned workers = 1) {
    const Round T = schedule.horizon();
    const auto ks = detail::sorted_unique(grid.ks);
    for (auto k : ks)
        if (k < 0 || k > T) throw std::invalid_argument("check_ind_concentration: k must lie in [0, T]");
    if (player < 0 || player >= inst.num_players)
        throw std::invalid_argument("check_ind_concentration: player out of range");
    for (auto i : grid.arms)
        if (i < 0 || i >= inst.num_arms) throw std::invalid_argument("check_ind_concentration: arm out of range");
    for (double d : grid.deltas)
        if (!(d > 0.0 && d <= 1.0)) throw std::invalid_argument("check_ind_concentration: delta must lie in (0,1]");
    if (episodes <= 0) throw std::invalid_argument("check_ind_concentration: need at least one episode");

    const std::size_t A = grid.arms.size(), Kn = ks.size(), D = grid.deltas.size();
    struct EpisodeResult {
        std::vector<char> violated, stopped;
    };
    std::vector<EpisodeResult> results(static_cast<std::size_t>(episodes));

    const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(workers, results.size()));
    parallel_for(chunks, workers, [&](std::size_t chunk) {
        auto policy = prototype.clone();
        for (std::size_t e = chunk; e < results.size(); e += chunks) {
            const auto trace = run_episode(inst, schedule, *policy, hash_words(seed, e));
            auto& res = results[e];
            res.violated.assign(A * Kn * D, 0);
            res.stopped.assign(A * Kn, 0);
            for (std::size_t a = 0; a < A; ++a) {
                const ArmId i = grid.arms[a];
                const auto states = detail::stopping_states(
                    trace, ks, [&](std::size_t r) { return trace.arms[r] == i && trace.players[r] == player; });
                const double mu = inst.mean(player, i);
                for (std::size_t ki = 0; ki < Kn; ++ki) {
                    const auto& st = states[ki];
                    if (st.round > T) continue;
                    res.stopped[a * Kn + ki] = 1;
                    const double est = st.sum / static_cast<double>(std::max<std::int64_t>(st.count, 1));
                    for (std::size_t di = 0; di < D; ++di)
                        res.violated[(a * Kn + ki) * D + di] = std::abs(est - mu) > ind_radius(st.count, grid.deltas[di]);
                }
            }
        }
    });

    std::vector<ConcCheckReport> reports;
    for (std::size_t a = 0; a < A; ++a)
        for (std::size_t ki = 0; ki < Kn; ++ki)
            for (std::size_t di = 0; di < D; ++di) {
                ConcCheckReport r;
                r.estimate = "individual";
                r.direction = ConcDirection::TwoSided;
                r.arm = grid.arms[a];
                r.player = player;
                r.k = ks[ki];
                r.delta = grid.deltas[di];
                r.episodes = episodes;
                for (const auto& res : results) {
                    r.stopped += res.stopped[a * Kn + ki];
                    r.violations += res.violated[(a * Kn + ki) * D + di];
                }
                detail::finish_report(r);
                reports.push_back(r);
            }
    return reports;
}

inline ConcCheckReport check_ind_concentration(const MpmabInstance& inst, const Schedule& schedule,
                                               const Policy& prototype, ArmId arm, PlayerId player, std::int64_t k,
                                               double delta, std::int64_t episodes, std::uint64_t seed,
                                               unsigned workers = 1) {
    return check_ind_concentration_grid(inst, schedule, prototype, player, {{arm}, {k}, {delta}}, episodes, seed,
                                        workers)
        .front();
}

// ---------------------------------------------------------------------------
// Delayed-update invariant
// ---------------------------------------------------------------------------

struct InvariantViolation {
    PlayerId player;
    ArmId arm;
    Round round;        // round whose decision-time state differs
    Round interval_start;  // first round of the inter-pull interval
    std::string field;
};

class MissingSnapshots : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// For every (player, arm), the decision-time state must stay constant on
/// each interval of rounds between consecutive pulls of the arm by the
/// player. Returns every round at which it does not.
inline std::vector<InvariantViolation> check_invariants_trace(const RunTrace& trace) {
    if (!trace.has_snapshots()) throw MissingSnapshots("check_invariants_trace: trace has no snapshots");
    const int M = trace.num_players;
    const int K = trace.num_arms;
    const auto MK = static_cast<std::size_t>(M) * K;

    std::vector<InvariantViolation> out;
    std::vector<Round> start(MK, 1);
    std::vector<char> pulled(MK, 0);
    for (Round t = 1; t <= trace.horizon; ++t) {
        for (PlayerId p = 0; p < M; ++p)
            for (ArmId i = 0; i < K; ++i) {
                const auto k = static_cast<std::size_t>(p) * K + i;
                if (pulled[k]) {
                    start[k] = t;
                    pulled[k] = 0;
                    continue;
                }
                if (start[k] == t) continue;
                const auto& ref = trace.snapshot(start[k], p, i);
                const auto& cur = trace.snapshot(t, p, i);
                if (ref == cur) continue;
                const char* field = ref.own_count != cur.own_count       ? "own_count"
                                    : ref.agg_count != cur.agg_count     ? "agg_count"
                                    : ref.ind_mean != cur.ind_mean       ? "ind_mean"
                                    : ref.ind_var != cur.ind_var         ? "ind_var"
                                    : ref.agg_mean != cur.agg_mean       ? "agg_mean"
                                    : ref.agg_var != cur.agg_var         ? "agg_var"
                                                                         : "use_individual";
                out.push_back({p, i, t, start[k], field});
            }
        const auto [b, e] = trace.round_range(t);
        for (std::size_t r = b; r < e; ++r) pulled[static_cast<std::size_t>(trace.players[r]) * K + trace.arms[r]] = 1;
    }
    return out;
}

}  // namespace mpmab
