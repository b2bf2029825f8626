#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mpmab/env.hpp"
#include "mpmab/policy.hpp"
#include "mpmab/random.hpp"
#include "mpmab/schedule.hpp"

namespace mpmab {

/// Full interaction log of one episode. Records of round t (1-based) occupy
/// [round_begin[t-1], round_begin[t]) and are ordered by ascending player.
struct RunTrace {
    int num_players = 0;
    int num_arms = 0;
    Round horizon = 0;
    std::vector<std::size_t> round_begin{0};
    std::vector<PlayerId> players;
    std::vector<ArmId> arms;
    std::vector<double> rewards;
    std::vector<std::int64_t> final_counts;  // n_i^p(T), player-major

    /// T*M*K records when the episode ran with snapshots; entry (t, p, i) is
    /// the state used for decisions in round t, i.e. after round t-1.
    std::vector<PosteriorSnapshot> snapshots;

    std::size_t num_records() const { return players.size(); }
    bool has_snapshots() const { return !snapshots.empty(); }

    std::pair<std::size_t, std::size_t> round_range(Round t) const {
        return {round_begin[static_cast<std::size_t>(t - 1)], round_begin[static_cast<std::size_t>(t)]};
    }

    const PosteriorSnapshot& snapshot(Round t, PlayerId p, ArmId i) const {
        return snapshots[(static_cast<std::size_t>(t - 1) * num_players + p) * num_arms + i];
    }

    std::int64_t final_count(PlayerId p, ArmId i) const {
        return final_counts[static_cast<std::size_t>(p) * num_arms + i];
    }

    /// n_i^p(t) for all pairs, rebuilt from records.
    std::vector<std::int64_t> counts_at(Round t) const {
        std::vector<std::int64_t> c(static_cast<std::size_t>(num_players) * num_arms, 0);
        const std::size_t end = round_begin[static_cast<std::size_t>(t)];
        for (std::size_t r = 0; r < end; ++r) ++c[static_cast<std::size_t>(players[r]) * num_arms + arms[r]];
        return c;
    }

    /// n_i(t), rebuilt from records.
    std::int64_t arm_count_at(ArmId i, Round t) const {
        std::int64_t n = 0;
        const std::size_t end = round_begin[static_cast<std::size_t>(t)];
        for (std::size_t r = 0; r < end; ++r) n += arms[r] == i;
        return n;
    }
};

/// Seeds for the two episode-level sub-streams.
struct EpisodeSeeds {
    std::uint64_t reward;
    std::uint64_t policy;

    static EpisodeSeeds from_run_seed(std::uint64_t run_seed) {
        return {substream_seed(run_seed, StreamTag::Reward), substream_seed(run_seed, StreamTag::Policy)};
    }
};

/// Reward generator for the draw of player p in round t.
inline CounterRng reward_stream(std::uint64_t reward_seed, Round t, PlayerId p) {
    return CounterRng(hash_words(reward_seed, t, p));
}

class PolicyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Runs the protocol for every round of `schedule`. The policy is reset first.
inline RunTrace run_episode(const MpmabInstance& inst, const Schedule& schedule, Policy& policy,
                            std::uint64_t run_seed, bool record_snapshots = false) {
    if (policy.num_players() != inst.num_players || policy.num_arms() != inst.num_arms)
        throw std::invalid_argument("run_episode: policy dimensions do not match the instance");
    if (schedule.num_players() != inst.num_players)
        throw std::invalid_argument("run_episode: schedule player count does not match the instance");

    const auto seeds = EpisodeSeeds::from_run_seed(run_seed);
    const KeyedNoise noise(seeds.policy);
    policy.reset();

    const Round T = schedule.horizon();
    const int M = inst.num_players;
    const int K = inst.num_arms;

    RunTrace trace;
    trace.num_players = M;
    trace.num_arms = K;
    trace.horizon = T;
    trace.round_begin.reserve(static_cast<std::size_t>(T) + 1);
    trace.players.reserve(static_cast<std::size_t>(schedule.total_activations()));
    trace.arms.reserve(static_cast<std::size_t>(schedule.total_activations()));
    trace.rewards.reserve(static_cast<std::size_t>(schedule.total_activations()));
    trace.final_counts.assign(static_cast<std::size_t>(M) * K, 0);

    std::vector<PosteriorSnapshot> snap;
    if (record_snapshots) {
        if (!policy.snapshot(snap))
            throw std::invalid_argument("run_episode: policy '" + policy.name() + "' does not expose snapshots");
        trace.snapshots.reserve(static_cast<std::size_t>(T) * M * K);
    }

    std::vector<ArmId> chosen(static_cast<std::size_t>(M));
    std::vector<Decision> decisions;
    decisions.reserve(static_cast<std::size_t>(M));

    for (Round t = 1; t <= T; ++t) {
        const auto active = schedule.active(t);
        if (record_snapshots) {
            policy.snapshot(snap);
            trace.snapshots.insert(trace.snapshots.end(), snap.begin(), snap.end());
        }

        const std::span<ArmId> out(chosen.data(), active.size());
        policy.act(t, active, noise, out);

        decisions.clear();
        for (std::size_t k = 0; k < active.size(); ++k) {
            const PlayerId p = active[k];
            const ArmId i = out[k];
            if (i < 0 || i >= K)
                throw PolicyError("policy '" + policy.name() + "' chose arm " + std::to_string(i) + " for player " +
                                  std::to_string(p) + " in round " + std::to_string(t));
            auto rng = reward_stream(seeds.reward, t, p);
            const double r = sample_reward(inst, p, i, rng);
            decisions.push_back({p, i, r});
            trace.players.push_back(p);
            trace.arms.push_back(i);
            trace.rewards.push_back(r);
            ++trace.final_counts[static_cast<std::size_t>(p) * K + i];
        }
        trace.round_begin.push_back(trace.players.size());
        policy.update(t, decisions);
    }
    return trace;
}

/// First round at which arm i has been pulled k times by anyone (tau_0 = 0;
/// T+1 if never).
inline Round tau_k(const RunTrace& trace, ArmId i, std::int64_t k) {
    if (k < 0) throw std::invalid_argument("tau_k: k must be nonnegative");
    if (k == 0) return 0;
    std::int64_t n = 0;
    for (Round t = 1; t <= trace.horizon; ++t) {
        const auto [b, e] = trace.round_range(t);
        for (std::size_t r = b; r < e; ++r) n += trace.arms[r] == i;
        if (n >= k) return t;
    }
    return trace.horizon + 1;
}

/// The player whose pull is the k-th pull of arm i, ties within a round
/// resolved by ascending player index. -1 if there is no such pull.
inline PlayerId kth_puller(const RunTrace& trace, ArmId i, std::int64_t k) {
    if (k <= 0) return -1;
    std::int64_t n = 0;
    for (std::size_t r = 0; r < trace.num_records(); ++r)
        if (trace.arms[r] == i && ++n == k) return trace.players[r];
    return -1;
}

/// First round at which player p has pulled arm i k times (pi_0 = 0; T+1 if never).
inline Round pi_k(const RunTrace& trace, ArmId i, PlayerId p, std::int64_t k) {
    if (k < 0) throw std::invalid_argument("pi_k: k must be nonnegative");
    if (k == 0) return 0;
    std::int64_t n = 0;
    for (Round t = 1; t <= trace.horizon; ++t) {
        const auto [b, e] = trace.round_range(t);
        for (std::size_t r = b; r < e; ++r) n += trace.arms[r] == i && trace.players[r] == p;
        if (n >= k) return t;
    }
    return trace.horizon + 1;
}

}  // namespace mpmab
