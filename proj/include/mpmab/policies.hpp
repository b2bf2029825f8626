#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpmab/env.hpp"
#include "mpmab/policy.hpp"
#include "mpmab/random.hpp"

namespace mpmab {

enum class Algorithm { IndUcb, IndTs, RobustAggUcb, RobustAggTs, RobustAggTsV, UniformRandom };

inline const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::IndUcb: return "ind_ucb";
        case Algorithm::IndTs: return "ind_ts";
        case Algorithm::RobustAggUcb: return "robustagg_ucb";
        case Algorithm::RobustAggTs: return "robustagg_ts";
        case Algorithm::RobustAggTsV: return "robustagg_ts_v";
        case Algorithm::UniformRandom: return "uniform";
    }
    return "unknown";
}

inline Algorithm parse_algorithm(const std::string& s) {
    for (auto a : {Algorithm::IndUcb, Algorithm::IndTs, Algorithm::RobustAggUcb, Algorithm::RobustAggTs,
                   Algorithm::RobustAggTsV, Algorithm::UniformRandom})
        if (s == to_string(a)) return a;
    throw std::invalid_argument("unknown algorithm: " + s);
}

enum class TieBreak { LowestIndex, RandomUniform };

inline TieBreak parse_tie_break(const std::string& s) {
    if (s == "lowest_index") return TieBreak::LowestIndex;
    if (s == "random_uniform") return TieBreak::RandomUniform;
    throw std::invalid_argument("unknown tie_break: " + s);
}

inline const char* to_string(TieBreak t) {
    return t == TieBreak::LowestIndex ? "lowest_index" : "random_uniform";
}

/// Width w of the robust-aggregation deviation bound
/// F = w sqrt(ln T [lambda^2/n + (1-lambda)^2/m]) + (1-lambda) eps
/// under which its guarantees are proved: w = 8 sqrt(13).
inline const double kRobustAggProvableWidth = 8.0 * std::sqrt(13.0);

/// Width matching UCB-1's sqrt(2 ln t / n) bonus when lambda = 1.
inline const double kRobustAggUcb1Width = std::sqrt(2.0);

/// Algorithm constants. "experiment" is the set used for benchmarks;
/// "analysis" is the set under which the regret guarantees are proved.
struct ConstantsPreset {
    double c1;
    double c2;
    double ucb_width;

    static ConstantsPreset experiment() { return {0.5, 1.0, kRobustAggUcb1Width}; }
    static ConstantsPreset analysis() { return {40.0, 4.0, kRobustAggProvableWidth}; }
};

struct PolicyConfig {
    Algorithm algorithm = Algorithm::RobustAggTs;
    int num_players = 1;
    int num_arms = 1;
    Round horizon = 1;
    double epsilon = 0.0;
    double c1 = 0.5;
    double c2 = 1.0;
    double ucb_width = kRobustAggProvableWidth;  // RobustAgg-UCB only
    TieBreak tie_break = TieBreak::LowestIndex;
    bool ucb_global_time = false;  // Ind-UCB: ln(t) instead of ln(t_p)

    void check() const {
        if (num_players <= 0 || num_arms <= 0) throw std::invalid_argument("policy needs M, K > 0");
        if (horizon < 1) throw std::invalid_argument("policy needs T >= 1");
        if (!(c1 > 0.0) || !(c2 > 0.0) || !(ucb_width > 0.0)) throw std::invalid_argument("c1, c2 and ucb_width must be positive");
        if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0,1]");
    }
};

// ---------------------------------------------------------------------------
// Index formulas
// ---------------------------------------------------------------------------

/// UCB-1 index; +inf for an arm never pulled.
inline double ucb1_index(double mean, std::int64_t pulls, double time) {
    if (pulls == 0) return std::numeric_limits<double>::infinity();
    return mean + std::sqrt(2.0 * std::log(time) / static_cast<double>(pulls));
}

/// Leading factor w sqrt(ln T) of the robust-aggregation deviation bound.
inline double robust_agg_scale(Round horizon, double width = kRobustAggProvableWidth) {
    return width * std::sqrt(std::log(static_cast<double>(horizon)));
}

/// F(n, m, lambda, eps) = w sqrt(ln T [lambda^2/n + (1-lambda)^2/m]) + (1-lambda) eps;
/// the default w gives 8 sqrt(13 ln T [...]).
inline double robust_agg_bound(double n_bar, double m_bar, double lambda, double epsilon, Round horizon,
                               double width = kRobustAggProvableWidth) {
    const double var = lambda * lambda / n_bar + (1.0 - lambda) * (1.0 - lambda) / m_bar;
    return robust_agg_scale(horizon, width) * std::sqrt(var) + (1.0 - lambda) * epsilon;
}

struct LambdaChoice {
    double lambda;
    double value;
};

/// Exact minimizer of F over lambda in [0,1].
///
/// With a = 1/n, b = 1/m, s = a + b and u = s*lambda - b, the variance term is
/// ab/s + u^2/s, so F'(lambda) = A u / sqrt(ab/s + u^2/s) - eps. F is convex;
/// the stationary point is u* = eps sqrt((ab/s) / (A^2 - eps^2/s)) when
/// A^2 s > eps^2, and F is decreasing on all of [0,1] otherwise.
inline LambdaChoice minimize_F(double n_bar, double m_bar, double epsilon, Round horizon,
                               double width = kRobustAggProvableWidth) {
    if (!(n_bar >= 1.0) || !(m_bar >= 1.0)) throw std::invalid_argument("minimize_F: n_bar, m_bar must be >= 1");
    const double A = horizon >= 2 ? robust_agg_scale(horizon, width) : 0.0;
    const double a = 1.0 / n_bar;
    const double b = 1.0 / m_bar;
    const double s = a + b;

    double lambda;
    if (epsilon == 0.0) {
        lambda = b / s;  // n/(n+m)
    } else if (A == 0.0 || epsilon * epsilon >= A * A * s) {
        lambda = 1.0;
    } else {
        const double u = epsilon * std::sqrt((a * b / s) / (A * A - epsilon * epsilon / s));
        lambda = std::min(1.0, (u + b) / s);
    }
    const double var = lambda * lambda * a + (1.0 - lambda) * (1.0 - lambda) * b;
    return {lambda, A * std::sqrt(var) + (1.0 - lambda) * epsilon};
}

namespace detail {

/// argmax over `scores`; `tie_u` in (0,1) selects among exact ties when
/// random tie-breaking is configured.
inline ArmId select_arm(std::span<const double> scores, TieBreak tb, double tie_u) {
    ArmId best = 0;
    int ties = 1;
    for (ArmId i = 1; i < static_cast<ArmId>(scores.size()); ++i) {
        if (scores[i] > scores[best]) {
            best = i;
            ties = 1;
        } else if (scores[i] == scores[best]) {
            ++ties;
        }
    }
    if (tb == TieBreak::LowestIndex || ties == 1) return best;
    int pick = std::min(ties - 1, static_cast<int>(tie_u * ties));
    for (ArmId i = best; i < static_cast<ArmId>(scores.size()); ++i)
        if (scores[i] == scores[best] && pick-- == 0) return i;
    return best;
}

inline void check_round(std::span<const Decision> round, int num_players, int num_arms) {
    std::vector<char> seen(static_cast<std::size_t>(num_players), 0);
    for (const auto& d : round) {
        if (d.player < 0 || d.player >= num_players) throw std::out_of_range("update: player out of range");
        if (d.arm < 0 || d.arm >= num_arms) throw std::out_of_range("update: arm out of range");
        if (seen[d.player]++) throw std::invalid_argument("update: duplicate player in round decisions");
    }
}

}  // namespace detail

/// Shared bookkeeping: per-(player, arm) own counts and sums, per-arm totals.
class TabularPolicy : public Policy {
public:
    explicit TabularPolicy(const PolicyConfig& cfg) : cfg_(cfg) {
        cfg_.check();
        TabularPolicy::reset();
    }

    int num_players() const override { return cfg_.num_players; }
    int num_arms() const override { return cfg_.num_arms; }
    const PolicyConfig& config() const { return cfg_; }

    void reset() override {
        const auto mk = static_cast<std::size_t>(cfg_.num_players) * cfg_.num_arms;
        own_count_.assign(mk, 0);
        own_sum_.assign(mk, 0.0);
        arm_count_.assign(cfg_.num_arms, 0);
        arm_sum_.assign(cfg_.num_arms, 0.0);
    }

    std::int64_t own_count(PlayerId p, ArmId i) const { return own_count_[idx(p, i)]; }
    double own_sum(PlayerId p, ArmId i) const { return own_sum_[idx(p, i)]; }
    std::int64_t arm_count(ArmId i) const { return arm_count_[i]; }
    double arm_sum(ArmId i) const { return arm_sum_[i]; }

protected:
    std::size_t idx(PlayerId p, ArmId i) const { return static_cast<std::size_t>(p) * cfg_.num_arms + i; }

    void record_round(std::span<const Decision> round) {
        detail::check_round(round, cfg_.num_players, cfg_.num_arms);
        for (const auto& d : round) {
            ++own_count_[idx(d.player, d.arm)];
            own_sum_[idx(d.player, d.arm)] += d.reward;
            ++arm_count_[d.arm];
            arm_sum_[d.arm] += d.reward;
        }
    }

    PolicyConfig cfg_;
    std::vector<std::int64_t> own_count_;
    std::vector<double> own_sum_;
    std::vector<std::int64_t> arm_count_;
    std::vector<double> arm_sum_;
};

// ---------------------------------------------------------------------------
// Ind-UCB
// ---------------------------------------------------------------------------

/// Each player runs UCB-1 on its own data, with time measured in its own
/// activations unless `ucb_global_time` is set.
class IndUcbPolicy final : public TabularPolicy {
public:
    explicit IndUcbPolicy(const PolicyConfig& cfg) : TabularPolicy(cfg) { IndUcbPolicy::reset(); }

    std::string name() const override { return to_string(Algorithm::IndUcb); }

    void reset() override {
        TabularPolicy::reset();
        activations_.assign(cfg_.num_players, 0);
    }

    ArmId choose(Round t, PlayerId p, const DecisionNoise& noise) const {
        const int K = cfg_.num_arms;
        std::vector<double> scores(K);
        const double time =
            cfg_.ucb_global_time ? static_cast<double>(t) : static_cast<double>(activations_[p] + 1);
        for (ArmId i = 0; i < K; ++i) {
            const auto n = own_count_[idx(p, i)];
            scores[i] = ucb1_index(n > 0 ? own_sum_[idx(p, i)] / static_cast<double>(n) : 0.0, n, time);
        }
        return detail::select_arm(scores, cfg_.tie_break,
                                  cfg_.tie_break == TieBreak::RandomUniform ? noise.uniform(t, p, K) : 0.0);
    }

    void act(Round t, std::span<const PlayerId> active, const DecisionNoise& noise,
             std::span<ArmId> arms) const override {
        for (std::size_t k = 0; k < active.size(); ++k) arms[k] = choose(t, active[k], noise);
    }

    void update(Round, std::span<const Decision> round) override {
        record_round(round);
        for (const auto& d : round) ++activations_[d.player];
    }

    std::int64_t activations(PlayerId p) const { return activations_[p]; }

    std::unique_ptr<Policy> clone() const override { return std::make_unique<IndUcbPolicy>(*this); }

private:
    std::vector<std::int64_t> activations_;
};

// ---------------------------------------------------------------------------
// Ind-TS
// ---------------------------------------------------------------------------

/// Per-player Gaussian Thompson sampling: N(mean, 1/(n v 1)) per arm, prior N(0,1).
class IndTsPolicy final : public TabularPolicy {
public:
    explicit IndTsPolicy(const PolicyConfig& cfg) : TabularPolicy(cfg) {}

    std::string name() const override { return to_string(Algorithm::IndTs); }

    ArmId choose(Round t, PlayerId p, const DecisionNoise& noise) const {
        const int K = cfg_.num_arms;
        std::vector<double> theta(K);
        for (ArmId i = 0; i < K; ++i) {
            const double n = static_cast<double>(std::max<std::int64_t>(own_count_[idx(p, i)], 1));
            theta[i] = own_sum_[idx(p, i)] / n + std::sqrt(1.0 / n) * noise.standard_normal(t, p, i);
        }
        return detail::select_arm(theta, cfg_.tie_break,
                                  cfg_.tie_break == TieBreak::RandomUniform ? noise.uniform(t, p, K) : 0.0);
    }

    void act(Round t, std::span<const PlayerId> active, const DecisionNoise& noise,
             std::span<ArmId> arms) const override {
        for (std::size_t k = 0; k < active.size(); ++k) arms[k] = choose(t, active[k], noise);
    }

    void update(Round, std::span<const Decision> round) override { record_round(round); }

    std::unique_ptr<Policy> clone() const override { return std::make_unique<IndTsPolicy>(*this); }
};

// ---------------------------------------------------------------------------
// RobustAgg-TS
// ---------------------------------------------------------------------------

enum class AggUpdateMode {
    Delayed,  // refresh (p, i) only when p pulls i
    Eager,    // refresh aggregate posteriors of every (player, arm) each round
};

/// Thompson sampling that switches from a pooled posterior (all players'
/// data, mean shifted up by eps) to the player's own posterior once the
/// player has c1 ln T / eps^2 + 2M pulls of the arm.
class RobustAggTsPolicy final : public TabularPolicy {
public:
    RobustAggTsPolicy(const PolicyConfig& cfg, AggUpdateMode mode) : TabularPolicy(cfg), mode_(mode) {
        RobustAggTsPolicy::reset();
    }

    std::string name() const override {
        return to_string(mode_ == AggUpdateMode::Delayed ? Algorithm::RobustAggTs : Algorithm::RobustAggTsV);
    }

    AggUpdateMode mode() const { return mode_; }

    /// Own-pull count from which the individual posterior is used; +inf when eps = 0.
    double switch_threshold() const {
        if (cfg_.epsilon == 0.0) return std::numeric_limits<double>::infinity();
        return cfg_.c1 * std::log(static_cast<double>(cfg_.horizon)) / (cfg_.epsilon * cfg_.epsilon) +
               2.0 * cfg_.num_players;
    }

    void reset() override {
        TabularPolicy::reset();
        const auto mk = static_cast<std::size_t>(cfg_.num_players) * cfg_.num_arms;
        ind_mean_.assign(mk, 0.0);
        ind_var_.assign(mk, cfg_.c2);
        agg_mean_.assign(mk, 0.0);
        agg_var_.assign(mk, cfg_.c2);
        agg_count_.assign(mk, 0);
        threshold_ = switch_threshold();
    }

    bool uses_individual(PlayerId p, ArmId i) const {
        return static_cast<double>(own_count_[idx(p, i)]) >= threshold_;
    }

    ArmId choose(Round t, PlayerId p, const DecisionNoise& noise) const {
        const int K = cfg_.num_arms;
        std::vector<double> theta(K);
        for (ArmId i = 0; i < K; ++i) {
            const auto k = idx(p, i);
            const bool ind = uses_individual(p, i);
            const double mean = ind ? ind_mean_[k] : agg_mean_[k];
            const double var = ind ? ind_var_[k] : agg_var_[k];
            theta[i] = mean + std::sqrt(var) * noise.standard_normal(t, p, i);
        }
        return detail::select_arm(theta, cfg_.tie_break,
                                  cfg_.tie_break == TieBreak::RandomUniform ? noise.uniform(t, p, K) : 0.0);
    }

    void act(Round t, std::span<const PlayerId> active, const DecisionNoise& noise,
             std::span<ArmId> arms) const override {
        for (std::size_t k = 0; k < active.size(); ++k) arms[k] = choose(t, active[k], noise);
    }

    void update(Round, std::span<const Decision> round) override {
        record_round(round);
        for (const auto& d : round) {
            const auto k = idx(d.player, d.arm);
            const double n = static_cast<double>(std::max<std::int64_t>(own_count_[k], 1));
            ind_mean_[k] = own_sum_[k] / n;
            ind_var_[k] = cfg_.c2 / n;
            if (mode_ == AggUpdateMode::Delayed) refresh_aggregate(d.player, d.arm);
        }
        if (mode_ == AggUpdateMode::Eager)
            for (PlayerId q = 0; q < cfg_.num_players; ++q)
                for (ArmId j = 0; j < cfg_.num_arms; ++j) refresh_aggregate(q, j);
    }

    bool snapshot(std::vector<PosteriorSnapshot>& out) const override {
        out.resize(own_count_.size());
        for (PlayerId p = 0; p < cfg_.num_players; ++p)
            for (ArmId i = 0; i < cfg_.num_arms; ++i) {
                const auto k = idx(p, i);
                out[k] = {own_count_[k], agg_count_[k], ind_mean_[k],          ind_var_[k],
                          agg_mean_[k],  agg_var_[k],   uses_individual(p, i)};
            }
        return true;
    }

    double ind_mean(PlayerId p, ArmId i) const { return ind_mean_[idx(p, i)]; }
    double ind_var(PlayerId p, ArmId i) const { return ind_var_[idx(p, i)]; }
    double agg_mean(PlayerId p, ArmId i) const { return agg_mean_[idx(p, i)]; }
    double agg_var(PlayerId p, ArmId i) const { return agg_var_[idx(p, i)]; }
    std::int64_t agg_count(PlayerId p, ArmId i) const { return agg_count_[idx(p, i)]; }

    std::unique_ptr<Policy> clone() const override { return std::make_unique<RobustAggTsPolicy>(*this); }

private:
    void refresh_aggregate(PlayerId p, ArmId i) {
        const auto k = idx(p, i);
        const std::int64_t n = arm_count_[i];
        agg_mean_[k] = arm_sum_[i] / static_cast<double>(std::max<std::int64_t>(n, 1)) + cfg_.epsilon;
        agg_var_[k] = cfg_.c2 / static_cast<double>(std::max<std::int64_t>(n - cfg_.num_players, 1));
        agg_count_[k] = n;
    }

    AggUpdateMode mode_;
    double threshold_ = 0.0;
    std::vector<double> ind_mean_;
    std::vector<double> ind_var_;
    std::vector<double> agg_mean_;
    std::vector<double> agg_var_;
    std::vector<std::int64_t> agg_count_;
};

// ---------------------------------------------------------------------------
// RobustAgg (UCB)
// ---------------------------------------------------------------------------

/// UCB over a lambda-weighted mix of the player's own mean and the other
/// players' pooled mean, with lambda chosen to minimize the deviation bound.
class RobustAggUcbPolicy final : public TabularPolicy {
public:
    explicit RobustAggUcbPolicy(const PolicyConfig& cfg) : TabularPolicy(cfg) {}

    std::string name() const override { return to_string(Algorithm::RobustAggUcb); }

    struct ArmIndex {
        double own_mean;     // zeta
        double others_mean;  // eta
        double lambda;
        double bound;  // F at lambda
        double ucb;
    };

    ArmIndex index(PlayerId p, ArmId i) const {
        const auto k = idx(p, i);
        const std::int64_t n = own_count_[k];
        const std::int64_t m = arm_count_[i] - n;
        const double n_bar = static_cast<double>(std::max<std::int64_t>(n, 1));
        const double m_bar = static_cast<double>(std::max<std::int64_t>(m, 1));
        const double zeta = own_sum_[k] / n_bar;
        const double eta = (arm_sum_[i] - own_sum_[k]) / m_bar;
        const auto [lambda, bound] = minimize_F(n_bar, m_bar, cfg_.epsilon, cfg_.horizon, cfg_.ucb_width);
        return {zeta, eta, lambda, bound, lambda * zeta + (1.0 - lambda) * eta + bound};
    }

    ArmId choose(Round t, PlayerId p, const DecisionNoise& noise) const {
        const int K = cfg_.num_arms;
        std::vector<double> scores(K);
        for (ArmId i = 0; i < K; ++i) scores[i] = index(p, i).ucb;
        return detail::select_arm(scores, cfg_.tie_break,
                                  cfg_.tie_break == TieBreak::RandomUniform ? noise.uniform(t, p, K) : 0.0);
    }

    void act(Round t, std::span<const PlayerId> active, const DecisionNoise& noise,
             std::span<ArmId> arms) const override {
        for (std::size_t k = 0; k < active.size(); ++k) arms[k] = choose(t, active[k], noise);
    }

    void update(Round, std::span<const Decision> round) override { record_round(round); }

    std::unique_ptr<Policy> clone() const override { return std::make_unique<RobustAggUcbPolicy>(*this); }
};

// ---------------------------------------------------------------------------
// Uniform exploration (validation runs)
// ---------------------------------------------------------------------------

class UniformRandomPolicy final : public TabularPolicy {
public:
    explicit UniformRandomPolicy(const PolicyConfig& cfg) : TabularPolicy(cfg) {}

    std::string name() const override { return to_string(Algorithm::UniformRandom); }

    void act(Round t, std::span<const PlayerId> active, const DecisionNoise& noise,
             std::span<ArmId> arms) const override {
        const int K = cfg_.num_arms;
        for (std::size_t k = 0; k < active.size(); ++k)
            arms[k] = std::min(K - 1, static_cast<ArmId>(noise.uniform(t, active[k], 0) * K));
    }

    void update(Round, std::span<const Decision> round) override { record_round(round); }

    std::unique_ptr<Policy> clone() const override { return std::make_unique<UniformRandomPolicy>(*this); }
};

inline std::unique_ptr<Policy> make_policy(const PolicyConfig& cfg) {
    switch (cfg.algorithm) {
        case Algorithm::IndUcb: return std::make_unique<IndUcbPolicy>(cfg);
        case Algorithm::IndTs: return std::make_unique<IndTsPolicy>(cfg);
        case Algorithm::RobustAggUcb: return std::make_unique<RobustAggUcbPolicy>(cfg);
        case Algorithm::RobustAggTs: return std::make_unique<RobustAggTsPolicy>(cfg, AggUpdateMode::Delayed);
        case Algorithm::RobustAggTsV: return std::make_unique<RobustAggTsPolicy>(cfg, AggUpdateMode::Eager);
        case Algorithm::UniformRandom: return std::make_unique<UniformRandomPolicy>(cfg);
    }
    throw std::invalid_argument("make_policy: unknown algorithm");
}

}  // namespace mpmab
