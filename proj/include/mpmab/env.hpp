#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mpmab/random.hpp"

namespace mpmab {

using PlayerId = int;
using ArmId = int;
using Round = std::int64_t;

enum class RewardFamily { Bernoulli };

inline const char* to_string(RewardFamily f) {
    switch (f) {
        case RewardFamily::Bernoulli: return "bernoulli";
    }
    return "unknown";
}

/// Player-by-arm mean matrix with a known dissimilarity bound.
struct MpmabInstance {
    int num_players = 0;
    int num_arms = 0;
    double epsilon = 0.0;
    std::vector<double> means;  // row-major, player-major
    RewardFamily family = RewardFamily::Bernoulli;
    std::uint64_t seed = 0;
    int target_subpar = -1;  // -1 when not generated

    MpmabInstance() = default;
    MpmabInstance(int players, int arms, double eps, std::vector<double> mean_matrix)
        : num_players(players), num_arms(arms), epsilon(eps), means(std::move(mean_matrix)) {
        if (players <= 0 || arms <= 0)
            throw std::invalid_argument("instance needs at least one player and one arm");
        if (means.size() != static_cast<std::size_t>(players) * static_cast<std::size_t>(arms))
            throw std::invalid_argument("mean matrix size does not match M*K");
    }

    double mean(PlayerId p, ArmId i) const { return means[static_cast<std::size_t>(p) * num_arms + i]; }
    double& mean(PlayerId p, ArmId i) { return means[static_cast<std::size_t>(p) * num_arms + i]; }

    friend bool operator==(const MpmabInstance&, const MpmabInstance&) = default;
};

struct Violation {
    enum class Kind { MeanOutOfRange, Dissimilarity };
    Kind kind;
    ArmId arm;
    PlayerId player;
    PlayerId other;  // equals player for MeanOutOfRange
    double amount;   // the offending mean, or |mu^p - mu^q|
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Collects every mean outside [0,1] and every (i, p < q) pair whose means
/// differ by more than epsilon.
inline ValidationReport validate_instance(const MpmabInstance& inst) {
    ValidationReport report;
    for (PlayerId p = 0; p < inst.num_players; ++p)
        for (ArmId i = 0; i < inst.num_arms; ++i) {
            const double m = inst.mean(p, i);
            if (!(m >= 0.0 && m <= 1.0))
                report.violations.push_back({Violation::Kind::MeanOutOfRange, i, p, p, m});
        }
    for (ArmId i = 0; i < inst.num_arms; ++i)
        for (PlayerId p = 0; p < inst.num_players; ++p)
            for (PlayerId q = p + 1; q < inst.num_players; ++q) {
                const double diff = std::abs(inst.mean(p, i) - inst.mean(q, i));
                if (diff > inst.epsilon)
                    report.violations.push_back({Violation::Kind::Dissimilarity, i, p, q, diff});
            }
    return report;
}

struct GapTable {
    int num_players = 0;
    int num_arms = 0;
    std::vector<double> best_mean;  // per player
    std::vector<double> gaps;       // row-major, player-major
    std::vector<double> gap_min;    // per arm
    std::vector<double> gap_max;    // per arm

    double gap(PlayerId p, ArmId i) const { return gaps[static_cast<std::size_t>(p) * num_arms + i]; }
};

inline GapTable compute_gaps(const MpmabInstance& inst) {
    GapTable g;
    g.num_players = inst.num_players;
    g.num_arms = inst.num_arms;
    g.best_mean.resize(inst.num_players);
    g.gaps.resize(inst.means.size());
    g.gap_min.assign(inst.num_arms, std::numeric_limits<double>::infinity());
    g.gap_max.assign(inst.num_arms, 0.0);
    for (PlayerId p = 0; p < inst.num_players; ++p) {
        const auto row = inst.means.begin() + static_cast<std::ptrdiff_t>(p) * inst.num_arms;
        const double best = *std::max_element(row, row + inst.num_arms);
        g.best_mean[p] = best;
        for (ArmId i = 0; i < inst.num_arms; ++i) {
            const double d = best - inst.mean(p, i);
            g.gaps[static_cast<std::size_t>(p) * inst.num_arms + i] = d;
            g.gap_min[i] = std::min(g.gap_min[i], d);
            g.gap_max[i] = std::max(g.gap_max[i], d);
        }
    }
    return g;
}

/// Sorted arm indices with some player's gap strictly above alpha.
inline std::vector<ArmId> subpar_set(const GapTable& g, double alpha) {
    if (alpha < 0.0) throw std::invalid_argument("subpar_set: alpha must be nonnegative");
    std::vector<ArmId> out;
    for (ArmId i = 0; i < g.num_arms; ++i)
        if (g.gap_max[i] > alpha) out.push_back(i);
    return out;
}

enum class ArmCategory { Optimal = 0, NearOptimal = 1, Subpar = 2 };
inline constexpr int kNumCategories = 3;

inline const char* to_string(ArmCategory c) {
    switch (c) {
        case ArmCategory::Optimal: return "optimal";
        case ArmCategory::NearOptimal: return "nearopt";
        case ArmCategory::Subpar: return "subpar";
    }
    return "unknown";
}

/// Per-(player, arm) category lookup, built once from a gap table and the
/// subpar set at the categorization threshold.
class CategoryTable {
public:
    CategoryTable() = default;
    CategoryTable(const GapTable& g, const std::vector<ArmId>& subpar)
        : num_arms_(g.num_arms), cats_(g.gaps.size()) {
        std::vector<char> is_subpar(g.num_arms, 0);
        for (ArmId i : subpar) is_subpar.at(i) = 1;
        for (PlayerId p = 0; p < g.num_players; ++p)
            for (ArmId i = 0; i < g.num_arms; ++i) {
                auto& c = cats_[static_cast<std::size_t>(p) * num_arms_ + i];
                if (g.gap(p, i) == 0.0) c = ArmCategory::Optimal;
                else if (is_subpar[i]) c = ArmCategory::Subpar;
                else c = ArmCategory::NearOptimal;
            }
    }

    ArmCategory operator()(PlayerId p, ArmId i) const {
        return cats_[static_cast<std::size_t>(p) * num_arms_ + i];
    }

private:
    int num_arms_ = 0;
    std::vector<ArmCategory> cats_;
};

inline ArmCategory categorize_pull(const GapTable& g, const std::vector<ArmId>& subpar, PlayerId p, ArmId i) {
    if (g.gap(p, i) == 0.0) return ArmCategory::Optimal;
    if (std::find(subpar.begin(), subpar.end(), i) != subpar.end()) return ArmCategory::Subpar;
    return ArmCategory::NearOptimal;
}

/// Threshold used to classify arms as subpar in reports.
inline double categorization_alpha(double epsilon) { return 5.0 * epsilon; }

/// Bernoulli draw; consumes exactly one output of the generator.
template <typename Urbg>
double sample_reward(const MpmabInstance& inst, PlayerId p, ArmId i, Urbg& rng) {
    return uniform01(rng) < inst.mean(p, i) ? 1.0 : 0.0;
}

class InfeasibleParameters : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

template <typename Urbg>
double uniform_in(Urbg& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

}  // namespace detail

/// Band-construction parameters for generate_instance.
struct GenerationBands {
    double best_lo = 0.9;
    double best_hi = 0.95;
    double margin = 0.02;
    int max_attempts = 100;
};

/// Builds an instance whose 5*epsilon-subpar set has exactly `target_subpar`
/// arms. One arm is the common optimum with base mean b*; subpar arms get base
/// means low enough that a designated spread player sees a gap above 5*eps;
/// near-optimal arms sit within 4*eps of b* (less a margin) so nobody's gap
/// exceeds 5*eps. Every player's mean is its base mean plus an offset in
/// [-eps/2, eps/2], then clipped to [0,1].
inline MpmabInstance generate_instance(int num_players, int num_arms, double epsilon, int target_subpar,
                                       std::uint64_t seed, const GenerationBands& bands = {}) {
    if (num_players <= 0 || num_arms <= 0)
        throw std::invalid_argument("generate_instance: M and K must be positive");
    if (epsilon < 0.0 || epsilon > 1.0)
        throw std::invalid_argument("generate_instance: epsilon must lie in [0,1]");
    if (target_subpar < 0 || target_subpar > num_arms - 1)
        throw InfeasibleParameters("target subpar count must lie in [0, K-1]");

    const double half = epsilon / 2.0;
    const double alpha = categorization_alpha(epsilon);
    const int num_near = num_arms - 1 - target_subpar;
    const double m = bands.margin;

    auto subpar_hi = [&](double best) { return std::min(1.0, best + half) - alpha + half - m; };
    const double subpar_lo = half;
    const double near_lo_off = -(alpha - half) + half + m;  // b* - 4eps + m
    if (target_subpar > 0 && !(subpar_lo < subpar_hi(bands.best_lo)))
        throw InfeasibleParameters("subpar band is empty for this epsilon");
    if (num_near > 0 && !(near_lo_off < -m))
        throw InfeasibleParameters("near-optimal band is empty for this epsilon");

    CounterRng rng(seed);
    for (int attempt = 0; attempt < bands.max_attempts; ++attempt) {
        const double best = detail::uniform_in(rng, bands.best_lo, bands.best_hi);

        std::vector<double> base(num_arms);
        std::vector<int> role(num_arms);  // 0 optimal, 1 near-optimal, 2 subpar
        std::vector<ArmId> order(num_arms);
        std::iota(order.begin(), order.end(), 0);
        for (int k = num_arms - 1; k > 0; --k) {
            const int j = static_cast<int>(uniform01(rng) * (k + 1));
            std::swap(order[k], order[std::min(j, k)]);
        }
        role[order[0]] = 0;
        base[order[0]] = best;
        for (int k = 1; k < num_arms; ++k) {
            const ArmId a = order[k];
            if (k <= target_subpar) {
                role[a] = 2;
                base[a] = detail::uniform_in(rng, subpar_lo, subpar_hi(best));
            } else {
                role[a] = 1;
                base[a] = detail::uniform_in(rng, best + near_lo_off, best - m);
            }
        }

        const auto spread = static_cast<PlayerId>(uniform01(rng) * num_players);
        MpmabInstance inst(num_players, num_arms, epsilon,
                           std::vector<double>(static_cast<std::size_t>(num_players) * num_arms));
        for (PlayerId p = 0; p < num_players; ++p)
            for (ArmId i = 0; i < num_arms; ++i) {
                double offset;
                if (p == spread && role[i] == 0) offset = half;
                else if (p == spread && role[i] == 2) offset = -half;
                else offset = detail::uniform_in(rng, -half, half);
                inst.mean(p, i) = std::clamp(base[i] + offset, 0.0, 1.0);
            }
        inst.seed = seed;
        inst.target_subpar = target_subpar;

        if (!validate_instance(inst).ok()) continue;
        if (static_cast<int>(subpar_set(compute_gaps(inst), alpha).size()) == target_subpar) return inst;
    }
    throw InfeasibleParameters("could not hit the target subpar count within the attempt budget");
}

}  // namespace mpmab
