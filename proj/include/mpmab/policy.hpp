#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mpmab/env.hpp"
#include "mpmab/random.hpp"

namespace mpmab {

/// One active player's outcome in a round.
struct Decision {
    PlayerId player;
    ArmId arm;
    double reward;
};

/// Decision-time view of one (player, arm) posterior. Recorded for every
/// pair at the start of each round when snapshots are requested.
struct PosteriorSnapshot {
    std::int64_t own_count = 0;  // n_i^p(t-1)
    std::int64_t agg_count = 0;  // m_i^p(t-1)
    double ind_mean = 0.0;
    double ind_var = 0.0;
    double agg_mean = 0.0;
    double agg_var = 0.0;
    bool use_individual = false;

    friend bool operator==(const PosteriorSnapshot&, const PosteriorSnapshot&) = default;
};

/// Two-phase decision interface. `act` reads only state accumulated through
/// the previous round, so all active players decide simultaneously; `update`
/// receives every decision and reward of the round at once.
class Policy {
public:
    virtual ~Policy() = default;

    virtual std::string name() const = 0;
    virtual int num_players() const = 0;
    virtual int num_arms() const = 0;

    /// Restores the initial state.
    virtual void reset() = 0;

    /// Writes one arm per active player into `arms` (same order as `active`).
    virtual void act(Round t, std::span<const PlayerId> active, const DecisionNoise& noise,
                     std::span<ArmId> arms) const = 0;

    virtual void update(Round t, std::span<const Decision> round) = 0;

    /// Fills M*K records (player-major). Returns false if the policy keeps no
    /// posterior state.
    virtual bool snapshot(std::vector<PosteriorSnapshot>& /*out*/) const { return false; }

    virtual std::unique_ptr<Policy> clone() const = 0;
};

}  // namespace mpmab
