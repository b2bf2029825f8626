#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpmab/env.hpp"
#include "mpmab/random.hpp"

namespace mpmab {

enum class ScheduleKind { Concurrent, Sequential, RandomSubset, FromFile };

inline const char* to_string(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::Concurrent: return "concurrent";
        case ScheduleKind::Sequential: return "sequential";
        case ScheduleKind::RandomSubset: return "random_subset";
        case ScheduleKind::FromFile: return "file";
    }
    return "unknown";
}

inline ScheduleKind parse_schedule_kind(const std::string& s) {
    if (s == "concurrent") return ScheduleKind::Concurrent;
    if (s == "sequential") return ScheduleKind::Sequential;
    if (s == "random_subset") return ScheduleKind::RandomSubset;
    if (s == "file") return ScheduleKind::FromFile;
    throw std::invalid_argument("unknown schedule kind: " + s);
}

class ScheduleFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Oblivious sequence of active player sets, one per round. Each set is
/// stored sorted ascending; rounds are 1-based in the public API.
class Schedule {
public:
    Schedule() = default;

    Schedule(int num_players, const std::vector<std::vector<PlayerId>>& sets) : num_players_(num_players) {
        offsets_.reserve(sets.size() + 1);
        for (const auto& s : sets) append_round(s);
    }

    int num_players() const { return num_players_; }
    Round horizon() const { return static_cast<Round>(offsets_.size()) - 1; }
    std::int64_t total_activations() const { return static_cast<std::int64_t>(players_.size()); }

    std::span<const PlayerId> active(Round t) const {
        const auto b = offsets_[static_cast<std::size_t>(t - 1)];
        const auto e = offsets_[static_cast<std::size_t>(t)];
        return {players_.data() + b, e - b};
    }

    void append_round(std::vector<PlayerId> set) {
        std::sort(set.begin(), set.end());
        if (std::adjacent_find(set.begin(), set.end()) != set.end())
            throw ScheduleFormatError("duplicate player in active set");
        for (PlayerId p : set)
            if (p < 0 || p >= num_players_) throw ScheduleFormatError("player index out of range");
        players_.insert(players_.end(), set.begin(), set.end());
        offsets_.push_back(players_.size());
    }

    static Schedule empty(int num_players) {
        Schedule s;
        s.num_players_ = num_players;
        return s;
    }

private:
    int num_players_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<PlayerId> players_;
};

/// Concurrent: everyone every round. Sequential: round-robin singletons.
/// RandomSubset: each player independently with probability q.
inline Schedule make_schedule(ScheduleKind kind, int num_players, Round horizon, std::uint64_t seed,
                              double q = 0.5) {
    if (num_players <= 0) throw std::invalid_argument("make_schedule: M must be positive");
    if (horizon < 0) throw std::invalid_argument("make_schedule: negative horizon");
    if (kind == ScheduleKind::RandomSubset && !(q >= 0.0 && q <= 1.0))
        throw std::invalid_argument("make_schedule: q must lie in [0,1]");
    if (kind == ScheduleKind::FromFile)
        throw std::invalid_argument("make_schedule: file schedules are loaded with read_schedule");

    Schedule s = Schedule::empty(num_players);
    std::vector<PlayerId> set;
    CounterRng rng(seed);
    for (Round t = 1; t <= horizon; ++t) {
        set.clear();
        switch (kind) {
            case ScheduleKind::Concurrent:
                for (PlayerId p = 0; p < num_players; ++p) set.push_back(p);
                break;
            case ScheduleKind::Sequential:
                set.push_back(static_cast<PlayerId>((t - 1) % num_players));
                break;
            case ScheduleKind::RandomSubset:
                for (PlayerId p = 0; p < num_players; ++p)
                    if (uniform01(rng) < q) set.push_back(p);
                break;
            case ScheduleKind::FromFile: break;
        }
        s.append_round(set);
    }
    return s;
}

/// One line per round, comma-separated 1-based player indices; a blank line
/// is an empty active set.
inline Schedule read_schedule(std::istream& in, int num_players) {
    Schedule s = Schedule::empty(num_players);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<PlayerId> set;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            const auto first = field.find_first_not_of(" \t");
            if (first == std::string::npos) {
                if (line.find_first_not_of(" \t") == std::string::npos) break;
                throw ScheduleFormatError("empty field on line " + std::to_string(lineno));
            }
            std::size_t used = 0;
            long long v = 0;
            try {
                v = std::stoll(field.substr(first), &used);
            } catch (const std::exception&) {
                throw ScheduleFormatError("bad player index on line " + std::to_string(lineno));
            }
            if (field.find_first_not_of(" \t", first + used) != std::string::npos)
                throw ScheduleFormatError("bad player index on line " + std::to_string(lineno));
            if (v < 1 || v > num_players)
                throw ScheduleFormatError("player index out of range on line " + std::to_string(lineno));
            set.push_back(static_cast<PlayerId>(v - 1));
        }
        try {
            s.append_round(std::move(set));
        } catch (const ScheduleFormatError& e) {
            throw ScheduleFormatError(std::string(e.what()) + " on line " + std::to_string(lineno));
        }
    }
    return s;
}

inline void write_schedule(std::ostream& out, const Schedule& s) {
    for (Round t = 1; t <= s.horizon(); ++t) {
        bool first = true;
        for (PlayerId p : s.active(t)) {
            if (!first) out << ',';
            out << (p + 1);
            first = false;
        }
        out << '\n';
    }
}

}  // namespace mpmab
