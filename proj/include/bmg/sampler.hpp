// Interval-sampler construction: a fair-coin machine hitting a target
// cumulative distribution, with exact decided/undecided mass accounting by
// branch enumeration.  After n bits the undecided mass is at most
// 2 * (N + 1) * 2^-n (each of the N+1 cell boundaries blocks at most two
// dyadic intervals per depth), and a cell's decided mass never exceeds its
// target.
#pragma once

#include "bmg/machine.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bmg {

struct SamplerStats {
    std::vector<Rat> decided_mass;  // per action, at the enumeration depth
    Rat undecided_mass = 0;
    Rat expected_bits = 0;  // undecided branches consume the full depth
    std::uint64_t depth = 0;
};

inline SamplerStats sampler_stats(const IntervalSampler& s, std::uint64_t depth) {
    validate_sampler(s);
    SamplerStats st;
    st.depth = depth;
    st.decided_mass.assign(s.actions.size(), Rat(0));

    // Walk only undecided prefixes; there are O(depth * N) of them.
    struct Node {
        Rat x;
        Rat h;
        std::uint64_t n;
    };
    std::vector<Node> stack{{Rat(0), Rat(1), 0}};
    while (!stack.empty()) {
        Node node = stack.back();
        stack.pop_back();
        if (auto cell = sampler_cell(s, node.x, node.h)) {
            st.decided_mass[*cell] += node.h;
            st.expected_bits += node.h * Rat(node.n);
            continue;
        }
        if (node.n == depth) {
            st.undecided_mass += node.h;
            st.expected_bits += node.h * Rat(node.n);
            continue;
        }
        Rat h2 = node.h / 2;
        stack.push_back({node.x, h2, node.n + 1});
        stack.push_back({node.x + h2, h2, node.n + 1});
    }
    return st;
}

struct BuiltSampler {
    Machine machine;
    SamplerStats stats;  // at depth coin_budget
};

// Builds the sampler machine for cumulative boundaries 0 = s_0 <= ... <=
// s_N = 1 over the given action labels.  The machine emits BOT once
// coin_budget bits fail to decide, unless a fallback action is supplied.
inline BuiltSampler build_interval_sampler(std::vector<Rat> cumulative,
                                           std::vector<std::string> actions,
                                           std::uint64_t coin_budget, std::string id = "sampler",
                                           std::optional<std::string> fallback = std::nullopt) {
    IntervalSampler s;
    s.cumulative = std::move(cumulative);
    s.actions = std::move(actions);
    s.coin_budget = coin_budget;
    s.fallback = std::move(fallback);
    validate_sampler(s);
    SamplerStats st = sampler_stats(s, coin_budget);
    return {make_machine(std::move(id), std::move(s)), std::move(st)};
}

}  // namespace bmg
