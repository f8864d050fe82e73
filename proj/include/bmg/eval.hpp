// Expected-utility evaluation.
//
// The exact engine enumerates type profiles weighted by the prior and
// branches on every coin request with weight 1/2 per bit; all arithmetic is
// rational, and the branch weights of a run tree sum to exactly 1.  The
// Monte Carlo engine estimates the same expectation from seeded i.i.d.
// draws and is only used for exploration-scale games.
#pragma once

#include "bmg/game.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bmg {

// ---------------------------------------------------------------------------
// Coin-branch enumeration for a single machine

struct WeightedTrace {
    Rat weight;  // c / 2^k, the probability of this coin branch
    RunTrace trace;
};

// All coin branches of one run, by extending the coin prefix exactly as far
// as the machine demands.  Leaf weights sum to 1.
inline std::vector<WeightedTrace> enumerate_runs(const Machine& m, const std::string& type,
                                                 const Budgets& budgets) {
    std::vector<WeightedTrace> out;
    std::function<void(std::string, Rat)> walk = [&](std::string prefix, Rat weight) {
        RunOutcome res = run_machine(m, type, CoinTape{prefix, 0}, budgets);
        if (res.halted()) {
            out.push_back({weight, std::move(res.trace)});
            return;
        }
        std::uint64_t need = res.coins_needed - prefix.size();
        Rat child_weight = weight / rat_pow(Rat(2), need);
        for (std::uint64_t v = 0; v < (std::uint64_t(1) << need); ++v) {
            std::string ext = prefix;
            for (std::uint64_t i = 0; i < need; ++i)
                ext.push_back((v >> (need - 1 - i)) & 1 ? '1' : '0');
            walk(std::move(ext), child_weight);
        }
    };
    walk("", Rat(1));
    return out;
}

// ---------------------------------------------------------------------------
// Environments

// Metric environment for a complexity model: one player's run.
inline Env metric_env(const Machine& m, const std::string& type, const RunTrace& t,
                      std::uint64_t bits_sent = 0, std::uint64_t bits_read = 0) {
    Env env;
    env.set("steps", Rat(t.steps))
        .set("coinBits", Rat(t.coin_bits))
        .set("inputBits", Rat(t.input_bits))
        .set("outputLen", Rat(t.output_len))
        .set("stateCount", Rat(states_used_for(m, type)))
        .set("bitsSent", Rat(bits_sent))
        .set("bitsRead", Rat(bits_read));
    return env;
}

inline Rat eval_complexity(const Expr& model, const Env& env) {
    Rat c = eval_expr_rat(model, env);
    if (c < 0) throw EvalError("complexity evaluated to " + rat_str(c) + ", must be nonnegative");
    return c;
}

// Utility environment: types (tn is nature's), actions, complexities.
inline Env utility_env(const TypeProfile& types, const std::vector<Action>& actions,
                       const std::vector<Rat>& complexities) {
    Env env;
    int m = (int)actions.size();
    for (int i = 0; i < m; ++i) {
        env.set("t" + std::to_string(i + 1), types[i]);
        env.set("a" + std::to_string(i + 1), value_of(actions[i]));
        env.set("c" + std::to_string(i + 1), complexities[i]);
    }
    env.set("tn", types[m]);
    return env;
}

// ---------------------------------------------------------------------------
// Exact engine

struct EvalStats {
    std::uint64_t leaf_combos = 0;
    Rat total_mass = 0;  // sums to exactly 1 over the full enumeration
};

namespace detail {

template <class Fn>
void rethrow_naming_branch(std::size_t profile_index, const TypeProfile& tp, Fn&& fn) {
    try {
        fn();
    } catch (const EvalError& e) {
        std::string types = "(";
        for (std::size_t i = 0; i < tp.size(); ++i)
            types += (i ? "," : "") + (tp[i].empty() ? std::string("\"\"") : tp[i]);
        types += ")";
        throw EvalError("type profile #" + std::to_string(profile_index) + " " + types + ": " +
                        e.what());
    }
}

}  // namespace detail

inline std::vector<Rat> expected_utility_exact(const GameDef& g,
                                               const std::vector<Machine>& profile,
                                               EvalStats* stats = nullptr) {
    validate_game(g);
    if ((int)profile.size() != g.player_count)
        throw DomainError("profile size does not match player count");
    int m = g.player_count;
    std::vector<Rat> acc(m, Rat(0));
    if (stats) *stats = EvalStats{};

    for (std::size_t j = 0; j < g.type_profiles.size(); ++j) {
        const TypeProfile& tp = g.type_profiles[j];
        if (g.prior[j] == 0) continue;
        detail::rethrow_naming_branch(j, tp, [&] {
            std::vector<std::vector<WeightedTrace>> leaves(m);
            for (int i = 0; i < m; ++i) leaves[i] = enumerate_runs(profile[i], tp[i], g.budgets);

            std::vector<std::size_t> idx(m, 0);
            while (true) {
                Rat w = g.prior[j];
                std::vector<Action> actions(m);
                std::vector<Rat> comps(m);
                for (int i = 0; i < m; ++i) {
                    const WeightedTrace& wt = leaves[i][idx[i]];
                    w *= wt.weight;
                    actions[i] = wt.trace.output;
                    comps[i] = eval_complexity(g.complexity[i],
                                               metric_env(profile[i], tp[i], wt.trace));
                }
                Env env = utility_env(tp, actions, comps);
                for (int i = 0; i < m; ++i) acc[i] += w * eval_expr_rat(g.utility[i], env);
                if (stats) {
                    stats->leaf_combos += 1;
                    stats->total_mass += w;
                }
                int k = m - 1;
                while (k >= 0 && ++idx[k] == leaves[k].size()) idx[k--] = 0;
                if (k < 0) break;
            }
        });
    }
    return acc;
}

// Exact expectation for one player conditioned on that player's type.
inline Rat conditional_utility(const GameDef& g, const std::vector<Machine>& profile, int player,
                               const std::string& type) {
    validate_game(g);
    if (player < 0 || player >= g.player_count) throw DomainError("player index out of range");
    Rat mass = marginal_prior(g, player, type);
    if (mass == 0)
        throw DomainError("cannot condition on zero-probability type '" + type + "'");

    GameDef cond = g;
    cond.type_profiles.clear();
    cond.prior.clear();
    for (std::size_t j = 0; j < g.type_profiles.size(); ++j) {
        if (g.type_profiles[j][player] != type) continue;
        cond.type_profiles.push_back(g.type_profiles[j]);
        cond.prior.push_back(g.prior[j] / mass);
    }
    return expected_utility_exact(cond, profile)[player];
}

// ---------------------------------------------------------------------------
// Monte Carlo engine

// Counter-based stream: sample i draws from a SplitMix64 generator seeded by
// mix(seed, i), so sample i is independent of scheduling and sample count.
struct SplitMix64 {
    std::uint64_t state;

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static SplitMix64 for_sample(std::uint64_t seed, std::uint64_t index) {
        SplitMix64 g{seed ^ (0xD1B54A32D192ED03ull * (index + 1))};
        g.next();
        return g;
    }
};

struct McEstimate {
    double estimate = 0;
    std::optional<double> half_width;  // absent without a declared utility range
    double confidence = 0;
};

struct McOptions {
    std::optional<std::pair<Rat, Rat>> utility_range;
    double confidence = 0.99;
};

inline std::vector<McEstimate> expected_utility_mc(const GameDef& g,
                                                   const std::vector<Machine>& profile,
                                                   std::uint64_t samples, std::uint64_t seed,
                                                   const McOptions& options = {}) {
    validate_game(g);
    if ((int)profile.size() != g.player_count)
        throw DomainError("profile size does not match player count");
    if (samples < 1) throw DomainError("samples must be >= 1");
    int m = g.player_count;

    std::vector<Rat> cumulative;
    Rat acc_p = 0;
    for (const auto& p : g.prior) cumulative.push_back(acc_p += p);

    const Rat two64 = rat_pow(Rat(2), 64);
    std::vector<Rat> sum(m, Rat(0));
    for (std::uint64_t s = 0; s < samples; ++s) {
        SplitMix64 rng = SplitMix64::for_sample(seed, s);
        Rat u(BigInt(rng.next()));
        u /= two64;
        std::size_t j = 0;
        while (j + 1 < cumulative.size() && u >= cumulative[j]) ++j;
        const TypeProfile& tp = g.type_profiles[j];

        std::vector<Action> actions(m);
        std::vector<Rat> comps(m);
        detail::rethrow_naming_branch(j, tp, [&] {
            for (int i = 0; i < m; ++i) {
                std::string tape;
                RunOutcome res = run_machine(profile[i], tp[i], CoinTape{tape, 0}, g.budgets);
                while (!res.halted()) {
                    while (tape.size() < res.coins_needed)
                        tape.push_back(rng.next() & 1 ? '1' : '0');
                    res = run_machine(profile[i], tp[i], CoinTape{tape, 0}, g.budgets);
                }
                actions[i] = res.trace.output;
                comps[i] = eval_complexity(g.complexity[i],
                                           metric_env(profile[i], tp[i], res.trace));
            }
            Env env = utility_env(tp, actions, comps);
            for (int i = 0; i < m; ++i) sum[i] += eval_expr_rat(g.utility[i], env);
        });
    }

    std::optional<double> hw;
    if (options.utility_range) {
        double span = rat_double(options.utility_range->second - options.utility_range->first);
        hw = span * std::sqrt(std::log(2.0 / (1.0 - options.confidence)) / (2.0 * samples));
    }
    std::vector<McEstimate> out(m);
    for (int i = 0; i < m; ++i)
        out[i] = McEstimate{rat_double(sum[i] / Rat(samples)), hw, options.confidence};
    return out;
}

}  // namespace bmg
