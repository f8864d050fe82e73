// Shared builders and independent oracles for the test suites.  The oracles
// here deliberately avoid the library's branching engines: expectations are
// recomputed by brute force over fixed coin strings.
#pragma once

#include "bmg/eval.hpp"
#include "bmg/game.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace bmg_test {

using namespace bmg;

// Rock-paper-scissors as a machine game: payoff minus a complexity that
// charges det_cost for deterministic machines and rand_cost for machines
// that consume coins.
inline GameDef roshambo_game(int det_cost = 1, int rand_cost = 2) {
    GameDef g;
    g.player_count = 2;
    g.type_profiles = {{"", "", ""}};
    g.prior = {Rat(1)};
    std::string cost = "if coinBits > 0 then " + std::to_string(rand_cost) + " else " +
                       std::to_string(det_cost);
    g.complexity = {parse_expression(cost), parse_expression(cost)};
    g.utility = {
        parse_expression("(if isBot(a1) then -1 else if isBot(a2) then 1 else "
                         "if a1 == a2 then 0 else if a2 == rot(a1) then -1 else 1) - c1",
                         2),
        parse_expression("(if isBot(a2) then -1 else if isBot(a1) then 1 else "
                         "if a1 == a2 then 0 else if a1 == rot(a2) then -1 else 1) - c2",
                         2),
    };
    g.budgets = Budgets{1000, 32};
    return g;
}

// Brute-force expected utilities: average over every fixed coin string of
// length coin_bits per player, weighted by the prior.  Exact.
inline std::vector<Rat> brute_force_utilities(const GameDef& g,
                                              const std::vector<Machine>& profile,
                                              unsigned coin_bits) {
    int m = g.player_count;
    std::uint64_t strings = std::uint64_t(1) << coin_bits;
    std::vector<Rat> acc(m, Rat(0));
    Rat leaf_weight = Rat(1) / rat_pow(Rat(strings), m);

    std::vector<std::uint64_t> pick(m, 0);
    for (std::size_t j = 0; j < g.type_profiles.size(); ++j) {
        if (g.prior[j] == 0) continue;
        const TypeProfile& tp = g.type_profiles[j];
        std::fill(pick.begin(), pick.end(), 0);
        while (true) {
            std::vector<Action> actions(m);
            std::vector<Rat> comps(m);
            for (int i = 0; i < m; ++i) {
                std::string tape;
                for (unsigned b = 0; b < coin_bits; ++b)
                    tape.push_back((pick[i] >> (coin_bits - 1 - b)) & 1 ? '1' : '0');
                RunOutcome res = run_machine(profile[i], tp[i], CoinTape{tape, 0}, g.budgets);
                if (!res.halted()) throw std::runtime_error("oracle: machine wants more coins");
                actions[i] = res.trace.output;
                comps[i] =
                    eval_complexity(g.complexity[i], metric_env(profile[i], tp[i], res.trace));
            }
            Env env = utility_env(tp, actions, comps);
            for (int i = 0; i < m; ++i)
                acc[i] += g.prior[j] * leaf_weight * eval_expr_rat(g.utility[i], env);

            int k = m - 1;
            while (k >= 0 && ++pick[k] == strings) pick[k--] = 0;
            if (k < 0) break;
        }
    }
    return acc;
}

// Random small games over binary actions, for oracle-equivalence and
// property suites: <= 3 type profiles, machines consuming <= 3 coin bits.
struct RandomGame {
    GameDef game;
    std::vector<std::vector<Machine>> machines;  // per player: candidate pool
};

inline Rat random_dyadic_prob(std::mt19937_64& rng, unsigned max_bits) {
    unsigned k = rng() % (max_bits + 1);
    std::uint64_t den = std::uint64_t(1) << k;
    std::uint64_t num = rng() % (den + 1);
    return Rat(num, den);
}

inline Machine random_binary_machine(std::mt19937_64& rng, const std::string& id,
                                     unsigned max_bits) {
    Rat p = random_dyadic_prob(rng, max_bits);
    if (p == 0) return const_machine(id, "1");
    if (p == 1) return const_machine(id, "0");
    return mixer_machine(id, {{"0", p}, {"1", Rat(1) - p}});
}

inline RandomGame random_small_game(std::uint64_t seed, int players = 2) {
    std::mt19937_64 rng(seed);
    RandomGame rg;
    GameDef& g = rg.game;
    g.player_count = players;

    int type_count = 1 + int(rng() % 3);
    std::vector<Rat> weights;
    Rat total = 0;
    for (int j = 0; j < type_count; ++j) {
        TypeProfile tp;
        for (int i = 0; i <= players; ++i) tp.push_back(rng() % 2 ? "1" : "0");
        g.type_profiles.push_back(tp);
        Rat w = Rat(1 + rng() % 4);
        weights.push_back(w);
        total += w;
    }
    for (auto& w : weights) g.prior.push_back(w / total);

    auto table_expr = [&](int player) {
        // random payoff over the joint binary action space, plus a charge
        // linear in own complexity
        auto cell = [&] { return std::to_string(int(rng() % 9) - 4); };
        std::string body;
        if (players == 1) {
            body = "if a1 == \"0\" then " + cell() + " else " + cell();
        } else {
            body = "if a1 == \"0\" then (if a2 == \"0\" then " + cell() + " else " + cell() +
                   ") else (if a2 == \"0\" then " + cell() + " else " + cell() + ")";
        }
        std::string lambda = std::to_string(int(rng() % 3));
        return parse_expression("(" + body + ") - " + lambda + " * c" +
                                    std::to_string(player + 1),
                                players);
    };
    for (int i = 0; i < players; ++i) {
        g.complexity.push_back(parse_expression("coinBits", players));
        g.utility.push_back(table_expr(i));
    }
    g.budgets = Budgets{100, 16};

    for (int i = 0; i < players; ++i) {
        std::vector<Machine> pool;
        int n = 2 + int(rng() % 3);
        for (int k = 0; k < n; ++k)
            pool.push_back(
                random_binary_machine(rng, "p" + std::to_string(i) + "m" + std::to_string(k), 3));
        rg.machines.push_back(std::move(pool));
    }
    return rg;
}

inline std::vector<Machine> first_profile(const RandomGame& rg) {
    std::vector<Machine> out;
    for (const auto& pool : rg.machines) out.push_back(pool.front());
    return out;
}

}  // namespace bmg_test
