#include "bmg/eval.hpp"

#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace bmg;
using namespace bmg_test;

TEST_CASE("single-type deterministic profile equals the single-run utility") {
    GameDef g;
    g.player_count = 1;
    g.type_profiles = {{"11", ""}};
    g.prior = {Rat(1)};
    g.complexity = {parse_expression("steps", 1)};
    g.utility = {parse_expression("if a1 == \"7\" then 10 - c1 else 0", 1)};
    g.budgets = Budgets{100, 8};

    Machine m = const_machine("c7", "7", 3);
    auto u = expected_utility_exact(g, {m});
    CHECK(u[0] == 7);  // 10 - declared steps 3
}

TEST_CASE("roshambo: const-0 versus const-1 evaluates to (-2, 0)") {
    GameDef g = roshambo_game();
    auto u = expected_utility_exact(g, {const_machine("r", "0"), const_machine("p", "1")});
    CHECK(u[0] == -2);
    CHECK(u[1] == 0);
}

TEST_CASE("half/half mixer versus const-2 matches hand enumeration over one coin bit") {
    GameDef g = roshambo_game();
    Machine mix = mixer_machine("mix01", {{"0", Rat(1, 2)}, {"1", Rat(1, 2)}});
    Machine scissors = const_machine("c2", "2");

    auto u = expected_utility_exact(g, {mix, scissors});
    auto oracle = brute_force_utilities(g, {mix, scissors}, 1);
    CHECK(u[0] == oracle[0]);
    CHECK(u[1] == oracle[1]);
    // rock beats scissors, paper loses to scissors: payoff (1-1)/2 = 0
    CHECK(u[0] == Rat(0) - 2);
    CHECK(u[1] == Rat(0) - 1);
}

TEST_CASE("exact engine equals brute-force averaging over all coin strings") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        RandomGame rg = random_small_game(seed);
        auto profile = first_profile(rg);
        auto exact = expected_utility_exact(rg.game, profile);
        auto oracle = brute_force_utilities(rg.game, profile, 3);
        for (int i = 0; i < rg.game.player_count; ++i) CHECK(exact[i] == oracle[i]);
    }
}

TEST_CASE("enumeration mass sums to exactly 1") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        RandomGame rg = random_small_game(seed);
        EvalStats stats;
        expected_utility_exact(rg.game, first_profile(rg), &stats);
        CHECK(stats.total_mass == 1);
        CHECK(stats.leaf_combos >= 1);
    }
}

TEST_CASE("exact results do not depend on enumeration order") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        RandomGame rg = random_small_game(seed);
        auto profile = first_profile(rg);
        auto base = expected_utility_exact(rg.game, profile);

        GameDef shuffled = rg.game;
        std::reverse(shuffled.type_profiles.begin(), shuffled.type_profiles.end());
        std::reverse(shuffled.prior.begin(), shuffled.prior.end());
        auto flipped = expected_utility_exact(shuffled, profile);
        for (int i = 0; i < rg.game.player_count; ++i) CHECK(base[i] == flipped[i]);
    }
}

TEST_CASE("law of total expectation holds exactly") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        RandomGame rg = random_small_game(seed);
        auto profile = first_profile(rg);
        for (int player = 0; player < rg.game.player_count; ++player) {
            auto full = expected_utility_exact(rg.game, profile)[player];
            Rat mixed = 0;
            for (const std::string type : {"0", "1"}) {
                Rat mass = marginal_prior(rg.game, player, type);
                if (mass == 0) continue;
                mixed += mass * conditional_utility(rg.game, profile, player, type);
            }
            CHECK(mixed == full);
        }
    }
}

TEST_CASE("conditioning on a single-type game changes nothing") {
    GameDef g = roshambo_game();
    auto profile = std::vector<Machine>{const_machine("a", "0"), const_machine("b", "0")};
    CHECK(conditional_utility(g, profile, 0, "") == expected_utility_exact(g, profile)[0]);
}

TEST_CASE("conditioning on a zero-probability type is an error") {
    GameDef g = roshambo_game();
    auto profile = std::vector<Machine>{const_machine("a", "0"), const_machine("b", "0")};
    CHECK_THROWS_AS(conditional_utility(g, profile, 0, "110"), DomainError);
}

TEST_CASE("evaluation errors name the branch") {
    GameDef g;
    g.player_count = 1;
    g.type_profiles = {{"0", ""}, {"1", ""}};
    g.prior = {Rat(1, 2), Rat(1, 2)};
    g.complexity = {parse_expression("steps", 1)};
    // partial on types where a1 != "0": string plus number
    g.utility = {parse_expression("if t1 == \"0\" then 1 else a1 + 1", 1)};
    g.budgets = Budgets{100, 8};
    try {
        expected_utility_exact(g, {const_machine("c", "1")});
        FAIL("expected EvalError");
    } catch (const EvalError& e) {
        CHECK(std::string(e.what()).find("type profile #1") != std::string::npos);
    }
}

TEST_CASE("monte carlo: deterministic single-type profile has zero variance") {
    GameDef g = roshambo_game();
    auto profile = std::vector<Machine>{const_machine("a", "0"), const_machine("b", "1")};
    auto exact = expected_utility_exact(g, profile);
    auto mc = expected_utility_mc(g, profile, 1, 12345);
    CHECK(mc[0].estimate == rat_double(exact[0]));
    CHECK(mc[1].estimate == rat_double(exact[1]));
    CHECK_FALSE(mc[0].half_width.has_value());
}

TEST_CASE("monte carlo is deterministic in its seed") {
    GameDef g = roshambo_game();
    std::vector<Machine> profile{mixer_machine("m", {{"0", Rat(1, 2)}, {"1", Rat(1, 2)}}),
                                 const_machine("c", "2")};
    auto a = expected_utility_mc(g, profile, 500, 99);
    auto b = expected_utility_mc(g, profile, 500, 99);
    CHECK(a[0].estimate == b[0].estimate);
    CHECK(a[1].estimate == b[1].estimate);
}

TEST_CASE("monte carlo interval contains the exact value") {
    GameDef g = roshambo_game();
    std::vector<Machine> profile{
        mixer_machine("m", {{"0", Rat(1, 4)}, {"1", Rat(3, 8)}, {"2", Rat(3, 8)}}),
        const_machine("c", "2")};
    auto exact = expected_utility_exact(g, profile);
    McOptions opts;
    opts.utility_range = {{Rat(-3), Rat(1)}};   // payoff-cost range of this game
    auto mc = expected_utility_mc(g, profile, 10000, 2024, opts);
    REQUIRE(mc[0].half_width.has_value());
    for (int i = 0; i < 2; ++i) {
        double err = std::abs(mc[i].estimate - rat_double(exact[i]));
        CHECK(err <= *mc[i].half_width);
    }
}
