#include "bmg/mediated.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <fstream>

using namespace bmg;

namespace {

StrategyMachine silent_machine(std::string id) {
    StrategyMachine m;
    m.id = std::move(id);
    return m;
}

Transducer det_memoryless(const std::string& id, const std::string& first,
                          const std::string& on_c, const std::string& on_d) {
    return build_transducer(id, first, {{"C", on_c}, {"D", on_d}}, {"C", "D"});
}

StrategyMachine tft() { return transducer_strategy(det_memoryless("tft", "C", "C", "D")); }
StrategyMachine alld() { return transducer_strategy(det_memoryless("alld", "D", "D", "D")); }
StrategyMachine allc() { return transducer_strategy(det_memoryless("allc", "C", "C", "C")); }

// Direct reference simulation of two deterministic memoryless strategies in
// the repeated game; independent of the mediated engine.
std::pair<std::string, std::string> reference_moves(const std::array<std::string, 3>& p1,
                                                    const std::array<std::string, 3>& p2,
                                                    int rounds) {
    std::string m1, m2;
    for (int r = 0; r < rounds; ++r) {
        std::string a = r == 0 ? p1[0] : (m2[r - 1] == 'C' ? p1[1] : p1[2]);
        std::string b = r == 0 ? p2[0] : (m1[r - 1] == 'C' ? p2[1] : p2[2]);
        m1 += a;
        m2 += b;
    }
    return {m1, m2};
}

std::vector<Expr> zero_complexity() {
    return {parse_expression("0"), parse_expression("0")};
}

std::vector<CoinTape> no_coins(int players) {
    return std::vector<CoinTape>(players + 1);
}

MediatedGameDef frpd(int rounds, const Rat& delta) {
    return make_repeated_game(prisoners_dilemma_payoffs(), rounds, delta, zero_complexity());
}

}  // namespace

TEST_CASE("silent machines with an echo mediator produce an empty transcript") {
    std::vector<StrategyMachine> profile{silent_machine("s1"), silent_machine("s2")};
    auto tr = execute_mediated(profile, echo_mediator(2), {"", "", ""}, no_coins(2), 1,
                               Budgets{16, 16});
    REQUIRE(tr.stages.size() == 1);
    CHECK(tr.stages[0].messages == std::vector<std::string>{"", ""});
    CHECK(tr.stages[0].replies == std::vector<std::string>{"", ""});
    CHECK_FALSE(tr.stages[0].actions[0].has_value());
    CHECK(tr.final_actions[0] == Action::of(""));
    CHECK(comm_metrics(tr, 0) == std::pair<std::uint64_t, std::uint64_t>{0, 0});
}

TEST_CASE("tit-for-tat against always-defect plays (C,D),(D,D),(D,D)") {
    std::vector<StrategyMachine> profile{tft(), alld()};
    auto tr = execute_mediated(profile, relay_mediator(), {"", "", ""}, no_coins(2), 3,
                               Budgets{16, 16});
    REQUIRE(tr.stages.size() == 3);
    CHECK(tr.stages[0].messages == std::vector<std::string>{"C", "D"});
    CHECK(tr.stages[1].messages == std::vector<std::string>{"D", "D"});
    CHECK(tr.stages[2].messages == std::vector<std::string>{"D", "D"});

    // payoff stream (-5,5), (-3,-3), (-3,-3) at delta = 1
    MediatedGameDef g = frpd(3, Rat(1));
    auto u = expected_utility_mediated(g, profile);
    CHECK(u[0] == -11);
    CHECK(u[1] == -1);
}

TEST_CASE("transcript serialization matches the golden file") {
    std::vector<StrategyMachine> profile{tft(), alld()};
    auto tr = execute_mediated(profile, relay_mediator(), {"", "", ""}, no_coins(2), 3,
                               Budgets{16, 16});
    std::ifstream in(std::string(BMG_TEST_DIR) + "/golden/frpd_tft_alld_n3.json");
    REQUIRE(in.good());
    nlohmann::json golden = nlohmann::json::parse(in);
    CHECK(transcript_to_json(tr) == golden);
}

TEST_CASE("discounted tit-for-tat mutual cooperation has the closed form value") {
    const int rounds = 10;
    const Rat delta(9, 10);
    MediatedGameDef g = frpd(rounds, delta);
    auto u = expected_utility_mediated(g, {tft(), tft()});
    Rat expect = Rat(3) * delta * (Rat(1) - rat_pow(delta, rounds)) / (Rat(1) - delta);
    CHECK(u[0] == expect);
    CHECK(u[1] == expect);
}

TEST_CASE("constant payoff streams satisfy the geometric discount identity") {
    const Rat delta(3, 4);
    for (int rounds : {1, 4, 7}) {
        MediatedGameDef g = frpd(rounds, delta);
        auto u = expected_utility_mediated(g, {allc(), allc()});
        Rat expect = Rat(3) * delta * (Rat(1) - rat_pow(delta, rounds)) / (Rat(1) - delta);
        CHECK(u[0] == expect);
    }
}

TEST_CASE("one-round repeated game reduces to the stage game") {
    MediatedGameDef g = frpd(1, Rat(1));
    auto u = expected_utility_mediated(g, {alld(), allc()});
    CHECK(u[0] == 5);
    CHECK(u[1] == -5);
}

TEST_CASE("mutual defection for two undiscounted rounds totals -6 each") {
    MediatedGameDef g = frpd(2, Rat(1));
    auto u = expected_utility_mediated(g, {alld(), alld()});
    CHECK(u[0] == -6);
    CHECK(u[1] == -6);
}

TEST_CASE("mutual tit-for-tat for three undiscounted rounds totals 9 each") {
    MediatedGameDef g = frpd(3, Rat(1));
    auto u = expected_utility_mediated(g, {tft(), tft()});
    CHECK(u[0] == 9);
    CHECK(u[1] == 9);
}

TEST_CASE("adapter fidelity: all 64 deterministic memoryless pairs match the reference") {
    std::vector<std::array<std::string, 3>> strategies;
    for (std::string f : {"C", "D"})
        for (std::string c : {"C", "D"})
            for (std::string d : {"C", "D"}) strategies.push_back({f, c, d});
    for (int rounds = 1; rounds <= 4; ++rounds)
        for (std::size_t i = 0; i < strategies.size(); ++i)
            for (std::size_t k = 0; k < strategies.size(); ++k) {
                const auto& s1 = strategies[i];
                const auto& s2 = strategies[k];
                auto profile = std::vector<StrategyMachine>{
                    transducer_strategy(det_memoryless("m1", s1[0], s1[1], s1[2])),
                    transducer_strategy(det_memoryless("m2", s2[0], s2[1], s2[2]))};
                auto tr = execute_mediated(profile, relay_mediator(), {"", "", ""}, no_coins(2),
                                           rounds, Budgets{16, 16});
                auto [m1, m2] = reference_moves(s1, s2, rounds);
                for (int r = 0; r < rounds; ++r) {
                    CHECK(tr.stages[r].messages[0] == std::string(1, m1[r]));
                    CHECK(tr.stages[r].messages[1] == std::string(1, m2[r]));
                }
            }
}

TEST_CASE("randomized memoryless strategy against tit-for-tat, by hand") {
    // step on observation C mixes evenly; first move cooperates
    Transducer t;
    t.id = "mix";
    t.states = {"s"};
    t.first_move = "C";
    t.alphabet = {"C", "D"};
    t.step[{"s", "C"}] = DyadicDist<TransducerStep>{
        {{{"C", "s"}, Rat(1, 2)}, {{"D", "s"}, Rat(1, 2)}}};
    t.step[{"s", "D"}] = DyadicDist<TransducerStep>::point({"D", "s"});

    MediatedGameDef g = frpd(2, Rat(1));
    EvalStats stats;
    auto u = expected_utility_mediated(g, {transducer_strategy(t), tft()}, &stats);
    // round 1: (C,C) -> 3,3.  round 2: mixer draws C or D against TfT's C.
    CHECK(u[0] == Rat(3) + Rat(1, 2) * 3 + Rat(1, 2) * 5);
    CHECK(u[1] == Rat(3) + Rat(1, 2) * 3 + Rat(1, 2) * -5);
    CHECK(stats.total_mass == 1);
    CHECK(stats.leaf_combos == 2);
}

TEST_CASE("mediator randomness branches the evaluation") {
    MediatorSpec noisy;
    noisy.id = "coin-broadcast";
    noisy.program = [](MediatorCtx& ctx) {
        std::size_t idx = ctx.draw_index({Rat(1, 2), Rat(1, 2)});
        std::string bit = idx == 0 ? "0" : "1";
        return std::vector<std::string>{bit, bit};
    };
    // player 1 echoes the mediator's stage-1 bit as its final action
    StrategyMachine echoer;
    echoer.id = "echoer";
    echoer.program = [](StageCtx& ctx) -> StageOutput {
        if (ctx.phase == 3 && ctx.stage == 2) return {"", ctx.reply(1)};
        return {};
    };

    MediatedGameDef g;
    g.player_count = 2;
    g.type_profiles = {{"", "", ""}};
    g.prior = {Rat(1)};
    g.stages = 2;
    g.mediator = noisy;
    g.complexity = zero_complexity();
    g.utility = {parse_expression("if a1 == \"1\" then 1 else 0", 2), parse_expression("0", 2)};
    g.budgets = Budgets{16, 16};

    EvalStats stats;
    auto u = expected_utility_mediated(g, {echoer, silent_machine("quiet")}, &stats);
    CHECK(u[0] == Rat(1, 2));
    CHECK(stats.total_mass == 1);
    CHECK(stats.leaf_combos == 4);  // two mediator draws, one per stage

    // explicit tape works through the public executor
    auto tapes = no_coins(2);
    tapes[2] = CoinTape{"10", 0};
    auto tr = execute_mediated({echoer, silent_machine("quiet")}, noisy, {"", "", ""}, tapes, 2,
                               Budgets{16, 16});
    CHECK(tr.final_actions[0] == Action::of("1"));
    CHECK(tr.mediator_coin_bits == 2);
}

TEST_CASE("messages in the action phase are protocol violations, and vice versa") {
    StrategyMachine wrong_phase;
    wrong_phase.id = "early-actor";
    wrong_phase.program = [](StageCtx& ctx) -> StageOutput {
        if (ctx.phase == 1) return {"", std::string("act")};
        return {};
    };
    CHECK_THROWS_AS(execute_mediated({wrong_phase, silent_machine("s")}, echo_mediator(2),
                                     {"", "", ""}, no_coins(2), 1, Budgets{16, 16}),
                    ProtocolViolation);

    StrategyMachine late_talker;
    late_talker.id = "late-talker";
    late_talker.program = [](StageCtx& ctx) -> StageOutput {
        if (ctx.phase == 3) return {"hello", std::nullopt};
        return {};
    };
    CHECK_THROWS_AS(execute_mediated({late_talker, silent_machine("s")}, echo_mediator(2),
                                     {"", "", ""}, no_coins(2), 1, Budgets{16, 16}),
                    ProtocolViolation);

    StrategyMachine eager_reader;
    eager_reader.id = "eager-reader";
    eager_reader.program = [](StageCtx& ctx) -> StageOutput {
        if (ctx.phase == 1) ctx.reply(ctx.stage);  // same-stage reply not yet delivered
        return {};
    };
    try {
        execute_mediated({eager_reader, silent_machine("s")}, echo_mediator(2), {"", "", ""},
                         no_coins(2), 1, Budgets{16, 16});
        FAIL("expected ProtocolViolation");
    } catch (const ProtocolViolation& e) {
        CHECK(std::string(e.what()).find("stage 1") != std::string::npos);
        CHECK(std::string(e.what()).find("phase 1") != std::string::npos);
    }
}

TEST_CASE("same-phase player order does not change the transcript") {
    std::vector<StrategyMachine> profile{tft(), alld()};
    MediatedExecOptions forward, reversed;
    reversed.player_order = {1, 0};
    auto a = execute_mediated(profile, relay_mediator(), {"", "", ""}, no_coins(2), 4,
                              Budgets{16, 16}, forward);
    auto b = execute_mediated(profile, relay_mediator(), {"", "", ""}, no_coins(2), 4,
                              Budgets{16, 16}, reversed);
    CHECK(transcript_to_json(a) == transcript_to_json(b));
}

TEST_CASE("phase budgets turn messages into lambda and actions into BOT") {
    StrategyMachine heavy;
    heavy.id = "heavy";
    heavy.phase_steps = 50;
    heavy.program = [](StageCtx& ctx) -> StageOutput {
        if (ctx.phase == 1) return {"11", std::nullopt};
        return {"", std::string("1")};
    };
    auto tr = execute_mediated({heavy, silent_machine("s")}, echo_mediator(2), {"", "", ""},
                               no_coins(2), 1, Budgets{10, 16});
    CHECK(tr.stages[0].messages[0] == "");  // forfeited message phase
    REQUIRE(tr.stages[0].actions[0].has_value());
    CHECK(tr.stages[0].actions[0]->is_bot());
    CHECK(tr.final_actions[0].is_bot());
    CHECK(tr.player_traces[0].budget_exceeded);
    CHECK(tr.player_traces[0].steps == 0);

    // a draw crossing the per-phase coin budget forfeits the same way
    StrategyMachine gambler;
    gambler.id = "gambler";
    gambler.program = [](StageCtx& ctx) -> StageOutput {
        if (ctx.phase == 1) {
            std::size_t idx = ctx.draw_index({Rat(1, 4), Rat(3, 4)});
            return {idx == 0 ? "0" : "1", std::nullopt};
        }
        return {};
    };
    auto tr2 = execute_mediated({gambler, silent_machine("s")}, echo_mediator(2), {"", "", ""},
                                {CoinTape{"1111", 0}, CoinTape{}, CoinTape{}}, 1, Budgets{10, 1});
    CHECK(tr2.stages[0].messages[0] == "");
    CHECK(tr2.player_traces[0].coin_bits == 0);
}

TEST_CASE("comm metrics count payload bits sent and reply bits read") {
    StrategyMachine reporter;
    reporter.id = "reporter";
    reporter.program = [](StageCtx& ctx) -> StageOutput {
        if (ctx.phase == 1 && ctx.stage == 1) return {ctx.type().substr(0, 3), std::nullopt};
        if (ctx.phase == 3 && ctx.stage == 2) return {"", ctx.reply(1)};
        return {};
    };
    StrategyMachine full;
    full.id = "full";
    full.program = [](StageCtx& ctx) -> StageOutput {
        if (ctx.phase == 1 && ctx.stage == 1) return {ctx.type(), std::nullopt};
        return {};
    };
    auto tr = execute_mediated({reporter, full}, echo_mediator(2), {"110101", "010111", ""},
                               no_coins(2), 2, Budgets{16, 16});
    CHECK(comm_metrics(tr, 0) == std::pair<std::uint64_t, std::uint64_t>{3, 3});
    CHECK(comm_metrics(tr, 1) == std::pair<std::uint64_t, std::uint64_t>{6, 0});
    CHECK(tr.final_actions[0] == Action::of("110"));
}

TEST_CASE("mediated certificates work through the equilibrium layer") {
    const Rat delta(9, 10);
    std::vector<StrategyMachine> profile{tft(), tft()};
    CandidateSet<StrategyMachine> cands{{tft(), alld(), allc()}, "three classics"};

    // three rounds: defecting early loses 6d^2 - 2d, so tit-for-tat holds
    auto cert = certify_epsilon_nash(frpd(3, delta), profile, {cands, cands}, Rat(0));
    CHECK(cert.is_epsilon_ne);
    CHECK(cert.players[0].gap == 0);
    CHECK(cert.players[0].argmax_id == "allc");  // ties with tft, lexicographic

    // one round: immediate defection gains exactly 2*delta
    auto one = certify_epsilon_nash(frpd(1, delta), profile, {cands, cands}, Rat(0));
    CHECK_FALSE(one.is_epsilon_ne);
    CHECK(one.players[0].gap == 2 * delta);
    CHECK(one.players[0].argmax_id == "alld");
}
