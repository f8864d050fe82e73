#include "bmg/eval.hpp"
#include "bmg/machine.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace bmg;

namespace {

// One-step copy of the first input bit, then a bookkeeping step into halt.
// Hand trace on "101": q0 reads '1', writes it, stays; q1 moves to halt.
// Steps 2, input bits read 1, output "1".
TMSpec copy_first_bit_tm() {
    TMSpec tm;
    tm.state_count = 3;
    tm.start_state = 0;
    tm.halt_states = {2};
    for (char in : kTapeSymbols)
        for (char wk : kTapeSymbols) {
            TmEdge copy;
            copy.next_state = 1;
            copy.work_write = wk;
            if (in != kBlank) {
                copy.output_write = in;
                copy.output_move = Move::R;
            }
            tm.transitions[{0, in, wk}] = DyadicDist<TmEdge>::point(copy);
            TmEdge done;
            done.next_state = 2;
            done.work_write = wk;
            tm.transitions[{1, in, wk}] = DyadicDist<TmEdge>::point(done);
        }
    return tm;
}

TMSpec looping_tm() {
    TMSpec tm;
    tm.state_count = 2;
    tm.start_state = 0;
    tm.halt_states = {1};
    for (char in : kTapeSymbols)
        for (char wk : kTapeSymbols) {
            TmEdge loop;
            loop.next_state = 0;
            loop.work_write = wk;
            loop.input_move = Move::R;
            tm.transitions[{0, in, wk}] = DyadicDist<TmEdge>::point(loop);
        }
    return tm;
}

TMSpec coin_flip_tm() {
    TMSpec tm;
    tm.state_count = 2;
    tm.start_state = 0;
    tm.halt_states = {1};
    for (char in : kTapeSymbols)
        for (char wk : kTapeSymbols) {
            TmEdge zero;
            zero.next_state = 1;
            zero.work_write = wk;
            zero.output_write = '0';
            zero.output_move = Move::R;
            TmEdge one = zero;
            one.output_write = '1';
            tm.transitions[{0, in, wk}] = DyadicDist<TmEdge>{{{zero, Rat(1, 2)}, {one, Rat(1, 2)}}};
        }
    return tm;
}

Transducer tit_for_tat() {
    return build_transducer("tft", "C", {{"C", "C"}, {"D", "D"}}, {"C", "D"});
}

Transducer grim_trigger() {
    Transducer t;
    t.id = "grim";
    t.states = {"calm", "mad"};
    t.first_move = "C";
    t.alphabet = {"C", "D"};
    t.step[{"calm", "C"}] = DyadicDist<TransducerStep>::point({"C", "calm"});
    t.step[{"calm", "D"}] = DyadicDist<TransducerStep>::point({"D", "mad"});
    t.step[{"mad", "C"}] = DyadicDist<TransducerStep>::point({"D", "mad"});
    t.step[{"mad", "D"}] = DyadicDist<TransducerStep>::point({"D", "mad"});
    return t;
}

}  // namespace

TEST_CASE("tm whose start state halts outputs the empty string") {
    TMSpec tm;
    tm.state_count = 1;
    tm.start_state = 0;
    tm.halt_states = {0};
    validate_tm(tm);
    auto res = run_tm(tm, "101", CoinTape{}, Budgets{});
    REQUIRE(res.halted());
    CHECK(res.trace.output == Action::of(""));
    CHECK(res.trace.steps == 0);
    CHECK(res.trace.input_bits == 0);
    CHECK(res.trace.coin_bits == 0);
    CHECK_FALSE(res.trace.budget_exceeded);
}

TEST_CASE("looping tm exhausts its step budget and outputs BOT") {
    auto res = run_tm(looping_tm(), "11", CoinTape{}, Budgets{100, 64});
    REQUIRE(res.halted());
    CHECK(res.trace.output.is_bot());
    CHECK(res.trace.budget_exceeded);
    CHECK(res.trace.steps == 100);
    CHECK(res.trace.output_len == 0);
}

TEST_CASE("copy-first-bit tm matches its hand trace") {
    TMSpec tm = copy_first_bit_tm();
    validate_tm(tm);
    auto res = run_tm(tm, "101", CoinTape{}, Budgets{});
    REQUIRE(res.halted());
    CHECK(res.trace.output == Action::of("1"));
    CHECK(res.trace.steps == 2);
    CHECK(res.trace.input_bits == 1);
    CHECK(res.trace.output_len == 1);

    auto zero = run_tm(tm, "011", CoinTape{}, Budgets{});
    CHECK(zero.trace.output == Action::of("0"));
}

TEST_CASE("non-total transition map is a definition error") {
    TMSpec tm = copy_first_bit_tm();
    tm.transitions.erase({1, '0', '0'});
    CHECK_THROWS_AS(validate_tm(tm), DefinitionError);
}

TEST_CASE("tm runs are deterministic and ignore unread coin extensions") {
    TMSpec tm = coin_flip_tm();
    auto a = run_tm(tm, "1", CoinTape{"0", 0}, Budgets{});
    auto b = run_tm(tm, "1", CoinTape{"0111010", 0}, Budgets{});
    REQUIRE(a.halted());
    REQUIRE(b.halted());
    CHECK(a.trace == b.trace);
    CHECK(a.trace.output == Action::of("0"));
    CHECK(a.trace.coin_bits == 1);

    auto c = run_tm(tm, "1", CoinTape{"1", 0}, Budgets{});
    CHECK(c.trace.output == Action::of("1"));
}

TEST_CASE("tm asks for more coins rather than inventing them") {
    auto res = run_tm(coin_flip_tm(), "1", CoinTape{}, Budgets{});
    REQUIRE_FALSE(res.halted());
    CHECK(res.coins_needed == 1);
}

TEST_CASE("halting runs are unchanged under larger budgets") {
    TMSpec tm = copy_first_bit_tm();
    auto small = run_tm(tm, "101", CoinTape{}, Budgets{2, 1});
    auto large = run_tm(tm, "101", CoinTape{}, Budgets{5000, 64});
    REQUIRE(small.halted());
    CHECK(small.trace == large.trace);

    auto flip_small = run_tm(coin_flip_tm(), "1", CoinTape{"1", 0}, Budgets{1, 1});
    auto flip_large = run_tm(coin_flip_tm(), "1", CoinTape{"1", 0}, Budgets{77, 13});
    CHECK(flip_small.trace == flip_large.trace);
}

TEST_CASE("coin budget exhaustion yields BOT with the served bits recorded") {
    // budget below the demanded draw: the draw is not served at all
    auto res = run_tm(coin_flip_tm(), "1", CoinTape{"101", 0}, Budgets{100, 0});
    REQUIRE(res.halted());
    CHECK(res.trace.output.is_bot());
    CHECK(res.trace.budget_exceeded);
    CHECK(res.trace.coin_bits == 0);
}

TEST_CASE("declared play-safe machine outputs 2 at declared cost") {
    Machine safe = const_machine("const-2", "2");
    auto res = run_machine(safe, "1101", CoinTape{}, Budgets{});
    REQUIRE(res.halted());
    CHECK(res.trace.output == Action::of("2"));
    CHECK(res.trace.steps == 1);
    CHECK(res.trace.coin_bits == 0);
}

TEST_CASE("deterministic declared machine consumes no coins") {
    Machine m = const_machine("c", "0110");
    auto res = run_machine(m, "", CoinTape{"111", 0}, Budgets{});
    CHECK(res.trace.coin_bits == 0);
    CHECK(res.trace.output_len == 4);
}

TEST_CASE("half/half mixer has exact branch weights 1/2") {
    Machine mix = mixer_machine("mix", {{"0", Rat(1, 2)}, {"1", Rat(1, 2)}});
    // brute force over the single coin bit
    auto heads = run_machine(mix, "", CoinTape{"0", 0}, Budgets{});
    auto tails = run_machine(mix, "", CoinTape{"1", 0}, Budgets{});
    CHECK(heads.trace.output == Action::of("0"));
    CHECK(tails.trace.output == Action::of("1"));
    CHECK(heads.trace.coin_bits == 1);

    auto leaves = enumerate_runs(mix, "", Budgets{});
    REQUIRE(leaves.size() == 2);
    CHECK(leaves[0].weight == Rat(1, 2));
    CHECK(leaves[1].weight == Rat(1, 2));
    CHECK(leaves[0].trace.output == heads.trace.output);
    CHECK(leaves[1].trace.output == tails.trace.output);
}

TEST_CASE("declared machine rejects types outside its domain") {
    DeclaredMachine d;
    d.id = "narrow";
    d.behavior["00"] = DyadicDist<Action>::point(Action::of("1"));
    Machine m = make_machine(d);
    CHECK_THROWS_AS(run_machine(m, "01", CoinTape{}, Budgets{}), DomainError);
    CHECK(run_machine(m, "00", CoinTape{}, Budgets{}).trace.output == Action::of("1"));
}

TEST_CASE("static metrics") {
    CHECK(machine_metrics(make_machine(tit_for_tat())).state_count == 1);
    CHECK(machine_metrics(make_machine(grim_trigger())).state_count == 2);

    Machine declared = const_machine("d4", "1", 7, 4);
    CHECK(machine_metrics(declared).state_count == 4);
    CHECK(states_used_for(declared, "anything") == 4);

    TMSpec tm = copy_first_bit_tm();
    auto mm = machine_metrics(make_machine("copy", tm));
    CHECK(mm.state_count == 3);
    CHECK(mm.description_size == tm.transitions.size());
}

TEST_CASE("build_transducer covers the eight memoryless deterministic strategies") {
    Transducer tft = tit_for_tat();
    CHECK(tft.states.size() == 1);
    CHECK(tft.first_move == "C");
    CHECK(tft.step.at({"s", "C"}).outcomes[0].first.move == "C");
    CHECK(tft.step.at({"s", "D"}).outcomes[0].first.move == "D");

    Transducer alld = build_transducer("alld", "D", {{"C", "D"}, {"D", "D"}}, {"C", "D"});
    CHECK(alld.first_move == "D");
    CHECK(alld.step.at({"s", "C"}).outcomes[0].first.move == "D");

    std::set<std::string> signatures;
    for (std::string first : {"C", "D"})
        for (std::string rc : {"C", "D"})
            for (std::string rd : {"C", "D"}) {
                Transducer t = build_transducer("x", first, {{"C", rc}, {"D", rd}}, {"C", "D"});
                signatures.insert(first + rc + rd);
                validate_transducer(t);
            }
    CHECK(signatures.size() == 8);
}

TEST_CASE("partial response map is a definition error") {
    CHECK_THROWS_AS(build_transducer("bad", "C", {{"C", "C"}}, {"C", "D"}), DefinitionError);
}

TEST_CASE("views record exactly what a run read") {
    TMSpec tm = coin_flip_tm();
    CoinTape tape{"10011", 0};
    auto res = run_tm(tm, "1101", tape, Budgets{});
    View v = make_view("1101", tape, res.trace);
    CHECK(v.coin_prefix == "1");
    CHECK(v.type_prefix == "1");  // one step, head never left position 0
    CHECK(v.message_history.empty());
}
