// Machine representations and the metered execution engine.
//
// Four machine kinds sit behind one execution contract: an interpreted
// Turing machine, a declared-metric machine (behavior table plus stipulated
// costs), a finite transducer, and an interval sampler.  A run maps
// (type input, coin bits, budgets) to a RunTrace; all randomization is
// restricted to dyadic probabilities c/2^k so a draw is exactly k fair
// coin bits.
#pragma once

#include "bmg/rational.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace bmg {

struct DefinitionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Actions and views

// A machine output: a finite string, or the distinguished non-termination
// symbol BOT.  BOT is distinct from every string, including "".
struct Action {
    std::optional<std::string> value;

    static Action bot() { return Action{std::nullopt}; }
    static Action of(std::string s) { return Action{std::move(s)}; }

    bool is_bot() const { return !value.has_value(); }
    const std::string& str() const {
        if (!value) throw DomainError("BOT has no string value");
        return *value;
    }
    bool operator==(const Action&) const = default;
};

inline std::string action_str(const Action& a) { return a.is_bot() ? "BOT" : a.str(); }

// The portion of its inputs a machine actually read.
struct View {
    std::string type_prefix;
    std::string coin_prefix;
    std::vector<std::string> message_history;
};

struct RunTrace {
    Action output = Action::bot();
    std::uint64_t steps = 0;
    std::uint64_t coin_bits = 0;
    std::uint64_t input_bits = 0;
    std::uint64_t output_len = 0;
    bool budget_exceeded = false;

    bool operator==(const RunTrace&) const = default;
};

struct Budgets {
    std::uint64_t steps = 1u << 20;
    std::uint64_t coins = 64;
};

// A finite prefix of the infinite fair-coin string.  Value-passed, never
// shared between runs.
struct CoinTape {
    std::string bits;  // '0'/'1'
    std::size_t cursor = 0;

    std::size_t remaining() const { return bits.size() - cursor; }
};

// ---------------------------------------------------------------------------
// Dyadic distributions

// Finite distribution whose probabilities are all c/2^k and sum to exactly 1.
// A draw consumes bit_depth() coin bits; the bits, read MSB-first as an
// integer, select the outcome through the cumulative scaled counts.
template <class T>
struct DyadicDist {
    std::vector<std::pair<T, Rat>> outcomes;

    static DyadicDist point(T v) { return DyadicDist{{{std::move(v), Rat(1)}}}; }

    void validate() const {
        if (outcomes.empty()) throw DefinitionError("empty distribution");
        Rat total = 0;
        for (const auto& [v, p] : outcomes) {
            if (p < 0) throw DefinitionError("negative probability " + rat_str(p));
            if (!is_dyadic(p)) throw DefinitionError("non-dyadic probability " + rat_str(p));
            total += p;
        }
        if (total != 1) throw DefinitionError("probabilities sum to " + rat_str(total) + ", not 1");
    }

    bool is_point_mass() const {
        int live = 0;
        for (const auto& [v, p] : outcomes) live += (p > 0);
        return live == 1;
    }

    // Coin bits one draw consumes: log2 of the common denominator over the
    // outcomes with positive probability.
    unsigned bit_depth() const {
        if (is_point_mass()) return 0;
        unsigned k = 0;
        for (const auto& [v, p] : outcomes)
            if (p > 0) k = std::max(k, dyadic_bits(p));
        return k;
    }

    // Selects the outcome for a bit-block value in [0, 2^bit_depth()).
    const T& pick(std::uint64_t index) const {
        unsigned k = bit_depth();
        std::uint64_t scale = std::uint64_t(1) << k;
        std::uint64_t cum = 0;
        for (const auto& [v, p] : outcomes) {
            if (p == 0) continue;
            // p = c/2^j with j <= k; count at depth k is c * 2^(k-j)
            std::uint64_t count =
                (numerator(p) * (scale / denominator(p))).template convert_to<std::uint64_t>();
            cum += count;
            if (index < cum) return v;
        }
        throw DomainError("draw index out of range");
    }
};

// ---------------------------------------------------------------------------
// Turing machine specs

enum class Move : char { L = 'L', R = 'R', S = 'S' };

constexpr char kBlank = '_';

struct TmEdge {
    std::uint32_t next_state = 0;
    char work_write = kBlank;
    std::optional<char> output_write;  // '0' or '1'; appends to the output tape
    Move input_move = Move::S;
    Move work_move = Move::S;
    Move output_move = Move::S;  // must be R exactly when output_write is set

    bool operator==(const TmEdge&) const = default;
};

// Three tapes: read-only input holding the type, a work tape, and a
// write-only output tape whose head moves right on write.
struct TMSpec {
    std::uint32_t state_count = 0;
    std::uint32_t start_state = 0;
    std::set<std::uint32_t> halt_states;
    // Total over (non-halt state, input symbol, work symbol); symbols are
    // '0', '1' or '_'.
    std::map<std::tuple<std::uint32_t, char, char>, DyadicDist<TmEdge>> transitions;
};

inline const char kTapeSymbols[] = {'0', '1', kBlank};

inline void validate_tm(const TMSpec& tm) {
    if (tm.state_count == 0) throw DefinitionError("tm: stateCount must be positive");
    if (tm.start_state >= tm.state_count) throw DefinitionError("tm: start state out of range");
    if (tm.halt_states.empty()) throw DefinitionError("tm: no halt states");
    for (auto h : tm.halt_states)
        if (h >= tm.state_count) throw DefinitionError("tm: halt state out of range");
    for (std::uint32_t s = 0; s < tm.state_count; ++s) {
        if (tm.halt_states.count(s)) continue;
        for (char in : kTapeSymbols)
            for (char wk : kTapeSymbols) {
                auto it = tm.transitions.find({s, in, wk});
                if (it == tm.transitions.end())
                    throw DefinitionError("tm: transition map not total at state " +
                                          std::to_string(s) + " symbols (" + in + "," + wk + ")");
                it->second.validate();
                for (const auto& [edge, p] : it->second.outcomes) {
                    if (edge.next_state >= tm.state_count)
                        throw DefinitionError("tm: edge target out of range");
                    bool writes = edge.output_write.has_value();
                    if (writes && edge.output_move != Move::R)
                        throw DefinitionError("tm: output head must move R on write");
                    if (!writes && edge.output_move != Move::S)
                        throw DefinitionError("tm: output head moves without write");
                }
            }
    }
}

// ---------------------------------------------------------------------------
// Declared-metric machines

struct DeclaredMetrics {
    std::uint64_t steps = 1;
    std::uint64_t states_used = 1;
    bool randomized = false;
};

// Hosts machines whose behavior and complexity are stipulated rather than
// interpreted.  Behavior and metrics are keyed by exact type; "*" serves as
// a fallback for any type.
struct DeclaredMachine {
    std::string id;
    std::map<std::string, DyadicDist<Action>> behavior;
    std::map<std::string, DeclaredMetrics> metrics;
};

inline void validate_declared(const DeclaredMachine& m) {
    if (m.behavior.empty()) throw DefinitionError("declared machine '" + m.id + "': empty behavior");
    for (const auto& [t, dist] : m.behavior) dist.validate();
}

// ---------------------------------------------------------------------------
// Finite transducers

struct TransducerStep {
    std::string move;
    std::string next_state;

    bool operator==(const TransducerStep&) const = default;
};

// Reactive machine for repeated interaction: emits first_move, then maps
// (state, observation) to a move and successor state.
struct Transducer {
    std::string id;
    std::vector<std::string> states;  // front() is the start state
    std::string first_move;
    std::vector<std::string> alphabet;
    std::map<std::pair<std::string, std::string>, DyadicDist<TransducerStep>> step;
};

inline void validate_transducer(const Transducer& t) {
    if (t.states.empty()) throw DefinitionError("transducer '" + t.id + "': no states");
    if (t.alphabet.empty()) throw DefinitionError("transducer '" + t.id + "': empty alphabet");
    for (const auto& s : t.states)
        for (const auto& obs : t.alphabet) {
            auto it = t.step.find({s, obs});
            if (it == t.step.end())
                throw DefinitionError("transducer '" + t.id + "': step map not total at (" + s +
                                      "," + obs + ")");
            it->second.validate();
            for (const auto& [out, p] : it->second.outcomes) {
                bool known = false;
                for (const auto& st : t.states) known |= (st == out.next_state);
                if (!known)
                    throw DefinitionError("transducer '" + t.id + "': unknown successor state " +
                                          out.next_state);
            }
        }
}

// Builds the 1-state reactive transducer with the given first move and
// observation -> move response map.
inline Transducer build_transducer(std::string id, std::string first_move,
                                   const std::map<std::string, std::string>& responses,
                                   const std::vector<std::string>& alphabet) {
    Transducer t;
    t.id = std::move(id);
    t.states = {"s"};
    t.first_move = std::move(first_move);
    t.alphabet = alphabet;
    for (const auto& obs : alphabet) {
        auto it = responses.find(obs);
        if (it == responses.end())
            throw DefinitionError("build_transducer: response map not total at '" + obs + "'");
        t.step[{"s", obs}] = DyadicDist<TransducerStep>::point({it->second, "s"});
    }
    return t;
}

// ---------------------------------------------------------------------------
// Interval samplers

// Fair-coin machine targeting a cumulative distribution 0 = s_0 <= ... <=
// s_N = 1 over N actions.  It reads coin bits r_1 r_2 ..., maintains the
// dyadic interval [x, x + 2^-n] of values the full binary decimal can still
// take, and outputs action k as soon as that interval fits inside cell k.
// Cells are (s_k, s_{k+1}], except that a cell whose left endpoint is 0 is
// closed there (this also lets degenerate targets resolve with zero bits).
struct IntervalSampler {
    std::vector<Rat> cumulative;        // N + 1 entries
    std::vector<std::string> actions;   // N entries
    std::uint64_t coin_budget = 64;     // bits before the machine gives up
    std::optional<std::string> fallback;  // emitted instead of BOT at its own budget
};

inline void validate_sampler(const IntervalSampler& s) {
    if (s.actions.empty()) throw DefinitionError("sampler: no actions");
    if (s.cumulative.size() != s.actions.size() + 1)
        throw DefinitionError("sampler: cumulative/action size mismatch");
    if (s.cumulative.front() != 0 || s.cumulative.back() != 1)
        throw DefinitionError("sampler: cumulative endpoints must be exactly 0 and 1");
    for (std::size_t i = 0; i + 1 < s.cumulative.size(); ++i)
        if (s.cumulative[i] > s.cumulative[i + 1])
            throw DefinitionError("sampler: cumulative not nondecreasing");
}

// Index of the cell [x, x+h] fits inside, or nullopt if undecided.
inline std::optional<std::size_t> sampler_cell(const IntervalSampler& s, const Rat& x,
                                               const Rat& h) {
    for (std::size_t k = 0; k + 1 < s.cumulative.size(); ++k) {
        const Rat& lo = s.cumulative[k];
        const Rat& hi = s.cumulative[k + 1];
        bool left_ok = (x > lo) || (lo == 0);
        if (left_ok && x + h <= hi) return k;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// The machine wrapper

struct Machine {
    std::string id;
    std::variant<TMSpec, DeclaredMachine, Transducer, IntervalSampler> body;
};

inline Machine make_machine(std::string id, TMSpec tm) { return {std::move(id), std::move(tm)}; }
inline Machine make_machine(DeclaredMachine m) {
    std::string id = m.id;
    return {std::move(id), std::move(m)};
}
inline Machine make_machine(Transducer t) {
    std::string id = t.id;
    return {std::move(id), std::move(t)};
}
inline Machine make_machine(std::string id, IntervalSampler s) {
    return {std::move(id), std::move(s)};
}

inline void validate_machine(const Machine& m) {
    if (m.id.empty()) throw DefinitionError("machine with empty id");
    std::visit(
        [](const auto& body) {
            using B = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<B, TMSpec>) validate_tm(body);
            if constexpr (std::is_same_v<B, DeclaredMachine>) validate_declared(body);
            if constexpr (std::is_same_v<B, Transducer>) validate_transducer(body);
            if constexpr (std::is_same_v<B, IntervalSampler>) validate_sampler(body);
        },
        m.body);
}

// ---------------------------------------------------------------------------
// Execution

// A run either halts with a trace (including budget-exhaustion BOT traces)
// or reports that the coin tape is too short: coins_needed is the total
// tape length the run requires to proceed.
struct RunOutcome {
    enum class Status { halted, need_coins };
    Status status = Status::halted;
    RunTrace trace;
    std::uint64_t coins_needed = 0;

    bool halted() const { return status == Status::halted; }

    static RunOutcome done(RunTrace t) { return {Status::halted, std::move(t), 0}; }
    static RunOutcome more(std::uint64_t needed) { return {Status::need_coins, {}, needed}; }
};

namespace detail {

// Shared coin-draw bookkeeping.  Serving a draw of k bits requires the whole
// block: a draw that would cross the coin budget is not served at all.
struct CoinMeter {
    const CoinTape* tape;
    std::uint64_t budget;
    std::uint64_t consumed = 0;

    // One of: got value (served), need more tape, or budget exhausted.
    enum class Res { ok, need, exhausted };
    Res draw(unsigned k, std::uint64_t* out) {
        if (k == 0) {
            *out = 0;
            return Res::ok;
        }
        if (consumed + k > budget) return Res::exhausted;
        if (tape->cursor + consumed + k > tape->bits.size()) return Res::need;
        std::uint64_t v = 0;
        for (unsigned i = 0; i < k; ++i) {
            char c = tape->bits[tape->cursor + consumed + i];
            v = (v << 1) | (c == '1' ? 1u : 0u);
        }
        consumed += k;
        *out = v;
        return Res::ok;
    }

    std::uint64_t tape_needed(unsigned k) const { return tape->cursor + consumed + k; }
};

}  // namespace detail

// Simulates a TMSpec until a halt state or a budget runs out.  On halt the
// output is the contents of the output tape; on budget exhaustion the output
// is BOT and budget_exceeded is set.
inline RunOutcome run_tm(const TMSpec& tm, const std::string& type, const CoinTape& coins,
                         const Budgets& budgets) {
    for (char c : type)
        if (c != '0' && c != '1') throw DomainError("tm type input must be over {0,1}");

    detail::CoinMeter meter{&coins, budgets.coins};
    std::uint32_t state = tm.start_state;
    std::uint64_t steps = 0;
    long long input_pos = 0, work_pos = 0;
    long long max_input_seen = -1;
    std::unordered_map<long long, char> work;
    std::string output;

    auto input_at = [&](long long p) -> char {
        max_input_seen = std::max(max_input_seen, p);
        return p >= 0 && p < (long long)type.size() ? type[p] : kBlank;
    };
    auto work_at = [&](long long p) -> char {
        auto it = work.find(p);
        return it == work.end() ? kBlank : it->second;
    };
    auto shift = [](long long& p, Move m) {
        if (m == Move::L) p = std::max(p - 1, 0LL);
        if (m == Move::R) ++p;
    };
    auto finish = [&](Action out, bool exceeded) {
        RunTrace t;
        t.output = std::move(out);
        t.steps = steps;
        t.coin_bits = meter.consumed;
        t.input_bits =
            std::min<std::uint64_t>(std::uint64_t(max_input_seen + 1), type.size());
        t.output_len = t.output.is_bot() ? 0 : t.output.str().size();
        t.budget_exceeded = exceeded;
        return RunOutcome::done(std::move(t));
    };

    while (!tm.halt_states.count(state)) {
        if (steps == budgets.steps) return finish(Action::bot(), true);
        char in = input_at(input_pos);
        char wk = work_at(work_pos);
        auto it = tm.transitions.find({state, in, wk});
        if (it == tm.transitions.end())
            throw DefinitionError("tm: missing transition at state " + std::to_string(state));
        const auto& dist = it->second;
        unsigned k = dist.bit_depth();
        std::uint64_t idx = 0;
        switch (meter.draw(k, &idx)) {
            case detail::CoinMeter::Res::need:
                return RunOutcome::more(meter.tape_needed(k));
            case detail::CoinMeter::Res::exhausted:
                return finish(Action::bot(), true);
            case detail::CoinMeter::Res::ok:
                break;
        }
        const TmEdge& e = dist.pick(idx);
        if (e.work_write == kBlank)
            work.erase(work_pos);
        else
            work[work_pos] = e.work_write;
        if (e.output_write) output.push_back(*e.output_write);
        shift(input_pos, e.input_move);
        shift(work_pos, e.work_move);
        state = e.next_state;
        ++steps;
    }
    return finish(Action::of(output), false);
}

// Samples a declared machine's behavior table.  Trace metrics come from the
// declared metrics except coin_bits, which counts the bits actually drawn.
inline RunOutcome run_declared(const DeclaredMachine& m, const std::string& type,
                               const CoinTape& coins, const Budgets& budgets) {
    auto pick_entry = [&](const auto& table) -> const auto* {
        auto it = table.find(type);
        if (it == table.end()) it = table.find("*");
        return it == table.end() ? nullptr : &it->second;
    };
    const auto* dist = pick_entry(m.behavior);
    if (!dist)
        throw DomainError("declared machine '" + m.id + "': type '" + type + "' outside domain");
    static const DeclaredMetrics default_metrics{};
    const auto* met = pick_entry(m.metrics);
    if (!met) met = &default_metrics;

    detail::CoinMeter meter{&coins, budgets.coins};
    unsigned k = dist->bit_depth();
    std::uint64_t idx = 0;
    RunTrace t;
    t.steps = met->steps;
    // Exact-keyed behavior conditions on the whole type; "*" reads none.
    t.input_bits = m.behavior.count(type) ? type.size() : 0;
    switch (meter.draw(k, &idx)) {
        case detail::CoinMeter::Res::need:
            return RunOutcome::more(meter.tape_needed(k));
        case detail::CoinMeter::Res::exhausted:
            t.output = Action::bot();
            t.budget_exceeded = true;
            t.coin_bits = meter.consumed;
            return RunOutcome::done(std::move(t));
        case detail::CoinMeter::Res::ok:
            break;
    }
    t.output = dist->pick(idx);
    t.coin_bits = meter.consumed;
    t.output_len = t.output.is_bot() ? 0 : t.output.str().size();
    return RunOutcome::done(std::move(t));
}

// A transducer run outside a mediated game just emits its first move.
inline RunOutcome run_transducer_oneshot(const Transducer& t) {
    RunTrace tr;
    tr.output = Action::of(t.first_move);
    tr.steps = 1;
    tr.output_len = t.first_move.size();
    return RunOutcome::done(std::move(tr));
}

inline RunOutcome run_sampler(const IntervalSampler& s, const CoinTape& coins,
                              const Budgets& budgets) {
    detail::CoinMeter meter{&coins, std::min(budgets.coins, s.coin_budget)};
    Rat x = 0, h = 1;
    auto finish = [&](Action out, bool exceeded) {
        RunTrace t;
        t.output = std::move(out);
        t.steps = meter.consumed;
        t.coin_bits = meter.consumed;
        t.output_len = t.output.is_bot() ? 0 : t.output.str().size();
        t.budget_exceeded = exceeded;
        return RunOutcome::done(std::move(t));
    };
    while (true) {
        if (auto cell = sampler_cell(s, x, h)) return finish(Action::of(s.actions[*cell]), false);
        std::uint64_t bit = 0;
        switch (meter.draw(1, &bit)) {
            case detail::CoinMeter::Res::need:
                return RunOutcome::more(meter.tape_needed(1));
            case detail::CoinMeter::Res::exhausted:
                if (s.fallback && meter.consumed >= s.coin_budget)
                    return finish(Action::of(*s.fallback), false);
                return finish(Action::bot(), true);
            case detail::CoinMeter::Res::ok:
                break;
        }
        h /= 2;
        if (bit) x += h;
    }
}

inline RunOutcome run_machine(const Machine& m, const std::string& type, const CoinTape& coins,
                              const Budgets& budgets) {
    if (budgets.steps == 0 || budgets.coins == 0)
        throw DomainError("budgets must be positive");
    return std::visit(
        [&](const auto& body) -> RunOutcome {
            using B = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<B, TMSpec>) return run_tm(body, type, coins, budgets);
            if constexpr (std::is_same_v<B, DeclaredMachine>)
                return run_declared(body, type, coins, budgets);
            if constexpr (std::is_same_v<B, Transducer>) return run_transducer_oneshot(body);
            if constexpr (std::is_same_v<B, IntervalSampler>)
                return run_sampler(body, coins, budgets);
        },
        m.body);
}

// ---------------------------------------------------------------------------
// Static metrics

struct StaticMetrics {
    std::uint64_t state_count = 1;
    std::uint64_t description_size = 0;
};

inline StaticMetrics machine_metrics(const Machine& m) {
    return std::visit(
        [](const auto& body) -> StaticMetrics {
            using B = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<B, TMSpec>)
                return {body.state_count, body.transitions.size()};
            if constexpr (std::is_same_v<B, DeclaredMachine>) {
                std::uint64_t states = 1;
                for (const auto& [t, met] : body.metrics)
                    states = std::max(states, met.states_used);
                return {states, body.behavior.size()};
            }
            if constexpr (std::is_same_v<B, Transducer>)
                return {body.states.size(), body.step.size()};
            if constexpr (std::is_same_v<B, IntervalSampler>)
                return {1, body.actions.size()};
        },
        m.body);
}

// Per-run state usage: declared machines may stipulate it per type.
inline std::uint64_t states_used_for(const Machine& m, const std::string& type) {
    if (const auto* d = std::get_if<DeclaredMachine>(&m.body)) {
        auto it = d->metrics.find(type);
        if (it == d->metrics.end()) it = d->metrics.find("*");
        if (it != d->metrics.end()) return it->second.states_used;
        return 1;
    }
    return machine_metrics(m).state_count;
}

// View assembly from a completed run: the type prefix actually read and the
// coin prefix actually consumed.
inline View make_view(const std::string& type, const CoinTape& coins, const RunTrace& trace,
                      std::vector<std::string> messages = {}) {
    View v;
    v.type_prefix = type.substr(0, trace.input_bits);
    v.coin_prefix = coins.bits.substr(coins.cursor, trace.coin_bits);
    v.message_history = std::move(messages);
    return v;
}

// ---------------------------------------------------------------------------
// Convenience constructors

inline Machine const_machine(std::string id, std::string action, std::uint64_t steps = 1,
                             std::uint64_t states_used = 1) {
    DeclaredMachine d;
    d.id = std::move(id);
    d.behavior["*"] = DyadicDist<Action>::point(Action::of(std::move(action)));
    d.metrics["*"] = DeclaredMetrics{steps, states_used, false};
    return make_machine(std::move(d));
}

// Declared machine playing a fixed dyadic mixture over actions, for every type.
inline Machine mixer_machine(std::string id, std::vector<std::pair<std::string, Rat>> dist,
                             std::uint64_t steps = 1) {
    DeclaredMachine d;
    d.id = std::move(id);
    DyadicDist<Action> dd;
    for (auto& [a, p] : dist) dd.outcomes.push_back({Action::of(a), p});
    dd.validate();
    d.behavior["*"] = std::move(dd);
    d.metrics["*"] = DeclaredMetrics{steps, 1, true};
    return make_machine(std::move(d));
}

}  // namespace bmg
