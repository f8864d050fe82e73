// Machine games with a mediator.
//
// Play proceeds in synchronous stages of three phases: (1) every player
// sends a message to the mediator (the empty message λ is legal), (2) the
// mediator replies to every player, (3) every player may perform an action.
// A reply sent in stage k is readable from stage k+1 on.  Players see only
// their own type, their own coins, and the replies they actually read;
// communication is metered in payload bits.
//
// Randomization is served as dyadic draws.  The exact evaluator branches on
// each draw outcome with its exact probability (a draw of depth k meters k
// coin bits on every branch), which is equivalent to branching per coin bit
// and keeps transcript trees small.
#pragma once

#include "bmg/equilibrium.hpp"
#include "bmg/eval.hpp"
#include "bmg/game.hpp"

#include <json.hpp>

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bmg {

struct ProtocolViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Draw plumbing

namespace detail {

inline unsigned dyadic_depth(const std::vector<Rat>& probs) {
    unsigned k = 0;
    for (const auto& p : probs)
        if (p > 0) k = std::max(k, dyadic_bits(p));
    bool point = false;
    int live = 0;
    for (const auto& p : probs) live += (p > 0);
    point = (live == 1);
    return point ? 0 : k;
}

inline std::size_t index_for_bits(const std::vector<Rat>& probs, unsigned depth,
                                  std::uint64_t bits) {
    std::uint64_t scale = std::uint64_t(1) << depth;
    std::uint64_t cum = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] == 0) continue;
        cum += (numerator(probs[i]) * (scale / denominator(probs[i]))).convert_to<std::uint64_t>();
        if (bits < cum) return i;
    }
    throw DomainError("draw bits out of range");
}

// Raised when the predetermined outcomes of the forking evaluator run dry.
struct NeedDraw {
    int entity;  // players 0..m-1, mediator m
    std::vector<Rat> probs;
};

struct PhaseBudgetExceeded {};

// Serves draw outcomes to one execution path.
struct DrawService {
    virtual ~DrawService() = default;
    virtual std::size_t serve(int entity, const std::vector<Rat>& probs, unsigned depth) = 0;
};

// Draws resolved from per-entity fair-coin tapes, exactly as in one-shot
// machine runs: a depth-k draw reads k bits MSB-first.
struct BitTapeService : DrawService {
    std::vector<CoinTape> tapes;  // players then mediator

    std::size_t serve(int entity, const std::vector<Rat>& probs, unsigned depth) override {
        CoinTape& t = tapes.at(entity);
        if (t.cursor + depth > t.bits.size())
            throw DomainError("coin tape exhausted for entity " + std::to_string(entity));
        std::uint64_t v = 0;
        for (unsigned i = 0; i < depth; ++i) v = (v << 1) | (t.bits[t.cursor + i] == '1' ? 1u : 0u);
        t.cursor += depth;
        return index_for_bits(probs, depth, v);
    }
};

// Draws replayed from predetermined outcome lists; running dry aborts the
// path so the evaluator can fork on every outcome.
struct ForkTapeService : DrawService {
    std::vector<std::vector<std::size_t>>* outcomes;
    std::vector<std::size_t> cursors;

    explicit ForkTapeService(std::vector<std::vector<std::size_t>>* o)
        : outcomes(o), cursors(o->size(), 0) {}

    std::size_t serve(int entity, const std::vector<Rat>& probs, unsigned) override {
        auto& list = (*outcomes)[entity];
        if (cursors[entity] == list.size()) throw NeedDraw{entity, probs};
        return list[cursors[entity]++];
    }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Interactive machines and mediators

// What a player's program may do in one phase invocation.  Phase 1 must
// produce a message only; phase 3 an action only.
struct StageOutput {
    std::string message;                 // phase 1; "" is the empty message λ
    std::optional<std::string> action;   // phase 3
};

class StageCtx {
  public:
    int stage = 1;  // 1-based
    int phase = 1;  // 1 or 3
    std::string state;

    const std::string& type() {
        *type_read_ = true;
        return *type_;
    }
    int stage_count() const { return stage_total_; }

    // Replies are delivered at the start of the next stage: only stages
    // strictly before the current one are readable.
    const std::string& reply(int k) {
        if (k < 1 || k >= stage)
            throw ProtocolViolation("stage " + std::to_string(stage) + " phase " +
                                    std::to_string(phase) + ": reply of stage " +
                                    std::to_string(k) + " is not readable");
        (*reply_read_)[k - 1] = true;
        return (*replies_)[k - 1];
    }
    int replies_available() const { return stage - 1; }

    std::size_t draw_index(const std::vector<Rat>& probs) {
        unsigned depth = detail::dyadic_depth(probs);
        if (*phase_coins_ + depth > coin_budget_) throw detail::PhaseBudgetExceeded{};
        std::size_t idx = service_->serve(entity_, probs, depth);
        *phase_coins_ += depth;
        return idx;
    }

    template <class T>
    const T& draw(const DyadicDist<T>& dist) {
        std::vector<Rat> probs;
        probs.reserve(dist.outcomes.size());
        for (const auto& [v, p] : dist.outcomes) probs.push_back(p);
        return dist.outcomes[draw_index(probs)].first;
    }

    // wiring, set by the executor
    const std::string* type_ = nullptr;
    bool* type_read_ = nullptr;
    const std::vector<std::string>* replies_ = nullptr;  // this player's, per past stage
    std::vector<bool>* reply_read_ = nullptr;
    detail::DrawService* service_ = nullptr;
    int entity_ = 0;
    int stage_total_ = 1;
    std::uint64_t* phase_coins_ = nullptr;
    std::uint64_t coin_budget_ = 0;
};

// A player machine for mediated games: a pure program over its stage
// context plus declared static metrics.  Programs must be deterministic
// functions of (state, context, draws).
struct StrategyMachine {
    std::string id;
    std::uint64_t states_used = 1;
    std::uint64_t phase_steps = 1;  // declared step cost per phase invocation
    std::string initial_state;
    std::function<StageOutput(StageCtx&)> program;
};

inline const std::string& machine_id(const StrategyMachine& m) { return m.id; }

class MediatorCtx {
  public:
    int stage = 1;
    std::string state;
    std::vector<std::string> messages;  // this stage's messages, per player

    std::size_t draw_index(const std::vector<Rat>& probs) {
        unsigned depth = detail::dyadic_depth(probs);
        if (*phase_coins_ + depth > coin_budget_) throw detail::PhaseBudgetExceeded{};
        std::size_t idx = service_->serve(entity_, probs, depth);
        *phase_coins_ += depth;
        return idx;
    }

    detail::DrawService* service_ = nullptr;
    int entity_ = 0;
    std::uint64_t* phase_coins_ = nullptr;
    std::uint64_t coin_budget_ = 0;
};

// The mediator: an interactive machine that reads the current stage's
// messages and replies to every player within the stage.
struct MediatorSpec {
    std::string id = "mediator";
    std::string initial_state;
    std::function<std::vector<std::string>(MediatorCtx&)> program;
};

// Replies to each player with the other player's message (2 players).
inline MediatorSpec relay_mediator() {
    MediatorSpec m;
    m.id = "relay";
    m.program = [](MediatorCtx& ctx) {
        return std::vector<std::string>{ctx.messages.at(1), ctx.messages.at(0)};
    };
    return m;
}

// Replies to each player with that player's own message.
inline MediatorSpec echo_mediator(int players) {
    MediatorSpec m;
    m.id = "echo";
    m.program = [players](MediatorCtx& ctx) {
        std::vector<std::string> out;
        for (int i = 0; i < players; ++i) out.push_back(ctx.messages.at(i));
        return out;
    };
    return m;
}

// ---------------------------------------------------------------------------
// Transcripts

struct StageRecord {
    std::vector<std::string> messages;
    std::vector<std::string> replies;
    std::vector<std::optional<Action>> actions;  // nullopt = did nothing
};

struct PlayerComm {
    std::uint64_t bits_sent = 0;
    std::uint64_t bits_read = 0;
};

struct Transcript {
    std::vector<StageRecord> stages;
    std::vector<RunTrace> player_traces;  // aggregates; output = final action
    std::vector<PlayerComm> comm;
    std::uint64_t mediator_coin_bits = 0;
    std::vector<Action> final_actions;
};

// Message payload bits the player sent, and reply bits it actually read.
inline std::pair<std::uint64_t, std::uint64_t> comm_metrics(const Transcript& tr, int player) {
    return {tr.comm.at(player).bits_sent, tr.comm.at(player).bits_read};
}

struct MediatedExecOptions {
    std::vector<int> player_order;  // invocation order within a phase; empty = index order
};

namespace detail {

inline Transcript run_mediated(const std::vector<StrategyMachine>& profile,
                               const MediatorSpec& mediator, const TypeProfile& types,
                               DrawService& service, int stages, const Budgets& budgets,
                               const MediatedExecOptions& options) {
    int m = (int)profile.size();
    if ((int)types.size() < m) throw DomainError("type profile too short for the player count");
    std::vector<int> order(m);
    for (int i = 0; i < m; ++i) order[i] = i;
    if (!options.player_order.empty()) {
        if ((int)options.player_order.size() != m)
            throw DomainError("player_order must list every player once");
        order = options.player_order;
    }

    Transcript tr;
    tr.player_traces.assign(m, RunTrace{});
    tr.comm.assign(m, PlayerComm{});
    std::vector<std::string> states(m);
    std::vector<bool> type_read(m, false);
    std::vector<std::vector<std::string>> replies_per_player(m);
    std::vector<std::vector<bool>> reply_read(m);
    for (int i = 0; i < m; ++i) states[i] = profile[i].initial_state;
    std::string mediator_state = mediator.initial_state;

    auto invoke_player = [&](int i, int stage, int phase) -> std::optional<StageOutput> {
        if (profile[i].phase_steps > budgets.steps) return std::nullopt;  // forfeits the phase
        StageCtx ctx;
        ctx.stage = stage;
        ctx.phase = phase;
        ctx.state = states[i];
        ctx.type_ = &types[i];
        bool read_flag = type_read[i];
        ctx.type_read_ = &read_flag;
        ctx.replies_ = &replies_per_player[i];
        std::vector<bool> read_set = reply_read[i];
        ctx.reply_read_ = &read_set;
        ctx.service_ = &service;
        ctx.entity_ = i;
        ctx.stage_total_ = stages;
        std::uint64_t phase_coins = 0;
        ctx.phase_coins_ = &phase_coins;
        ctx.coin_budget_ = budgets.coins;
        try {
            StageOutput out = profile[i].program ? profile[i].program(ctx) : StageOutput{};
            // commit
            states[i] = ctx.state;
            type_read[i] = read_flag;
            std::uint64_t newly_read = 0;
            for (std::size_t k = 0; k < read_set.size(); ++k)
                if (read_set[k] && !reply_read[i][k]) newly_read += replies_per_player[i][k].size();
            reply_read[i] = read_set;
            tr.comm[i].bits_read += newly_read;
            tr.player_traces[i].steps += profile[i].phase_steps;
            tr.player_traces[i].coin_bits += phase_coins;
            return out;
        } catch (const PhaseBudgetExceeded&) {
            return std::nullopt;  // draws of an abandoned phase are not metered
        }
    };

    for (int stage = 1; stage <= stages; ++stage) {
        StageRecord rec;
        rec.messages.assign(m, "");
        rec.replies.assign(m, "");
        rec.actions.assign(m, std::nullopt);

        // phase 1: messages
        for (int i : order) {
            auto out = invoke_player(i, stage, 1);
            if (out) {
                if (out->action)
                    throw ProtocolViolation("stage " + std::to_string(stage) +
                                            " phase 1: machine '" + profile[i].id +
                                            "' emitted an action during the message phase");
                rec.messages[i] = out->message;
            }
            tr.comm[i].bits_sent += rec.messages[i].size();
        }

        // phase 2: mediator replies
        {
            MediatorCtx ctx;
            ctx.stage = stage;
            ctx.state = mediator_state;
            ctx.messages = rec.messages;
            ctx.service_ = &service;
            ctx.entity_ = m;
            std::uint64_t phase_coins = 0;
            ctx.phase_coins_ = &phase_coins;
            ctx.coin_budget_ = budgets.coins;
            try {
                std::vector<std::string> replies =
                    mediator.program ? mediator.program(ctx) : std::vector<std::string>();
                replies.resize(m);
                mediator_state = ctx.state;
                tr.mediator_coin_bits += phase_coins;
                rec.replies = std::move(replies);
            } catch (const PhaseBudgetExceeded&) {
                // mediator forfeits the stage: every reply is λ
            }
        }

        // phase 3: actions
        for (int i : order) {
            auto out = invoke_player(i, stage, 3);
            if (!out) {
                rec.actions[i] = Action::bot();  // budget forfeit
                tr.player_traces[i].budget_exceeded = true;
                continue;
            }
            if (!out->message.empty())
                throw ProtocolViolation("stage " + std::to_string(stage) +
                                        " phase 3: machine '" + profile[i].id +
                                        "' emitted a message during the action phase");
            if (out->action) rec.actions[i] = Action::of(*out->action);
        }

        for (int i = 0; i < m; ++i) replies_per_player[i].push_back(rec.replies[i]);
        for (int i = 0; i < m; ++i) reply_read[i].push_back(false);
        tr.stages.push_back(std::move(rec));
    }

    tr.final_actions.assign(m, Action::of(""));
    for (int i = 0; i < m; ++i) {
        for (const auto& st : tr.stages)
            if (st.actions[i]) tr.final_actions[i] = *st.actions[i];
        tr.player_traces[i].output = tr.final_actions[i];
        tr.player_traces[i].output_len =
            tr.final_actions[i].is_bot() ? 0 : tr.final_actions[i].str().size();
        tr.player_traces[i].input_bits = type_read[i] ? types[i].size() : 0;
    }
    return tr;
}

}  // namespace detail

// Runs one transcript with explicit fair-coin tapes (players first, then
// the mediator).  Tapes must cover every draw the path makes.
inline Transcript execute_mediated(const std::vector<StrategyMachine>& profile,
                                   const MediatorSpec& mediator, const TypeProfile& types,
                                   std::vector<CoinTape> coins, int stages, const Budgets& budgets,
                                   const MediatedExecOptions& options = {}) {
    if (coins.size() != profile.size() + 1)
        throw DomainError("need one coin tape per player plus one for the mediator");
    detail::BitTapeService service;
    service.tapes = std::move(coins);
    return detail::run_mediated(profile, mediator, types, service, stages, budgets, options);
}

// ---------------------------------------------------------------------------
// Mediated game definitions and exact evaluation

// Utility over a finished transcript: an expression over (t, a, c) variables,
// or a native function of the full transcript.
using NativeUtility =
    std::function<Rat(const TypeProfile&, const Transcript&, const std::vector<Rat>&)>;
using MediatedUtility = std::variant<Expr, NativeUtility>;

struct MediatedGameDef {
    int player_count = 2;
    std::vector<TypeProfile> type_profiles;
    std::vector<Rat> prior;
    int stages = 1;
    MediatorSpec mediator;
    std::vector<Expr> complexity;         // per player, over aggregate run metrics
    std::vector<MediatedUtility> utility; // per player
    Budgets budgets;                      // per phase invocation
};

inline void validate_mediated_game(const MediatedGameDef& g) {
    if (g.player_count < 1) throw DefinitionError("mediated game: playerCount must be >= 1");
    if (g.stages < 1) throw DefinitionError("mediated game: stage count must be >= 1");
    if (g.type_profiles.empty()) throw DefinitionError("mediated game: no type profiles");
    if (g.prior.size() != g.type_profiles.size())
        throw DefinitionError("mediated game: prior/type profile size mismatch");
    Rat total = 0;
    for (const auto& p : g.prior) total += p;
    if (total != 1)
        throw DefinitionError("mediated game: prior sums to " + rat_str(total) + ", not 1");
    if ((int)g.complexity.size() != g.player_count ||
        (int)g.utility.size() != g.player_count)
        throw DefinitionError("mediated game: need per-player complexity and utility");
}

namespace detail {

inline Rat mediated_utility_at(const MediatedGameDef& g, int player, const TypeProfile& tp,
                               const Transcript& tr, const std::vector<Rat>& comps) {
    const MediatedUtility& u = g.utility[player];
    if (const auto* fn = std::get_if<NativeUtility>(&u)) return (*fn)(tp, tr, comps);
    Env env = utility_env(tp, tr.final_actions, comps);
    return eval_expr_rat(std::get<Expr>(u), env);
}

inline Env mediated_metric_env(const StrategyMachine& m, const Transcript& tr, int player) {
    const RunTrace& t = tr.player_traces[player];
    Env env;
    env.set("steps", Rat(t.steps))
        .set("coinBits", Rat(t.coin_bits))
        .set("inputBits", Rat(t.input_bits))
        .set("outputLen", Rat(t.output_len))
        .set("stateCount", Rat(m.states_used))
        .set("bitsSent", Rat(tr.comm[player].bits_sent))
        .set("bitsRead", Rat(tr.comm[player].bits_read));
    return env;
}

}  // namespace detail

// Exact expected utilities: type profiles weighted by the prior, and every
// randomized draw (players' and the mediator's) branched with its exact
// dyadic probability.
inline std::vector<Rat> expected_utility_mediated(const MediatedGameDef& g,
                                                  const std::vector<StrategyMachine>& profile,
                                                  EvalStats* stats = nullptr) {
    validate_mediated_game(g);
    if ((int)profile.size() != g.player_count)
        throw DomainError("profile size does not match player count");
    int m = g.player_count;
    std::vector<Rat> acc(m, Rat(0));
    if (stats) *stats = EvalStats{};

    for (std::size_t j = 0; j < g.type_profiles.size(); ++j) {
        if (g.prior[j] == 0) continue;
        const TypeProfile& tp = g.type_profiles[j];
        detail::rethrow_naming_branch(j, tp, [&] {
            std::vector<std::vector<std::size_t>> outcomes(m + 1);
            std::function<void(const Rat&)> walk = [&](const Rat& weight) {
                detail::ForkTapeService service(&outcomes);
                Transcript tr;
                try {
                    tr = detail::run_mediated(profile, g.mediator, tp, service, g.stages,
                                              g.budgets, {});
                } catch (const detail::NeedDraw& nd) {
                    for (std::size_t idx = 0; idx < nd.probs.size(); ++idx) {
                        if (nd.probs[idx] == 0) continue;
                        outcomes[nd.entity].push_back(idx);
                        walk(weight * nd.probs[idx]);
                        outcomes[nd.entity].pop_back();
                    }
                    return;
                }
                std::vector<Rat> comps(m);
                for (int i = 0; i < m; ++i)
                    comps[i] = eval_complexity(g.complexity[i],
                                               detail::mediated_metric_env(profile[i], tr, i));
                for (int i = 0; i < m; ++i)
                    acc[i] += weight * detail::mediated_utility_at(g, i, tp, tr, comps);
                if (stats) {
                    stats->leaf_combos += 1;
                    stats->total_mass += weight;
                }
            };
            walk(g.prior[j]);
        });
    }
    return acc;
}

// Customization point used by the equilibrium layer.
inline std::vector<Rat> exact_utilities(const MediatedGameDef& g,
                                        const std::vector<StrategyMachine>& profile) {
    return expected_utility_mediated(g, profile);
}

// ---------------------------------------------------------------------------
// Transducer adapter

// Plays a transducer over the mediated relay protocol: the move is the
// stage message, the previous reply is the observation.
inline StrategyMachine transducer_strategy(const Transducer& t) {
    validate_transducer(t);
    StrategyMachine m;
    m.id = t.id;
    m.states_used = t.states.size();
    m.initial_state = t.states.front();
    Transducer spec = t;
    m.program = [spec](StageCtx& ctx) -> StageOutput {
        if (ctx.phase != 1) return {};
        if (ctx.stage == 1) return {spec.first_move, std::nullopt};
        std::string obs = ctx.reply(ctx.stage - 1);
        auto it = spec.step.find({ctx.state, obs});
        if (it == spec.step.end())
            throw DomainError("transducer '" + spec.id + "': no step for observation '" + obs +
                              "'");
        const TransducerStep& step = ctx.draw(it->second);
        ctx.state = step.next_state;
        return {step.move, std::nullopt};
    };
    return m;
}

// ---------------------------------------------------------------------------
// Repeated-game adapter

using StagePayoffTable = std::map<std::pair<std::string, std::string>, std::pair<Rat, Rat>>;

// The 2-player repeated game: each stage both players message their moves,
// the mediator relays them, and the utility is the discounted payoff stream
// sum_{m=1..N} delta^m r_m minus the complexity charge.
inline MediatedGameDef make_repeated_game(const StagePayoffTable& payoffs, int rounds,
                                          const Rat& delta, std::vector<Expr> complexity,
                                          Budgets budgets = Budgets{64, 64}) {
    if (rounds < 1) throw DefinitionError("repeated game: need at least one round");
    if (delta <= 0 || delta > 1) throw DefinitionError("repeated game: delta must be in (0, 1]");
    if (payoffs.empty()) throw DefinitionError("repeated game: empty payoff table");

    MediatedGameDef g;
    g.player_count = 2;
    g.type_profiles = {{"", "", ""}};
    g.prior = {Rat(1)};
    g.stages = rounds;
    g.mediator = relay_mediator();
    g.complexity = std::move(complexity);
    g.budgets = budgets;

    // discount weights delta^m, and each player's worst stage payoff for
    // malformed moves (λ from a forfeited phase)
    std::vector<Rat> discount(rounds + 1, Rat(1));
    for (int r = 1; r <= rounds; ++r) discount[r] = discount[r - 1] * delta;
    Rat worst1 = payoffs.begin()->second.first, worst2 = payoffs.begin()->second.second;
    for (const auto& [moves, pay] : payoffs) {
        worst1 = std::min(worst1, pay.first);
        worst2 = std::min(worst2, pay.second);
    }

    StagePayoffTable table = payoffs;
    for (int player = 0; player < 2; ++player) {
        NativeUtility u = [table, discount, rounds, player, worst1, worst2](
                              const TypeProfile&, const Transcript& tr,
                              const std::vector<Rat>& comps) {
            Rat total = 0;
            for (int r = 1; r <= rounds; ++r) {
                const auto& rec = tr.stages[r - 1];
                auto it = table.find({rec.messages[0], rec.messages[1]});
                Rat pay;
                if (it == table.end())
                    pay = player == 0 ? worst1 : worst2;
                else
                    pay = player == 0 ? it->second.first : it->second.second;
                total += discount[r] * pay;
            }
            return total - comps[player];
        };
        g.utility.push_back(std::move(u));
    }
    return g;
}

inline StagePayoffTable prisoners_dilemma_payoffs() {
    return {
        {{"C", "C"}, {Rat(3), Rat(3)}},
        {{"C", "D"}, {Rat(-5), Rat(5)}},
        {{"D", "C"}, {Rat(5), Rat(-5)}},
        {{"D", "D"}, {Rat(-3), Rat(-3)}},
    };
}

// ---------------------------------------------------------------------------
// Transcript serialization (documented in the README)

inline nlohmann::json transcript_to_json(const Transcript& tr) {
    nlohmann::json j;
    auto action_json = [](const std::optional<Action>& a) -> nlohmann::json {
        if (!a) return nullptr;
        if (a->is_bot()) return nlohmann::json{{"bot", true}};
        return a->str();
    };
    j["stages"] = nlohmann::json::array();
    for (const auto& st : tr.stages) {
        nlohmann::json s;
        s["messages"] = st.messages;
        s["replies"] = st.replies;
        s["actions"] = nlohmann::json::array();
        for (const auto& a : st.actions) s["actions"].push_back(action_json(a));
        j["stages"].push_back(std::move(s));
    }
    j["finalActions"] = nlohmann::json::array();
    for (const auto& a : tr.final_actions)
        j["finalActions"].push_back(action_json(std::optional<Action>(a)));
    j["players"] = nlohmann::json::array();
    for (std::size_t i = 0; i < tr.player_traces.size(); ++i) {
        const auto& t = tr.player_traces[i];
        j["players"].push_back({{"steps", t.steps},
                                {"coinBits", t.coin_bits},
                                {"inputBits", t.input_bits},
                                {"bitsSent", tr.comm[i].bits_sent},
                                {"bitsRead", tr.comm[i].bits_read},
                                {"budgetExceeded", t.budget_exceeded}});
    }
    j["mediator"] = {{"coinBits", tr.mediator_coin_bits}};
    return j;
}

}  // namespace bmg
