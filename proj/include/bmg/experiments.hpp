// Six runnable scenarios, each emitting a Report with exact tables,
// certificates over declared candidate classes, and recomputed boolean
// findings: roshambo, primality, frpd, first-impressions, tennis-prg and
// revelation.
#pragma once

#include "bmg/mediated.hpp"
#include "bmg/report.hpp"
#include "bmg/sampler.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace bmg {

// ---------------------------------------------------------------------------
// Shared builders

// Rock-paper-scissors with stipulated costs: deterministic machines pay
// det_cost, machines that consume coins pay rand_cost.
inline GameDef build_roshambo_game(const Rat& det_cost = 1, const Rat& rand_cost = 2) {
    GameDef g;
    g.player_count = 2;
    g.type_profiles = {{"", "", ""}};
    g.prior = {Rat(1)};
    std::string cost =
        "if coinBits > 0 then " + rat_str(rand_cost) + " else " + rat_str(det_cost);
    g.complexity = {parse_expression(cost), parse_expression(cost)};
    g.utility = {
        parse_expression("(if isBot(a1) then -1 else if isBot(a2) then 1 else "
                         "if a1 == a2 then 0 else if a2 == rot(a1) then -1 else 1) - c1",
                         2),
        parse_expression("(if isBot(a2) then -1 else if isBot(a1) then 1 else "
                         "if a1 == a2 then 0 else if a1 == rot(a2) then -1 else 1) - c2",
                         2),
    };
    g.budgets = Budgets{1000, 64};
    return g;
}

// const-0/1/2 plus every dyadic mixer over {0,1,2} with denominator dividing
// `bound` (a power of two), point masses excluded.
inline CandidateSet<Machine> roshambo_candidate_set(unsigned bound) {
    if (bound < 2 || !is_power_of_two(BigInt(bound)))
        throw DomainError("mixer denominator bound must be a power of two >= 2");
    CandidateSet<Machine> set;
    set.provenance = "const-0/1/2 and dyadic mixers with denominators <= " + std::to_string(bound);
    for (int a = 0; a < 3; ++a)
        set.machines.push_back(const_machine("const-" + std::to_string(a), std::to_string(a)));
    for (unsigned c0 = 0; c0 <= bound; ++c0)
        for (unsigned c1 = 0; c0 + c1 <= bound; ++c1) {
            unsigned c2 = bound - c0 - c1;
            if (c0 == bound || c1 == bound || c2 == bound) continue;
            std::string id = "mix:" + std::to_string(c0) + ":" + std::to_string(c1) + ":" +
                             std::to_string(c2);
            set.machines.push_back(mixer_machine(
                id, {{"0", Rat(c0, bound)}, {"1", Rat(c1, bound)}, {"2", Rat(c2, bound)}}));
        }
    return set;
}

inline bool is_prime_u64(std::uint64_t x) {
    if (x < 2) return false;
    for (std::uint64_t d = 2; d * d <= x; ++d)
        if (x % d == 0) return false;
    return true;
}

// Guess-if-the-type-is-prime over the odd bitLength-bit numbers in
// (2^bitLength, 2^(bitLength+1)); nature's type carries the answer bit.
inline GameDef build_primality_game(int bit_length, int step_threshold = 2,
                                    const Rat& wrong_penalty = Rat(-1000)) {
    if (bit_length < 2 || bit_length > 12)
        throw DomainError("bitLength must be in [2, 12] to keep the type space enumerable");
    GameDef g;
    g.player_count = 1;
    std::uint64_t base = std::uint64_t(1) << bit_length;
    std::uint64_t count = base / 2;
    for (std::uint64_t v = 1; v < base; v += 2) {
        std::string t;
        for (int b = bit_length - 1; b >= 0; --b) t.push_back((v >> b) & 1 ? '1' : '0');
        g.type_profiles.push_back({t, is_prime_u64(base + v) ? "1" : "0"});
        g.prior.push_back(Rat(1, count));
    }
    g.complexity = {
        parse_expression("if steps < " + std::to_string(step_threshold) + " then 0 else 2", 1)};
    g.utility = {parse_expression("if isBot(a1) then " + rat_str(wrong_penalty) +
                                      " else if a1 == \"2\" then 1 else "
                                      "(if a1 == tn then 2 - c1 else " +
                                      rat_str(wrong_penalty) + ")",
                                  1)};
    g.budgets = Budgets{100, 16};
    return g;
}

// const-0/1/2 plus a declared tester that answers correctly at stipulated
// running time step_threshold.
inline CandidateSet<Machine> primality_candidate_set(const GameDef& g, int step_threshold = 2) {
    CandidateSet<Machine> set;
    set.provenance = "const-0/1/2 and the declared tester (correct answers, steps = " +
                     std::to_string(step_threshold) + ")";
    for (int a = 0; a < 3; ++a)
        set.machines.push_back(const_machine("const-" + std::to_string(a), std::to_string(a)));
    DeclaredMachine tester;
    tester.id = "tester";
    for (const auto& tp : g.type_profiles)
        tester.behavior[tp[0]] = DyadicDist<Action>::point(Action::of(tp[1]));
    tester.metrics["*"] = DeclaredMetrics{(std::uint64_t)step_threshold, 1, false};
    set.machines.push_back(make_machine(tester));
    return set;
}

// ---------------------------------------------------------------------------
// FRPD machinery

// Deterministic memoryless strategy (first move, response to C, response
// to D); id is "det:" + the three letters.
inline Transducer det_memoryless_strategy(const std::string& first, const std::string& on_c,
                                          const std::string& on_d) {
    return build_transducer("det:" + first + on_c + on_d, first, {{"C", on_c}, {"D", on_d}},
                            {"C", "D"});
}

// Memoryless strategy with a deterministic first move and dyadic mixtures
// in response to each observation.
inline Transducer memoryless_mixer_strategy(const std::string& first, const Rat& p_c_after_c,
                                            const Rat& p_c_after_d) {
    Transducer t;
    t.id = "mix:" + first + ":" + rat_str(p_c_after_c) + ":" + rat_str(p_c_after_d);
    t.states = {"s"};
    t.first_move = first;
    t.alphabet = {"C", "D"};
    auto mix = [](const Rat& p) {
        return DyadicDist<TransducerStep>{
            {{{"C", "s"}, p}, {{"D", "s"}, Rat(1) - p}}};
    };
    t.step[{"s", "C"}] = mix(p_c_after_c);
    t.step[{"s", "D"}] = mix(p_c_after_d);
    return t;
}

// Plays tit for tat through round k-1, then defects from round k on.  Needs
// k-2 counting states plus an absorbing one.
inline Transducer tft_defect_from(int k) {
    if (k < 3) throw DomainError("defect-from round must be >= 3 (earlier ones are memoryless)");
    Transducer t;
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d", k);
    t.id = std::string("ctr:") + buf;
    t.first_move = "C";
    t.alphabet = {"C", "D"};
    for (int j = 2; j <= k; ++j) t.states.push_back("r" + std::to_string(j));
    for (int j = 2; j <= k; ++j) {
        std::string cur = "r" + std::to_string(j);
        std::string next = j < k ? "r" + std::to_string(j + 1) : cur;
        for (const std::string obs : {"C", "D"}) {
            std::string move = j < k ? obs : "D";
            t.step[{cur, obs}] = DyadicDist<TransducerStep>::point({move, next});
        }
    }
    return t;
}

struct FrpdSetup {
    MediatedGameDef game;        // memory charge alpha for statesUsed > 1
    MediatedGameDef game_free;   // same game with zero complexity
    std::vector<StrategyMachine> candidates;
    StrategyMachine tit_for_tat;
};

inline FrpdSetup build_frpd(int rounds, const Rat& delta, const Rat& alpha,
                            unsigned mixer_bound) {
    if (rounds < 2) throw DomainError("frpd needs at least 2 rounds");
    if (!is_power_of_two(BigInt(mixer_bound)))
        throw DomainError("mixer denominator bound must be a power of two");
    FrpdSetup s;
    Expr charge = expr_if(expr_bin(BinOp::Gt, expr_var("stateCount"), expr_lit(Rat(1))),
                          expr_lit(alpha), expr_lit(Rat(0)));
    s.game = make_repeated_game(prisoners_dilemma_payoffs(), rounds, delta, {charge, charge});
    Expr zero = expr_lit(Rat(0));
    s.game_free = make_repeated_game(prisoners_dilemma_payoffs(), rounds, delta, {zero, zero});

    for (const std::string f : {"C", "D"})
        for (const std::string c : {"C", "D"})
            for (const std::string d : {"C", "D"})
                s.candidates.push_back(transducer_strategy(det_memoryless_strategy(f, c, d)));
    for (const std::string f : {"C", "D"})
        for (unsigned a = 0; a <= mixer_bound; ++a)
            for (unsigned b = 0; b <= mixer_bound; ++b) {
                bool det_a = a == 0 || a == mixer_bound;
                bool det_b = b == 0 || b == mixer_bound;
                if (det_a && det_b) continue;  // already among the deterministic eight
                s.candidates.push_back(transducer_strategy(memoryless_mixer_strategy(
                    f, Rat(a, mixer_bound), Rat(b, mixer_bound))));
            }
    for (int k = 3; k <= rounds; ++k)
        s.candidates.push_back(transducer_strategy(tft_defect_from(k)));
    s.tit_for_tat = transducer_strategy(det_memoryless_strategy("C", "C", "D"));
    return s;
}

// ---------------------------------------------------------------------------
// First-impressions reading policy

// Commit-to-a-count reading policy for the binary-signal guessing game:
// read m signals, then guess the maximum-posterior state.  Computed from
// the exact joint distribution over (signals read, count difference).
struct ReadingPolicy {
    int read_count = 0;   // optimal m
    Rat value;            // expected utility of reading read_count signals
    int read_bound = 0;   // smallest m after which reading never pays again
    std::vector<Rat> expected_maxpost;  // E[max posterior | m], m = 0..n
};

namespace detail {

// E[maxpost | m] = 1/2 sum_k C(m,k) max(rho^k (1-rho)^(m-k), rho^(m-k) (1-rho)^k)
inline std::vector<Rat> expected_maxpost_by_count(const Rat& rho, int n) {
    std::vector<std::vector<BigInt>> choose(n + 1, std::vector<BigInt>(n + 1, BigInt(0)));
    for (int m = 0; m <= n; ++m) {
        choose[m][0] = 1;
        for (int k = 1; k <= m; ++k)
            choose[m][k] = choose[m - 1][k - 1] + (k <= m - 1 ? choose[m - 1][k] : BigInt(0));
    }
    const Rat q = Rat(1) - rho;
    std::vector<Rat> out;
    for (int m = 0; m <= n; ++m) {
        Rat acc = 0;
        for (int k = 0; k <= m; ++k) {
            Rat w1 = rat_pow(rho, k) * rat_pow(q, m - k);
            Rat w0 = rat_pow(rho, m - k) * rat_pow(q, k);
            acc += Rat(choose[m][k]) * std::max(w1, w0);
        }
        out.push_back(acc / 2);
    }
    return out;
}

inline int best_read_count(const std::vector<Rat>& maxpost, const Rat& cost, int n) {
    Rat best = maxpost[0];
    int arg = 0;
    for (int m = 1; m <= n; ++m) {
        Rat value = maxpost[m] - Rat(m) * cost;
        if (value > best) {
            best = value;
            arg = m;
        }
    }
    return arg;
}

}  // namespace detail

inline constexpr int kMaxReadingHorizon = 30;

inline ReadingPolicy optimal_reading_policy(const Rat& rho, const Rat& cost, int n) {
    if (!(rho > Rat(1, 2) && rho < 1)) throw DomainError("rho must be in (1/2, 1)");
    if (cost < 0) throw DomainError("signal cost must be nonnegative");
    if (n < 0 || n > kMaxReadingHorizon)
        throw DomainError("n must be in [0, " + std::to_string(kMaxReadingHorizon) + "]");

    ReadingPolicy pol;
    std::vector<Rat> full = detail::expected_maxpost_by_count(rho, kMaxReadingHorizon);
    pol.expected_maxpost.assign(full.begin(), full.begin() + n + 1);
    pol.read_count = detail::best_read_count(pol.expected_maxpost, cost, n);
    pol.value = pol.expected_maxpost[pol.read_count] - Rat(pol.read_count) * cost;
    // horizon-independent stopping bound: the optimal count even when every
    // longer sequence (up to the supported horizon) is available
    pol.read_bound = detail::best_read_count(full, cost, kMaxReadingHorizon);
    return pol;
}

// ---------------------------------------------------------------------------
// Pseudorandom generators and prefix-table predictors

using GeneratorFn = std::function<std::string(const std::string&)>;

// Fibonacci LFSR over x^4 + x^3 + 1: output the leading register bit, feed
// back the xor of the last two.
inline GeneratorFn lfsr4_generator(int ell) {
    return [ell](const std::string& seed) {
        if (seed.size() != 4) throw DomainError("lfsr4 needs a 4-bit seed");
        std::string reg = seed, out;
        for (int i = 0; i < ell; ++i) {
            out.push_back(reg[0]);
            char fb = ((reg[3] - '0') ^ (reg[2] - '0')) + '0';
            reg = reg.substr(1) + fb;
        }
        return out;
    };
}

inline GeneratorFn make_generator(const std::string& name, int ell0, int ell) {
    if (name == "lfsr4") {
        if (ell0 != 4) throw DomainError("lfsr4 requires ell0 = 4");
        return lfsr4_generator(ell);
    }
    if (name == "zero")
        return [ell](const std::string&) { return std::string(ell, '0'); };
    if (name == "identity")
        return [ell](const std::string& seed) { return seed.substr(0, ell); };
    throw DomainError("unknown generator '" + name + "'");
}

struct PrgAnalysis {
    std::vector<Rat> advantage;  // per position i: best table success - 1/2
    Rat epsilon_star;            // max over positions
    std::vector<std::map<std::string, std::string>> majority_tables;
};

// Exhaustive seed enumeration: at position i the optimal predictor maps
// each observed i-bit prefix to the majority next bit; its success rate is
// an upper bound for every predictor that sees at most that prefix.
// `window` restricts tables to the last `window` bits of the prefix
// (coarser information); window < 0 means the full prefix.
inline PrgAnalysis prg_max_advantage(const GeneratorFn& g, int ell0, int ell, int window = -1) {
    if (ell0 < 1 || ell0 > 16) throw DomainError("ell0 must be in [1, 16]");
    if (ell < 1) throw DomainError("ell must be positive");
    PrgAnalysis out;
    std::uint64_t seeds = std::uint64_t(1) << ell0;

    std::vector<std::string> expansions;
    for (std::uint64_t s = 0; s < seeds; ++s) {
        std::string seed;
        for (int b = ell0 - 1; b >= 0; --b) seed.push_back((s >> b) & 1 ? '1' : '0');
        std::string x = g(seed);
        if ((int)x.size() != ell)
            throw DomainError("generator produced " + std::to_string(x.size()) +
                              " bits, expected " + std::to_string(ell));
        expansions.push_back(std::move(x));
    }

    out.epsilon_star = 0;
    for (int i = 0; i < ell; ++i) {
        std::map<std::string, std::array<std::uint64_t, 2>> counts;
        for (const auto& x : expansions) {
            std::string key = x.substr(0, i);
            if (window >= 0 && (int)key.size() > window)
                key = key.substr(key.size() - window);
            counts[key][x[i] - '0'] += 1;
        }
        std::uint64_t correct = 0;
        std::map<std::string, std::string> table;
        for (const auto& [prefix, c] : counts) {
            correct += std::max(c[0], c[1]);
            table[prefix] = c[1] > c[0] ? "1" : "0";  // ties predict 0
        }
        Rat adv = Rat(correct, seeds) - Rat(1, 2);
        out.advantage.push_back(adv);
        out.majority_tables.push_back(std::move(table));
        out.epsilon_star = std::max(out.epsilon_star, adv);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Revelation-game machinery

// Compares the first k+1 bits of the two stage-1 reports once both are long
// enough; replies the verdict bit to both players.
inline MediatorSpec prefix_compare_mediator(int k) {
    MediatorSpec m;
    m.id = "prefix-compare";
    m.program = [k](MediatorCtx& ctx) -> std::vector<std::string> {
        if (ctx.stage != 1) return {"", ""};
        const std::string& m1 = ctx.messages.at(0);
        const std::string& m2 = ctx.messages.at(1);
        if ((int)m1.size() >= k + 1 && (int)m2.size() >= k + 1) {
            std::string v = m1.substr(0, k + 1) == m2.substr(0, k + 1) ? "1" : "0";
            return {v, v};
        }
        return {"", ""};
    };
    return m;
}

// Reports the first j bits of its type, then outputs the mediator's verdict
// (guessing "different" when no verdict arrived).
inline StrategyMachine prefix_reporter(int j) {
    StrategyMachine m;
    m.id = "report:" + std::to_string(j);
    m.program = [j](StageCtx& ctx) -> StageOutput {
        if (ctx.phase == 1 && ctx.stage == 1)
            return {ctx.type().substr(0, std::min<std::size_t>(j, ctx.type().size())),
                    std::nullopt};
        if (ctx.phase == 3 && ctx.stage == 2) {
            const std::string& verdict = ctx.reply(1);
            return {"", verdict == "1" || verdict == "0" ? verdict : std::string("0")};
        }
        return {};
    };
    return m;
}

// Pairs of n-bit types that are equal or agree in at most k positions,
// uniformly weighted; communication is charged through the complexity.
inline MediatedGameDef build_revelation_game(int n, int k) {
    if (!(k + 1 < n)) throw DomainError("revelation game needs k + 1 < n");
    if (n > 8) throw DomainError("n must be <= 8 to keep the type space enumerable");
    MediatedGameDef g;
    g.player_count = 2;
    g.stages = 2;
    g.mediator = prefix_compare_mediator(k);
    g.budgets = Budgets{64, 64};

    std::vector<std::uint32_t> masks{0};
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask)
        if (__builtin_popcount(mask) >= n - k) masks.push_back(mask);
    for (std::uint32_t t1 = 0; t1 < (1u << n); ++t1)
        for (std::uint32_t mask : masks) {
            std::uint32_t t2 = t1 ^ mask;
            std::string s1, s2;
            for (int b = n - 1; b >= 0; --b) {
                s1.push_back((t1 >> b) & 1 ? '1' : '0');
                s2.push_back((t2 >> b) & 1 ? '1' : '0');
            }
            g.type_profiles.push_back({s1, s2, ""});
        }
    g.prior.assign(g.type_profiles.size(), Rat(1, (unsigned)g.type_profiles.size()));

    g.complexity = {parse_expression("bitsSent", 2), parse_expression("bitsSent", 2)};
    auto util = [&](int i) {
        std::string a = "a" + std::to_string(i + 1);
        std::string c = "c" + std::to_string(i + 1);
        return parse_expression("if isBot(" + a + ") then 0 else if " + c + " >= " +
                                    std::to_string(k + 2) + " then 0 else if " + a +
                                    " == (if t1 == t2 then \"1\" else \"0\") then 1 else 0",
                                2);
    };
    g.utility = {util(0), util(1)};
    return g;
}

// ---------------------------------------------------------------------------
// Experiments

inline Report exp_roshambo(unsigned mixer_bound = 8, const Rat& det_cost = 1,
                           const Rat& rand_cost = 2, unsigned budget_bits = 4) {
    if (mixer_bound < 2) throw DomainError("mixer denominator bound must be >= 2");
    Report r;
    r.scenario = "roshambo";
    r.params = {{"mixerDenominatorBound", std::to_string(mixer_bound)},
                {"detCost", rat_str(det_cost)},
                {"randCost", rat_str(rand_cost)},
                {"budgetBits", std::to_string(budget_bits)}};

    GameDef g = build_roshambo_game(det_cost, rand_cost);
    CandidateSet<Machine> cands = roshambo_candidate_set(mixer_bound);
    std::vector<CandidateSet<Machine>> per_player{cands, cands};

    auto hits = search_pure_nash(g, per_player, Rat(0));
    bool no_pure_ne = hits.empty();

    // best symmetric mixer profile: the smallest certified epsilon
    detail::EuCache<GameDef, Machine> cache{&g, {}};
    Table mixers{"symmetric-mixer-epsilons", {"machine", "epsilon"}, {}};
    std::optional<Rat> best_eps;
    std::string best_id;
    for (const auto& m : cands.machines) {
        if (m.id.rfind("mix:", 0) != 0) continue;
        auto cert =
            certify_epsilon_nash(g, std::vector<Machine>{m, m}, per_player, Rat(0), &cache);
        Rat eps = max_gap(cert);
        mixers.rows.push_back({std::string(m.id), eps});
        if (!best_eps || eps < *best_eps || (eps == *best_eps && m.id < best_id)) {
            best_eps = eps;
            best_id = m.id;
        }
    }

    // cost-free variant: free randomization recovers the uniform equilibrium
    GameDef free_game = build_roshambo_game(0, 0);
    std::vector<Machine> consts{const_machine("const-0", "0"), const_machine("const-1", "1"),
                                const_machine("const-2", "2")};
    auto nf = induced_normal_form(free_game, {consts, consts});
    auto solutions = solve_2p_support_enumeration(to_matrix_game(nf));
    bool uniform_ne = solutions.size() == 1;
    if (uniform_ne)
        for (const auto& p : solutions[0].first.probs) uniform_ne &= (p == Rat(1, 3));
    Table costfree{"cost-free-equilibria", {"action", "p1", "p2"}, {}};
    for (const auto& [x, y] : solutions)
        for (std::size_t i = 0; i < x.probs.size(); ++i)
            costfree.rows.push_back({std::string(consts[i].id), x.probs[i], y.probs[i]});

    // budgeted simulation of the uniform mixture: sample intervals for
    // (1/3, 1/3, 1/3), play rock when the coin budget runs out
    auto built = build_interval_sampler({Rat(0), Rat(1, 3), Rat(2, 3), Rat(1)}, {"0", "1", "2"},
                                        budget_bits, "sampler-rock-fallback", "0");
    CandidateSet<Machine> with_sampler = cands;
    with_sampler.machines.push_back(built.machine);
    with_sampler.provenance += "; plus the budgeted uniform sampler";
    std::vector<CandidateSet<Machine>> sampler_cands{with_sampler, with_sampler};
    auto sampler_cert = certify_epsilon_nash(
        g, std::vector<Machine>{built.machine, built.machine}, sampler_cands, Rat(0));
    Rat budgeted_eps = max_gap(sampler_cert);

    Table summary{"summary", {"quantity", "value"}, {}};
    summary.rows.push_back({std::string("profilesSearched"),
                            Rat(cands.machines.size() * cands.machines.size())});
    summary.rows.push_back({std::string("pureEquilibriaFound"), Rat(hits.size())});
    summary.rows.push_back({std::string("bestSymmetricMixer"), best_id});
    summary.rows.push_back({std::string("bestSymmetricMixerEpsilon"), *best_eps});
    summary.rows.push_back({std::string("budgetedSamplerEpsilon"), budgeted_eps});
    for (int k = 0; k < 3; ++k)
        summary.rows.push_back(
            {"budgetedSamplerMass" + std::to_string(k), built.stats.decided_mass[k]});
    summary.rows.push_back({std::string("budgetedSamplerUndecided"), built.stats.undecided_mass});

    r.tables = {summary, mixers, costfree};
    r.certificates = {sampler_cert};
    r.findings = {{"noPureNE", no_pure_ne},
                  {"costFreeUniformNE", uniform_ne},
                  {"randomizationCostlierThanDeterminism", rand_cost > det_cost}};
    r.notes = {"certification is relative to the declared candidate set: " + cands.provenance};
    return r;
}

inline Report exp_primality(int bit_length = 10, int step_threshold = 2,
                            const Rat& wrong_penalty = Rat(-1000)) {
    Report r;
    r.scenario = "primality";
    r.params = {{"bitLength", std::to_string(bit_length)},
                {"stepThreshold", std::to_string(step_threshold)},
                {"wrongPenalty", rat_str(wrong_penalty)}};

    GameDef g = build_primality_game(bit_length, step_threshold, wrong_penalty);
    CandidateSet<Machine> cands = primality_candidate_set(g, step_threshold);
    std::vector<CandidateSet<Machine>> per_player{cands};

    Table exante{"ex-ante", {"machine", "utility"}, {}};
    for (const auto& m : cands.machines)
        exante.rows.push_back(
            {std::string(m.id), expected_utility_exact(g, std::vector<Machine>{m})[0]});

    auto hits = search_pure_nash(g, per_player, Rat(0));
    bool unique_safe = hits.size() == 1 && hits[0].profile_ids[0] == "const-2";
    Rat safe_utility = expected_utility_exact(g, {cands.machines[2]})[0];

    // interim best responses per primality class
    Table interim{"interim", {"class", "types", "bestMachine", "bestUtility"}, {}};
    bool diverge = false;
    for (const std::string cls : {"1", "0"}) {
        int count = 0;
        std::optional<Rat> best;
        std::string best_id;
        for (const auto& tp : g.type_profiles) {
            if (tp[1] != cls) continue;
            ++count;
            for (const auto& m : cands.machines) {
                Rat u = conditional_utility(g, std::vector<Machine>{m}, 0, tp[0]);
                if (!best || u > *best || (u == *best && m.id < best_id)) {
                    best = u;
                    best_id = m.id;
                }
            }
            break;  // the interim problem is identical within a class
        }
        // count the full class size
        count = 0;
        for (const auto& tp : g.type_profiles) count += (tp[1] == cls);
        if (count == 0) continue;
        interim.rows.push_back({std::string(cls == "1" ? "prime" : "composite"), Rat(count),
                                best_id, *best});
        diverge |= (best_id != "const-2");
    }

    r.tables = {exante, interim};
    r.certificates = hits;
    r.findings = {{"playSafeUniqueNE", unique_safe},
                  {"playSafeUtilityIsOne", safe_utility == 1},
                  {"exAnteInterimDiverge", diverge && unique_safe}};
    return r;
}

inline Report exp_frpd(int rounds = 10, const Rat& delta = Rat(9, 10),
                       std::optional<Rat> alpha_opt = std::nullopt, unsigned mixer_bound = 8) {
    if (!(delta > 0 && delta <= 1)) throw DomainError("delta must be in (0, 1]");
    Rat two_delta_n = 2 * rat_pow(delta, rounds);
    Rat alpha = alpha_opt.value_or(two_delta_n);

    Report r;
    r.scenario = "frpd";
    r.params = {{"N", std::to_string(rounds)},
                {"delta", rat_str(delta)},
                {"alpha", rat_str(alpha)},
                {"mixerDenominatorBound", std::to_string(mixer_bound)}};

    FrpdSetup s = build_frpd(rounds, delta, alpha, mixer_bound);
    std::string provenance = "8 deterministic memoryless transducers, dyadic-randomized "
                             "memoryless transducers with denominators <= " +
                             std::to_string(mixer_bound) +
                             ", and tit-for-tat-then-defect counters (k = 3.." +
                             std::to_string(rounds) + ")";
    CandidateSet<StrategyMachine> cands{s.candidates, provenance};
    std::vector<CandidateSet<StrategyMachine>> per_player{cands, cands};
    std::vector<StrategyMachine> profile{s.tit_for_tat, s.tit_for_tat};

    // raw (uncharged) utilities of every player-1 deviation against TfT
    detail::EuCache<MediatedGameDef, StrategyMachine> cache0{&s.game_free, {}};
    Rat base = cache0.get(profile)[0];
    std::map<std::string, Rat> raw_gain;
    for (const auto& c : s.candidates) {
        std::vector<StrategyMachine> dev{c, s.tit_for_tat};
        raw_gain[c.id] = cache0.get(dev)[0] - base;
    }

    // memory threshold: the largest raw gain among memory-using deviations
    Rat threshold = 0;
    std::string threshold_id = "none";
    Rat stateless_max = 0;
    for (const auto& c : s.candidates) {
        if (c.states_used > 1) {
            if (raw_gain[c.id] > threshold) {
                threshold = raw_gain[c.id];
                threshold_id = c.id;
            }
        } else {
            stateless_max = std::max(stateless_max, raw_gain[c.id]);
        }
    }

    // the paper-style inequalities, asserted per enumerated deviation
    bool defect_bound_holds = true;
    Table counters{"counter-deviations", {"k", "rawGain", "lossBound"}, {}};
    for (int k = 3; k <= rounds; ++k) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "%02d", k);
        Rat gain = raw_gain[std::string("ctr:") + buf];
        if (k < rounds) {
            Rat min_loss = 6 * rat_pow(delta, k + 1) - 2 * rat_pow(delta, k);
            counters.rows.push_back({Rat(k), gain, -min_loss});
            defect_bound_holds &= (-gain >= min_loss);
        } else {
            counters.rows.push_back({Rat(k), gain, two_delta_n});
        }
    }
    // deterministic memoryless deviations that defect at some round k < N
    for (const auto& c : s.candidates) {
        if (c.id.rfind("det:", 0) != 0 || c.id == "det:CCC" || c.id == "det:CCD") continue;
        auto tr = execute_mediated({c, s.tit_for_tat}, s.game.mediator, {"", "", ""},
                                   std::vector<CoinTape>(3), rounds, s.game.budgets);
        int k = 0;
        for (int m = 1; m <= rounds && k == 0; ++m)
            if (tr.stages[m - 1].messages[0] == "D") k = m;
        if (k == 0 || k >= rounds) continue;
        Rat min_loss = 6 * rat_pow(delta, k + 1) - 2 * rat_pow(delta, k);
        defect_bound_holds &= (-raw_gain[c.id] >= min_loss);
    }

    // stateless last-round defectors: gain <= p delta^(N-1) (2 - 4 delta)
    bool stateless_bound_holds = true;
    for (const auto& c : s.candidates) {
        if (c.states_used > 1) continue;
        Rat first_c, p_cc;
        if (c.id.rfind("det:", 0) == 0) {
            first_c = Rat(c.id[4] == 'C' ? 1 : 0);
            p_cc = Rat(c.id[5] == 'C' ? 1 : 0);
        } else if (c.id.rfind("mix:", 0) == 0) {
            auto rest = c.id.substr(4);
            auto p1 = rest.find(':');
            auto p2 = rest.find(':', p1 + 1);
            first_c = Rat(rest.substr(0, p1) == "C" ? 1 : 0);
            p_cc = parse_rat(rest.substr(p1 + 1, p2 - p1 - 1));
        } else {
            continue;
        }
        Rat p = first_c * rat_pow(p_cc, rounds - 2) * (Rat(1) - p_cc);
        Rat bound = p * rat_pow(delta, rounds - 1) * (Rat(2) - 4 * delta);
        stateless_bound_holds &= (raw_gain[c.id] <= bound);
    }

    // certificates at the requested alpha and at alpha = 0
    auto cert_alpha = certify_epsilon_nash(s.game, profile, per_player, Rat(0));
    auto cert_zero =
        certify_epsilon_nash(s.game_free, profile, per_player, Rat(0), &cache0);

    Table sweep{"alpha-sweep", {"alpha", "maxMemoryGainAfterCharge", "certified"}, {}};
    const std::vector<Rat> sweep_alphas{Rat(0), Rat(threshold / 2), threshold,
                                        Rat(threshold * 2)};
    for (const Rat& a : sweep_alphas) {
        Rat after = threshold - a;
        bool certified = std::max(after, stateless_max) <= 0;
        sweep.rows.push_back({a, after, certified});
    }

    Table summary{"summary", {"quantity", "value"}, {}};
    summary.rows.push_back({std::string("titForTatValue"), base});
    summary.rows.push_back({std::string("candidates"), Rat(s.candidates.size())});
    summary.rows.push_back({std::string("memoryGainThreshold"), threshold});
    summary.rows.push_back({std::string("memoryGainArgmax"), threshold_id});
    summary.rows.push_back({std::string("twoDeltaN"), two_delta_n});
    summary.rows.push_back({std::string("statelessMaxGain"), stateless_max});

    r.tables = {summary, sweep, counters};
    r.certificates = {cert_alpha, cert_zero};
    r.findings = {
        {"certifiedAtAlpha", cert_alpha.is_epsilon_ne},
        {"alphaCoversMemoryGain", alpha >= threshold},
        {"alphaZeroFails", !cert_zero.is_epsilon_ne},
        {"alphaZeroGapIsTwoDeltaN", max_gap(cert_zero) == two_delta_n},
        {"defectAtKBoundHolds", defect_bound_holds},
        {"statelessBoundHolds", stateless_bound_holds},
        {"thresholdIsTwoDeltaN", threshold == two_delta_n},
    };
    r.notes = {"det:CCD plays tit for tat; det:DDD always defects",
               "counters ctr:k echo until round k-1 and defect from round k on"};
    return r;
}

inline Report exp_first_impressions(const Rat& rho = Rat(7, 10), const Rat& cost = Rat(1, 100),
                                    int n = 20) {
    Report r;
    r.scenario = "first-impressions";
    r.params = {{"rho", rat_str(rho)}, {"c", rat_str(cost)}, {"n", std::to_string(n)}};

    ReadingPolicy pol = optimal_reading_policy(rho, cost, n);

    Table values{"values", {"m", "expectedMaxPosterior", "value", "gainOfNextSignal"}, {}};
    for (int m = 0; m <= n; ++m) {
        Rat value = pol.expected_maxpost[m] - Rat(m) * cost;
        Rat gain = m < n ? pol.expected_maxpost[m + 1] - pol.expected_maxpost[m] : Rat(0);
        values.rows.push_back({Rat(m), pol.expected_maxpost[m], value, gain});
    }
    Table summary{"summary", {"quantity", "value"}, {}};
    summary.rows.push_back({std::string("readCount"), Rat(pol.read_count)});
    summary.rows.push_back({std::string("value"), pol.value});
    summary.rows.push_back({std::string("readBound"), Rat(pol.read_bound)});

    // stability of the bound as the horizon grows to the supported maximum
    bool stable = true;
    for (int horizon = std::max(pol.read_bound, 1); horizon <= kMaxReadingHorizon; ++horizon) {
        ReadingPolicy p2 = optimal_reading_policy(rho, cost, horizon);
        stable &= (p2.read_count == pol.read_bound) && (p2.read_bound == pol.read_bound);
    }

    r.tables = {summary, values};
    r.findings = {{"ignoresLateSignals", pol.read_bound < n},
                  {"readBoundStableTo30", stable},
                  {"readingEverPays", pol.read_count > 0}};
    return r;
}

inline Report exp_tennis_prg(int ell0 = 4, int ell = 8, const std::string& generator = "lfsr4",
                             std::optional<Rat> p0_override = std::nullopt) {
    Report r;
    r.scenario = "tennis-prg";
    r.params = {{"ell0", std::to_string(ell0)},
                {"ell", std::to_string(ell)},
                {"generator", generator}};

    GeneratorFn g = make_generator(generator, ell0, ell);
    if (ell <= ell0) {
        r.findings = {{"noExpansion", true}};
        r.notes = {"generator does not expand its seed (ell <= ell0); the predictor analysis "
                   "requires expansion"};
        return r;
    }

    PrgAnalysis prg = prg_max_advantage(g, ell0, ell);
    Rat p0 = p0_override.value_or(prg.epsilon_star * ell + 1);
    Rat p_huge = Rat(ell + 1);
    r.params.push_back({"p0", rat_str(p0)});

    // the serving game: player 1 streams generator bits, player 2 may guess
    MediatedGameDef game;
    game.player_count = 2;
    game.type_profiles = {{"", "", ""}};
    game.prior = {Rat(1)};
    game.stages = ell;
    MediatorSpec reveal;
    reveal.id = "reveal-to-receiver";
    reveal.program = [](MediatorCtx& ctx) {
        return std::vector<std::string>{"", ctx.messages.at(0)};
    };
    game.mediator = reveal;
    game.budgets = Budgets{64, 64};
    game.complexity = {
        parse_expression("if coinBits > " + std::to_string(ell0) + " then " + rat_str(p_huge) +
                             " else 0",
                         2),
        parse_expression("if bitsSent > 0 then " + rat_str(p0) + " else 0", 2)};
    for (int player = 0; player < 2; ++player) {
        NativeUtility u = [player](const TypeProfile&, const Transcript& tr,
                                   const std::vector<Rat>& comps) {
            Rat score = 0;
            for (const auto& st : tr.stages) {
                const std::string& x = st.messages[0];
                const std::string& guess = st.messages[1];
                if (guess.empty()) continue;
                int receiver_point = (guess == x) ? 1 : -1;
                score += player == 1 ? receiver_point : -receiver_point;
            }
            return score - comps[player];
        };
        game.utility.emplace_back(std::move(u));
    }

    StrategyMachine server;
    server.id = "seed-sampler";
    server.program = [g, ell0](StageCtx& ctx) -> StageOutput {
        if (ctx.phase != 1) return {};
        if (ctx.stage == 1) {
            std::string seed;
            for (int b = 0; b < ell0; ++b)
                seed.push_back(ctx.draw_index({Rat(1, 2), Rat(1, 2)}) ? '1' : '0');
            ctx.state = g(seed);
        }
        return {std::string(1, ctx.state.at(ctx.stage - 1)), std::nullopt};
    };
    StrategyMachine pass;
    pass.id = "pass";

    CandidateSet<StrategyMachine> receiver_cands;
    receiver_cands.provenance =
        "always-pass plus the optimal majority table at each position (each dominates every "
        "predictor that sees the same prefix)";
    receiver_cands.machines.push_back(pass);
    for (int i = 0; i < ell; ++i) {
        StrategyMachine predictor;
        predictor.id = "table:" + std::to_string(i);
        auto table = prg.majority_tables[i];
        predictor.program = [i, table](StageCtx& ctx) -> StageOutput {
            if (ctx.phase != 1 || ctx.stage != i + 1) return {};
            std::string prefix;
            for (int s = 1; s <= i; ++s) prefix += ctx.reply(s);
            auto it = table.find(prefix);
            return {it == table.end() ? "0" : it->second, std::nullopt};
        };
        receiver_cands.machines.push_back(predictor);
    }
    CandidateSet<StrategyMachine> server_cands{{server}, "the seed-sampling server"};

    std::vector<StrategyMachine> profile{server, pass};
    auto cert = certify_epsilon_nash(game, profile, {server_cands, receiver_cands}, Rat(0));

    Table advantages{"advantages", {"position", "advantage"}, {}};
    for (int i = 0; i < ell; ++i) advantages.rows.push_back({Rat(i), prg.advantage[i]});
    Table predictors{"predictors", {"machine", "utility", "gap"}, {}};
    Rat pass_value = expected_utility_mediated(game, profile)[1];
    for (const auto& m : receiver_cands.machines) {
        Rat u = expected_utility_mediated(game, {server, m})[1];
        predictors.rows.push_back({std::string(m.id), u, u - pass_value});
    }
    Table summary{"summary", {"quantity", "value"}, {}};
    summary.rows.push_back({std::string("epsilonStar"), prg.epsilon_star});
    summary.rows.push_back({std::string("p0"), p0});
    summary.rows.push_back({std::string("receiverPassValue"), pass_value});

    r.tables = {summary, advantages, predictors};
    r.certificates = {cert};
    r.findings = {{"noExpansion", false},
                  {"profileIsNE", cert.is_epsilon_ne},
                  {"strict", cert.strict},
                  {"penaltyAbsorbsAdvantage", p0 >= 2 * prg.epsilon_star}};
    r.notes = {"the majority tables are exact optima over all per-position prefix predictors, "
               "so the certified epsilon is conservative for every bounded machine class"};
    return r;
}

inline Report exp_revelation(int n = 6, int k = 2) {
    Report r;
    r.scenario = "revelation";
    r.params = {{"n", std::to_string(n)}, {"k", std::to_string(k)}};

    MediatedGameDef g = build_revelation_game(n, k);
    CandidateSet<StrategyMachine> cands;
    cands.provenance = "prefix reporters (j = 0.." + std::to_string(n) +
                       ") that echo the mediator's verdict";
    for (int j = 0; j <= n; ++j) cands.machines.push_back(prefix_reporter(j));
    std::vector<CandidateSet<StrategyMachine>> per_player{cands, cands};

    detail::EuCache<MediatedGameDef, StrategyMachine> cache{&g, {}};
    std::vector<StrategyMachine> prefix_profile{cands.machines[k + 1], cands.machines[k + 1]};
    auto cert = certify_epsilon_nash(g, prefix_profile, per_player, Rat(0), &cache);
    Rat prefix_value = cache.get(prefix_profile)[0];

    std::vector<StrategyMachine> full_profile{cands.machines[n], cands.machines[n]};
    auto full_cert = certify_epsilon_nash(g, full_profile, per_player, Rat(0), &cache);
    Rat full_value = cache.get(full_profile)[0];

    Table deviations{"deviations", {"j", "bitsSent", "utility", "gap"}, {}};
    for (int j = 0; j <= n; ++j) {
        std::vector<StrategyMachine> dev{cands.machines[j], cands.machines[k + 1]};
        Rat u = cache.get(dev)[0];
        deviations.rows.push_back({Rat(j), Rat(j), u, u - prefix_value});
    }

    Table summary{"summary", {"quantity", "value"}, {}};
    summary.rows.push_back({std::string("typeProfiles"), Rat(g.type_profiles.size())});
    summary.rows.push_back({std::string("prefixProfileValue"), prefix_value});
    summary.rows.push_back({std::string("fullReportValue"), full_value});
    summary.rows.push_back({std::string("fullReportBestGap"), max_gap(full_cert)});

    r.tables = {summary, deviations};
    r.certificates = {cert, full_cert};
    r.findings = {{"prefixProfileIsNE", cert.is_epsilon_ne},
                  {"prefixProfileValueIsOne", prefix_value == 1},
                  {"fullReportValueIsZero", full_value == 0},
                  {"revelationFails", full_value == 0 && max_gap(full_cert) > 0}};
    r.notes = {"truthfully reporting the whole type costs at least k + 2 bits and forfeits the "
               "payoff, so no mediator makes full revelation an equilibrium here"};
    return r;
}

// ---------------------------------------------------------------------------
// Registry

using ParamMap = std::map<std::string, std::string>;

struct ExperimentInfo {
    std::string name;
    std::string description;
    // parameter name -> default (as written on the command line)
    std::vector<std::pair<std::string, std::string>> params;
    std::function<Report(const ParamMap&)> run;
};

namespace detail {

inline std::string param_or(const ParamMap& p, const std::string& key, const std::string& def) {
    auto it = p.find(key);
    return it == p.end() ? def : it->second;
}

inline int param_int(const ParamMap& p, const std::string& key, int def) {
    auto it = p.find(key);
    return it == p.end() ? def : std::stoi(it->second);
}

inline Rat param_rat(const ParamMap& p, const std::string& key, const Rat& def) {
    auto it = p.find(key);
    return it == p.end() ? def : parse_rat(it->second);
}

}  // namespace detail

inline const std::vector<ExperimentInfo>& experiment_registry() {
    static const std::vector<ExperimentInfo> registry = {
        {"roshambo",
         "rock-paper-scissors with costly randomization: no pure machine equilibrium",
         {{"bound", "8"}, {"detCost", "1"}, {"randCost", "2"}, {"budgetBits", "4"}},
         [](const ParamMap& p) {
             return exp_roshambo(detail::param_int(p, "bound", 8),
                                 detail::param_rat(p, "detCost", Rat(1)),
                                 detail::param_rat(p, "randCost", Rat(2)),
                                 detail::param_int(p, "budgetBits", 4));
         }},
        {"primality",
         "guess-the-primality game: ex-ante play-safe versus interim certainty",
         {{"bitLength", "10"}, {"stepThreshold", "2"}, {"wrongPenalty", "-1000"}},
         [](const ParamMap& p) {
             return exp_primality(detail::param_int(p, "bitLength", 10),
                                  detail::param_int(p, "stepThreshold", 2),
                                  detail::param_rat(p, "wrongPenalty", Rat(-1000)));
         }},
        {"frpd",
         "finitely repeated prisoner's dilemma with a memory charge: tit for tat certifies",
         {{"N", "10"}, {"delta", "9/10"}, {"alpha", "auto"}, {"bound", "8"}},
         [](const ParamMap& p) {
             std::optional<Rat> alpha;
             std::string a = detail::param_or(p, "alpha", "auto");
             if (a != "auto") alpha = parse_rat(a);
             return exp_frpd(detail::param_int(p, "N", 10),
                             detail::param_rat(p, "delta", Rat(9, 10)), alpha,
                             detail::param_int(p, "bound", 8));
         }},
        {"first-impressions",
         "costly signal reading: the optimal policy ignores late signals",
         {{"rho", "7/10"}, {"c", "1/100"}, {"n", "20"}},
         [](const ParamMap& p) {
             return exp_first_impressions(detail::param_rat(p, "rho", Rat(7, 10)),
                                          detail::param_rat(p, "c", Rat(1, 100)),
                                          detail::param_int(p, "n", 20));
         }},
        {"tennis-prg",
         "serving with a weak generator against bounded predictors",
         {{"ell0", "4"}, {"ell", "8"}, {"generator", "lfsr4"}, {"p0", "auto"}},
         [](const ParamMap& p) {
             std::optional<Rat> p0;
             std::string v = detail::param_or(p, "p0", "auto");
             if (v != "auto") p0 = parse_rat(v);
             return exp_tennis_prg(detail::param_int(p, "ell0", 4),
                                   detail::param_int(p, "ell", 8),
                                   detail::param_or(p, "generator", "lfsr4"), p0);
         }},
        {"revelation",
         "prefix reporting beats full revelation when communication is charged",
         {{"n", "6"}, {"k", "2"}},
         [](const ParamMap& p) {
             return exp_revelation(detail::param_int(p, "n", 6), detail::param_int(p, "k", 2));
         }},
    };
    return registry;
}

inline Report run_experiment(const std::string& name, const ParamMap& params) {
    for (const auto& e : experiment_registry()) {
        if (e.name != name) continue;
        for (const auto& [key, value] : params) {
            bool known = false;
            for (const auto& [pname, pdef] : e.params) known |= (pname == key);
            if (!known)
                throw DomainError("experiment '" + name + "' has no parameter '" + key + "'");
        }
        return e.run(params);
    }
    throw DomainError("unknown experiment '" + name + "'");
}

}  // namespace bmg
