// Best-response gaps, epsilon-Nash certification and search over explicit
// finite candidate sets, induced normal forms, exact 2-player support
// enumeration, and uniform small-support search.
//
// Certification is always relative to a declared candidate set; every
// certificate carries the set's provenance so no claim quantifies over
// machines that were never examined.  Ties break lexicographically by id.
#pragma once

#include "bmg/eval.hpp"
#include "bmg/game.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bmg {

// Customization point: exact expected utilities for a (game, profile) pair.
// Mediated games provide their own overload.
inline std::vector<Rat> exact_utilities(const GameDef& g, const std::vector<Machine>& profile) {
    return expected_utility_exact(g, profile);
}

inline const std::string& machine_id(const Machine& m) { return m.id; }

template <class M>
struct CandidateSet {
    std::vector<M> machines;
    std::string provenance;  // what class of machines this set represents
};

template <class M>
void validate_candidates(const CandidateSet<M>& c) {
    if (c.machines.empty()) throw DefinitionError("candidate set is empty");
    std::vector<std::string> ids;
    for (const auto& m : c.machines) ids.push_back(machine_id(m));
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw DefinitionError("candidate set has duplicate ids");
}

struct PlayerGapReport {
    Rat gap;                 // max over candidates of U(deviation) - U(profile)
    std::string argmax_id;   // lexicographically first maximizer
    std::string provenance;  // candidate set the gap quantifies over
};

struct EquilibriumCertificate {
    std::vector<std::string> profile_ids;
    std::vector<PlayerGapReport> players;
    Rat epsilon;
    std::string engine = "exact";
    bool is_epsilon_ne = false;  // max gap <= epsilon
    bool strict = false;         // every non-identical deviation strictly worse
};

inline Rat max_gap(const EquilibriumCertificate& cert) {
    Rat g = cert.players.empty() ? Rat(0) : cert.players[0].gap;
    for (const auto& p : cert.players) g = std::max(g, p.gap);
    return g;
}

namespace detail {

// Memoizes exact profile evaluations across a search; keyed by profile ids.
template <class G, class M>
struct EuCache {
    const G* game;
    std::map<std::vector<std::string>, std::vector<Rat>> memo;

    const std::vector<Rat>& get(const std::vector<M>& profile) {
        std::vector<std::string> key;
        key.reserve(profile.size());
        for (const auto& m : profile) key.push_back(machine_id(m));
        auto it = memo.find(key);
        if (it == memo.end()) it = memo.emplace(std::move(key), exact_utilities(*game, profile)).first;
        return it->second;
    }
};

}  // namespace detail

template <class G, class M>
std::pair<Rat, std::string> best_response_gap(const G& g, const std::vector<M>& profile,
                                              int player, const CandidateSet<M>& candidates,
                                              detail::EuCache<G, M>* cache = nullptr) {
    validate_candidates(candidates);
    detail::EuCache<G, M> local{&g, {}};
    auto& eu = cache ? *cache : local;

    Rat base = eu.get(profile)[player];
    std::optional<Rat> best;
    std::string best_id;
    std::vector<M> work = profile;
    for (const auto& cand : candidates.machines) {
        work[player] = cand;
        Rat u = eu.get(work)[player];
        Rat gap = u - base;
        if (!best || gap > *best || (gap == *best && machine_id(cand) < best_id)) {
            best = gap;
            best_id = machine_id(cand);
        }
    }
    return {*best, best_id};
}

// Full certificate for a profile against per-player candidate sets.  The
// exact engine is mandatory here; Monte Carlo summaries are advisory only.
template <class G, class M>
EquilibriumCertificate certify_epsilon_nash(const G& g, const std::vector<M>& profile,
                                            const std::vector<CandidateSet<M>>& candidates,
                                            const Rat& epsilon,
                                            detail::EuCache<G, M>* cache = nullptr) {
    if (candidates.size() != profile.size())
        throw DefinitionError("need one candidate set per player");
    detail::EuCache<G, M> local{&g, {}};
    auto& eu = cache ? *cache : local;

    EquilibriumCertificate cert;
    cert.epsilon = epsilon;
    for (const auto& m : profile) cert.profile_ids.push_back(machine_id(m));

    bool strict = true;
    std::vector<M> work = profile;
    for (std::size_t i = 0; i < profile.size(); ++i) {
        validate_candidates(candidates[i]);
        Rat base = eu.get(profile)[i];
        std::optional<Rat> best;
        std::string best_id;
        for (const auto& cand : candidates[i].machines) {
            work[i] = cand;
            Rat gap = eu.get(work)[i] - base;
            if (machine_id(cand) != cert.profile_ids[i] && gap >= 0) strict = false;
            if (!best || gap > *best || (gap == *best && machine_id(cand) < best_id)) {
                best = gap;
                best_id = machine_id(cand);
            }
        }
        work[i] = profile[i];
        cert.players.push_back({*best, best_id, candidates[i].provenance});
    }
    cert.is_epsilon_ne = max_gap(cert) <= epsilon;
    cert.strict = strict && cert.is_epsilon_ne;
    return cert;
}

struct SearchTooLarge : DomainError {
    BigInt estimated_profiles;
    explicit SearchTooLarge(BigInt estimate)
        : DomainError("profile product too large: " + estimate.str() + " profiles"),
          estimated_profiles(std::move(estimate)) {}
};

struct SearchOptions {
    std::uint64_t max_profiles = 1u << 20;
};

// Enumerates every profile in the candidate product and returns the
// certified epsilon-NE profiles in deterministic id order.
template <class G, class M>
std::vector<EquilibriumCertificate> search_pure_nash(const G& g,
                                                     const std::vector<CandidateSet<M>>& candidates,
                                                     const Rat& epsilon,
                                                     const SearchOptions& options = {}) {
    if (candidates.empty()) throw DefinitionError("no candidate sets");
    BigInt product = 1;
    for (const auto& c : candidates) {
        validate_candidates(c);
        product *= BigInt(c.machines.size());
    }
    if (product > options.max_profiles) throw SearchTooLarge(product);

    detail::EuCache<G, M> cache{&g, {}};
    std::vector<EquilibriumCertificate> hits;
    std::vector<std::size_t> idx(candidates.size(), 0);
    while (true) {
        std::vector<M> profile;
        profile.reserve(candidates.size());
        for (std::size_t i = 0; i < candidates.size(); ++i)
            profile.push_back(candidates[i].machines[idx[i]]);
        EquilibriumCertificate cert = certify_epsilon_nash(g, profile, candidates, epsilon, &cache);
        if (cert.is_epsilon_ne) hits.push_back(std::move(cert));

        int k = (int)candidates.size() - 1;
        while (k >= 0 && ++idx[k] == candidates[k].machines.size()) idx[k--] = 0;
        if (k < 0) break;
    }
    std::sort(hits.begin(), hits.end(),
              [](const auto& a, const auto& b) { return a.profile_ids < b.profile_ids; });
    return hits;
}

// ---------------------------------------------------------------------------
// Induced normal form over deterministic base machines

struct InducedNormalForm {
    std::vector<std::vector<std::string>> action_ids;  // per player
    std::vector<std::size_t> dims;
    std::vector<std::vector<Rat>> payoffs;  // flat, last index fastest

    std::size_t flat_index(const std::vector<std::size_t>& idx) const {
        std::size_t f = 0;
        for (std::size_t i = 0; i < dims.size(); ++i) f = f * dims[i] + idx[i];
        return f;
    }
};

inline void require_deterministic(const GameDef& g, const Machine& m, int player) {
    for (const auto& tp : g.type_profiles) {
        auto leaves = enumerate_runs(m, tp[player], g.budgets);
        if (leaves.size() != 1)
            throw DefinitionError("machine '" + m.id + "' in M0 is not deterministic");
    }
}

// Entry (i1,...,im) holds the exact expected utilities of the pure machine
// profile, complexity charges included.
inline InducedNormalForm induced_normal_form(const GameDef& g,
                                             const std::vector<std::vector<Machine>>& base) {
    if ((int)base.size() != g.player_count)
        throw DefinitionError("need one machine list per player");
    InducedNormalForm nf;
    std::size_t total = 1;
    for (int i = 0; i < g.player_count; ++i) {
        if (base[i].empty()) throw DefinitionError("empty machine list in M0");
        std::vector<std::string> ids;
        for (const auto& m : base[i]) {
            require_deterministic(g, m, i);
            ids.push_back(m.id);
        }
        nf.action_ids.push_back(std::move(ids));
        nf.dims.push_back(base[i].size());
        total *= base[i].size();
    }
    nf.payoffs.resize(total);
    std::vector<std::size_t> idx(base.size(), 0);
    while (true) {
        std::vector<Machine> profile;
        for (std::size_t i = 0; i < base.size(); ++i) profile.push_back(base[i][idx[i]]);
        nf.payoffs[nf.flat_index(idx)] = expected_utility_exact(g, profile);
        int k = (int)base.size() - 1;
        while (k >= 0 && ++idx[k] == base[k].size()) idx[k--] = 0;
        if (k < 0) break;
    }
    return nf;
}

struct MatrixGame {
    std::vector<std::string> row_actions, col_actions;
    std::vector<std::vector<Rat>> a, b;  // payoffs for the row / column player
};

inline MatrixGame to_matrix_game(const InducedNormalForm& nf) {
    if (nf.dims.size() != 2) throw DefinitionError("matrix game needs exactly 2 players");
    MatrixGame mg;
    mg.row_actions = nf.action_ids[0];
    mg.col_actions = nf.action_ids[1];
    mg.a.assign(nf.dims[0], std::vector<Rat>(nf.dims[1]));
    mg.b = mg.a;
    for (std::size_t i = 0; i < nf.dims[0]; ++i)
        for (std::size_t j = 0; j < nf.dims[1]; ++j) {
            const auto& cell = nf.payoffs[nf.flat_index({i, j})];
            mg.a[i][j] = cell[0];
            mg.b[i][j] = cell[1];
        }
    return mg;
}

struct MixedProfile {
    std::vector<Rat> probs;  // nonnegative, sums to exactly 1

    bool operator==(const MixedProfile&) const = default;
};

namespace detail {

// Gaussian elimination over rationals; nullopt when singular.
inline std::optional<std::vector<Rat>> solve_linear(std::vector<std::vector<Rat>> aug) {
    std::size_t n = aug.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && aug[pivot][col] == 0) ++pivot;
        if (pivot == n) return std::nullopt;
        std::swap(aug[col], aug[pivot]);
        Rat p = aug[col][col];
        for (auto& v : aug[col]) v /= p;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || aug[r][col] == 0) continue;
            Rat f = aug[r][col];
            for (std::size_t c = 0; c <= n; ++c) aug[r][c] -= f * aug[col][c];
        }
    }
    std::vector<Rat> out(n);
    for (std::size_t r = 0; r < n; ++r) out[r] = aug[r][n];
    return out;
}

inline void subsets_of_size(std::size_t n, std::size_t k, std::vector<std::vector<std::size_t>>& out) {
    std::vector<std::size_t> cur;
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
        if (cur.size() == k) {
            out.push_back(cur);
            return;
        }
        for (std::size_t i = start; i < n; ++i) {
            cur.push_back(i);
            rec(i + 1);
            cur.pop_back();
        }
    };
    rec(0);
}

// Solves "make the opponent indifferent across their support": unknowns are
// my support probabilities plus their common payoff value.
inline std::optional<std::pair<std::vector<Rat>, Rat>> indifference_mix(
    const std::vector<std::vector<Rat>>& opp_payoff_by_mine,  // [my index][their index]
    const std::vector<std::size_t>& my_support, const std::vector<std::size_t>& their_support) {
    std::size_t k = my_support.size();
    std::size_t rows = their_support.size() + 1;
    if (rows != k + 1) return std::nullopt;
    std::vector<std::vector<Rat>> aug(rows, std::vector<Rat>(k + 2, Rat(0)));
    for (std::size_t e = 0; e < their_support.size(); ++e) {
        for (std::size_t s = 0; s < k; ++s)
            aug[e][s] = opp_payoff_by_mine[my_support[s]][their_support[e]];
        aug[e][k] = -1;  // minus the common value v
        aug[e][k + 1] = 0;
    }
    for (std::size_t s = 0; s < k; ++s) aug[k][s] = 1;
    aug[k][k + 1] = 1;
    auto sol = solve_linear(std::move(aug));
    if (!sol) return std::nullopt;
    std::vector<Rat> probs(sol->begin(), sol->begin() + k);
    return std::make_pair(std::move(probs), (*sol)[k]);
}

}  // namespace detail

// All rational Nash equilibria found on equal-size supports, by solving the
// exact linear indifference systems and filtering with best-response checks.
// An empty result means no rational NE exists on the enumerated supports.
inline std::vector<std::pair<MixedProfile, MixedProfile>> solve_2p_support_enumeration(
    const MatrixGame& mg) {
    std::size_t n1 = mg.a.size();
    std::size_t n2 = n1 ? mg.a[0].size() : 0;
    if (n1 == 0 || n2 == 0) throw DefinitionError("empty matrix game");

    // a transposed: row player's payoff indexed [col][row], for the system
    // where the column player's mix makes the row player indifferent
    std::vector<std::vector<Rat>> at(n2, std::vector<Rat>(n1));
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j) at[j][i] = mg.a[i][j];

    std::vector<std::pair<MixedProfile, MixedProfile>> found;
    for (std::size_t k = 1; k <= std::min(n1, n2); ++k) {
        std::vector<std::vector<std::size_t>> sup1, sup2;
        detail::subsets_of_size(n1, k, sup1);
        detail::subsets_of_size(n2, k, sup2);
        for (const auto& s1 : sup1)
            for (const auto& s2 : sup2) {
                // x on s1 makes the column player indifferent across s2;
                // y on s2 makes the row player indifferent across s1.
                auto xv = detail::indifference_mix(mg.b, s1, s2);
                auto yv = detail::indifference_mix(at, s2, s1);
                if (!xv || !yv) continue;
                auto& [xs, v2] = *xv;
                auto& [ys, v1] = *yv;
                bool ok = true;
                for (const auto& p : xs) ok &= p >= 0;
                for (const auto& p : ys) ok &= p >= 0;
                if (!ok) continue;

                MixedProfile x{std::vector<Rat>(n1, Rat(0))};
                MixedProfile y{std::vector<Rat>(n2, Rat(0))};
                for (std::size_t s = 0; s < k; ++s) {
                    x.probs[s1[s]] = xs[s];
                    y.probs[s2[s]] = ys[s];
                }
                // best-response filter: no pure action beats the support value
                for (std::size_t i = 0; i < n1 && ok; ++i) {
                    Rat u = 0;
                    for (std::size_t j = 0; j < n2; ++j) u += mg.a[i][j] * y.probs[j];
                    ok &= u <= v1;
                }
                for (std::size_t j = 0; j < n2 && ok; ++j) {
                    Rat u = 0;
                    for (std::size_t i = 0; i < n1; ++i) u += mg.b[i][j] * x.probs[i];
                    ok &= u <= v2;
                }
                if (!ok) continue;
                if (std::find(found.begin(), found.end(), std::make_pair(x, y)) == found.end())
                    found.push_back({std::move(x), std::move(y)});
            }
    }
    return found;
}

// Exact best-response gaps of a mixed profile in a matrix game.
inline std::pair<Rat, Rat> matrix_gaps(const MatrixGame& mg, const MixedProfile& x,
                                       const MixedProfile& y) {
    std::size_t n1 = mg.a.size(), n2 = mg.a[0].size();
    Rat value1 = 0, value2 = 0;
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j) {
            value1 += x.probs[i] * y.probs[j] * mg.a[i][j];
            value2 += x.probs[i] * y.probs[j] * mg.b[i][j];
        }
    Rat best1 = value1, best2 = value2;
    for (std::size_t i = 0; i < n1; ++i) {
        Rat u = 0;
        for (std::size_t j = 0; j < n2; ++j) u += mg.a[i][j] * y.probs[j];
        best1 = std::max(best1, u);
    }
    for (std::size_t j = 0; j < n2; ++j) {
        Rat u = 0;
        for (std::size_t i = 0; i < n1; ++i) u += mg.b[i][j] * x.probs[i];
        best2 = std::max(best2, u);
    }
    return {best1 - value1, best2 - value2};
}

// Uniform mixtures over action multisets of bounded size, in deterministic
// order; returns the first pair whose exact gaps are within epsilon.
inline std::optional<std::pair<MixedProfile, MixedProfile>> lmm_small_support_search(
    const MatrixGame& mg, const Rat& epsilon, std::size_t max_support) {
    if (epsilon <= 0) throw DomainError("epsilon must be positive");
    std::size_t n1 = mg.a.size(), n2 = mg.a[0].size();

    auto multisets = [](std::size_t n, std::size_t size) {
        std::vector<std::vector<std::size_t>> out;
        std::vector<std::size_t> cur;
        std::function<void(std::size_t)> rec = [&](std::size_t start) {
            if (cur.size() == size) {
                out.push_back(cur);
                return;
            }
            for (std::size_t i = start; i < n; ++i) {
                cur.push_back(i);
                rec(i);
                cur.pop_back();
            }
        };
        rec(0);
        return out;
    };
    auto uniform_over = [](const std::vector<std::size_t>& multiset, std::size_t n) {
        MixedProfile p{std::vector<Rat>(n, Rat(0))};
        for (auto i : multiset) p.probs[i] += Rat(1, (unsigned)multiset.size());
        return p;
    };

    for (std::size_t total = 2; total <= 2 * max_support; ++total)
        for (std::size_t k1 = 1; k1 < total; ++k1) {
            std::size_t k2 = total - k1;
            if (k1 > max_support || k2 > max_support) continue;
            for (const auto& m1 : multisets(n1, k1))
                for (const auto& m2 : multisets(n2, k2)) {
                    MixedProfile x = uniform_over(m1, n1);
                    MixedProfile y = uniform_over(m2, n2);
                    auto [g1, g2] = matrix_gaps(mg, x, y);
                    if (g1 <= epsilon && g2 <= epsilon) return std::make_pair(x, y);
                }
        }
    return std::nullopt;
}

}  // namespace bmg
