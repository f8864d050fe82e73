// Game definitions: players, a finite joint type space with exact rational
// prior (the last slot of each profile is nature's type), per-player
// complexity models and utility expressions, and explicit run budgets.
#pragma once

#include "bmg/expr.hpp"
#include "bmg/machine.hpp"
#include "bmg/rational.hpp"

#include <string>
#include <vector>

namespace bmg {

using TypeProfile = std::vector<std::string>;  // m player types + nature's type

struct GameDef {
    int player_count = 1;
    std::vector<TypeProfile> type_profiles;
    std::vector<Rat> prior;          // parallel to type_profiles, sums to exactly 1
    std::vector<Expr> complexity;    // per player, over the run-metric variables
    std::vector<Expr> utility;       // per player, over t/a/c variables and tn
    Budgets budgets;
};

inline void validate_game(const GameDef& g) {
    if (g.player_count < 1) throw DefinitionError("game: playerCount must be >= 1");
    if (g.type_profiles.empty()) throw DefinitionError("game: no type profiles");
    if (g.prior.size() != g.type_profiles.size())
        throw DefinitionError("game: prior/type profile size mismatch");
    for (const auto& tp : g.type_profiles)
        if ((int)tp.size() != g.player_count + 1)
            throw DefinitionError("game: type profile must list m player types plus nature's");
    Rat total = 0;
    for (const auto& p : g.prior) {
        if (p < 0) throw DefinitionError("game: negative prior probability");
        total += p;
    }
    if (total != 1) throw DefinitionError("game: prior sums to " + rat_str(total) + ", not 1");
    if ((int)g.complexity.size() != g.player_count)
        throw DefinitionError("game: need one complexity model per player");
    if ((int)g.utility.size() != g.player_count)
        throw DefinitionError("game: need one utility expression per player");
    if (g.budgets.steps == 0 || g.budgets.coins == 0)
        throw DefinitionError("game: budgets must be positive");
}

// Marginal prior probability that player `player` has type `type`.
inline Rat marginal_prior(const GameDef& g, int player, const std::string& type) {
    Rat total = 0;
    for (std::size_t j = 0; j < g.type_profiles.size(); ++j)
        if (g.type_profiles[j][player] == type) total += g.prior[j];
    return total;
}

}  // namespace bmg
