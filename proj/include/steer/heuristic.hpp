#pragma once

#include "steer/mdp.hpp"

namespace steer {

/// Rule-based baseline: serve the first buffered job whose owner is inside NR
/// coverage over NR, otherwise the first job LTE can serve, otherwise NoOp.
/// Deadlines and the NR/LTE rate crossover are deliberately ignored.
Action heuristic_action(const Environment& env, const ActionMask& legal);

/// Index of the first RAT of the given kind, or -1.
int find_rat(const EnvConfig& c, RatKind kind);

}  // namespace steer
