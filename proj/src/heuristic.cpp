#include "steer/heuristic.hpp"

namespace steer {

int find_rat(const EnvConfig& c, RatKind kind) {
  for (const auto& r : c.rats)
    if (r.kind == kind) return r.id;
  return -1;
}

Action heuristic_action(const Environment& env, const ActionMask& legal) {
  const EnvConfig& c = env.config();
  const int nr = find_rat(c, RatKind::Nr);
  const int lte = find_rat(c, RatKind::Lte);

  bool any_idle = false;
  for (int r = 0; r < env.n_rats(); ++r) any_idle = any_idle || env.rat_idle(r);
  if (!any_idle) return Action::no_op();

  auto allowed = [&](int slot, int rat) {
    return rat >= 0 && legal[action_index(c, Action::schedule(slot, rat))] != 0;
  };
  for (int s = 0; s < c.buffer_size; ++s)
    if (allowed(s, nr)) return Action::schedule(s, nr);
  for (int s = 0; s < c.buffer_size; ++s)
    if (allowed(s, lte)) return Action::schedule(s, lte);
  return Action::no_op();
}

}  // namespace steer
