/* transition.hpp
 *
 * Concrete transition-system view of a switched subsystem: states are
 * augmented with the active mode and a dwell counter, and the external
 * input chooses the next mode once the counter has expired.  The induced
 * runs reproduce the raw switched recursion exactly (same floating-point
 * operations in the same order), which check_run_equivalence verifies.
 */
#pragma once

#include <vector>

#include "symnet/system.hpp"

namespace symnet {

/* augmented state (x, p, l): continuous state, active mode, dwell counter */
struct AugState {
  Vec x;
  int p = 0;
  int l = 0;
};

/* counter/mode update shared by the concrete and symbolic semantics:
 *   l <  dwell-1            -> next mode = p (u must equal p), l+1
 *   l == dwell-1 and u == p -> stay, counter saturates at dwell-1
 *   l == dwell-1 and u != p -> switch to u, counter resets to 0
 * returns {next mode, next counter}; throws on premature switch requests */
std::pair<int, int> mode_counter_step(int p, int l, int u, int dwell, int n_modes);

/* one transition under external input u (next mode request) and internal
 * input w; x must lie in the state set, w in the internal input set */
AugState successor_concrete(const SwitchedSubsystem& sub, const AugState& s, int u,
                            const Vec& w);

struct Run {
  std::vector<AugState> states;  // horizon+1 entries
  std::vector<Vec> outputs;      // external outputs y1, horizon+1 entries
};

/* drive the transition system for `horizon` steps along an admissible mode
 * sequence (active mode per time instant, needs horizon+1 entries) and an
 * internal input sequence (horizon entries) */
Run generate_run(const SwitchedSubsystem& sub, const Vec& x0,
                 const std::vector<int>& mode_seq, const std::vector<Vec>& w_seq,
                 int horizon);

/* replay the same data through the raw switched recursion and compare output
 * runs element-wise for exact equality; max_dev receives the largest observed
 * absolute deviation (0 when equivalent) */
bool check_run_equivalence(const SwitchedSubsystem& sub, const Vec& x0,
                           const std::vector<int>& mode_seq,
                           const std::vector<Vec>& w_seq, int horizon,
                           double* max_dev = nullptr);

}  // namespace symnet
