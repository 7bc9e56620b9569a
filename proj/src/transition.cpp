#include "symnet/transition.hpp"

#include <cmath>

#include "symnet/errors.hpp"

namespace symnet {

std::pair<int, int> mode_counter_step(int p, int l, int u, int dwell, int n_modes) {
  if (u < 0 || u >= n_modes) throw InputError("external input mode out of range");
  if (p < 0 || p >= n_modes) throw InputError("mode out of range");
  if (l < 0 || l > dwell - 1) throw InputError("dwell counter out of range");
  if (l < dwell - 1) {
    if (u != p)
      throw InputError("dwell-time violation: switch requested before counter expiry");
    return {p, l + 1};
  }
  if (u == p) return {p, dwell - 1};
  return {u, 0};
}

AugState successor_concrete(const SwitchedSubsystem& sub, const AugState& s, int u,
                            const Vec& w) {
  if (!sub.state_set.contains(s.x, 1e-9))
    throw InputError("state outside the state set");
  if (sub.wdim() > 0 && !sub.internal_input_set.contains(w, 1e-9))
    throw InputError("internal input outside its set");
  const auto [pn, ln] = mode_counter_step(s.p, s.l, u, sub.dwell, sub.n_modes());
  AugState next;
  next.x = step(sub, s.p, s.x, w);
  next.p = pn;
  next.l = ln;
  return next;
}

Run generate_run(const SwitchedSubsystem& sub, const Vec& x0,
                 const std::vector<int>& mode_seq, const std::vector<Vec>& w_seq,
                 int horizon) {
  if (horizon < 0) throw ParamError("horizon must be nonnegative");
  if (mode_seq.size() < static_cast<std::size_t>(horizon) + 1)
    throw InputError("mode sequence shorter than horizon+1");
  if (w_seq.size() < static_cast<std::size_t>(horizon))
    throw InputError("internal input sequence shorter than horizon");
  if (!validate_switching_signal(
          std::vector<int>(mode_seq.begin(),
                           mode_seq.begin() + static_cast<std::ptrdiff_t>(horizon) + 1),
          sub.dwell))
    throw InputError("mode sequence violates the dwell time");

  Run run;
  run.states.reserve(static_cast<std::size_t>(horizon) + 1);
  run.outputs.reserve(static_cast<std::size_t>(horizon) + 1);
  AugState s{x0, mode_seq.front(), 0};
  run.states.push_back(s);
  run.outputs.push_back(output1(sub, s.x));
  for (int t = 0; t < horizon; ++t) {
    const int u = mode_seq[static_cast<std::size_t>(t) + 1];
    s = successor_concrete(sub, s, u, w_seq[static_cast<std::size_t>(t)]);
    run.states.push_back(s);
    run.outputs.push_back(output1(sub, s.x));
  }
  return run;
}

bool check_run_equivalence(const SwitchedSubsystem& sub, const Vec& x0,
                           const std::vector<int>& mode_seq,
                           const std::vector<Vec>& w_seq, int horizon,
                           double* max_dev) {
  const Run run = generate_run(sub, x0, mode_seq, w_seq, horizon);

  /* raw switched recursion: no counters, just x(t+1) = f_{p(t)}(x(t), w(t)) */
  double dev = 0.0;
  bool equal = true;
  Vec x = x0;
  for (int t = 0; t <= horizon; ++t) {
    const Vec y = output1(sub, x);
    const Vec& yr = run.outputs[static_cast<std::size_t>(t)];
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] != yr[i]) equal = false;
      dev = std::max(dev, std::abs(y[i] - yr[i]));
    }
    if (run.states[static_cast<std::size_t>(t)].p != mode_seq[static_cast<std::size_t>(t)])
      equal = false;
    if (t < horizon)
      x = step(sub, mode_seq[static_cast<std::size_t>(t)], x,
               w_seq[static_cast<std::size_t>(t)]);
  }
  if (max_dev) *max_dev = dev;
  return equal;
}

}  // namespace symnet
