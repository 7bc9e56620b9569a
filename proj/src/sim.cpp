#include "symnet/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "symnet/errors.hpp"
#include "symnet/rng.hpp"
#include "symnet/transition.hpp"

namespace symnet {

Policy parse_policy(const std::string& name) {
  if (name == "lex") return Policy::Lex;
  if (name == "random") return Policy::Random;
  if (name == "fair") return Policy::Fair;
  throw ParamError("unknown policy '" + name + "' (expected lex, random, or fair)");
}

namespace {

std::vector<int> mask_modes(std::uint64_t mask) {
  std::vector<int> out;
  for (int u = 0; u < 64; ++u)
    if (mask & (1ull << u)) out.push_back(u);
  return out;
}

/* lowest admissible mode */
int pick_lex(std::uint64_t mask) { return std::countr_zero(mask); }

/* uniform among admissible modes, one decorrelated stream per decision */
int pick_random(std::uint64_t mask, std::uint64_t seed, std::uint64_t decision) {
  const std::vector<int> modes = mask_modes(mask);
  Rng r(seed, decision);
  return modes[r.below(modes.size())];
}

/* admissible mode whose last activation lies farthest in the past */
int pick_fair(std::uint64_t mask, const std::vector<std::int64_t>& last_active) {
  int best = -1;
  std::int64_t best_t = 0;
  for (int u = 0; u < 64; ++u) {
    if (!(mask & (1ull << u))) continue;
    const std::int64_t t = last_active[static_cast<std::size_t>(u)];
    if (best < 0 || t < best_t) {
      best = u;
      best_t = t;
    }
  }
  return best;
}

}  // namespace

ClosedLoopLog simulate_closed_loop(const NetworkSpec& net,
                                   const std::vector<const Controller*>& ctrls,
                                   const std::vector<Vec>& x0,
                                   const SimOptions& opt) {
  validate_network(net);
  const std::size_t n = net.subs.size();
  if (ctrls.size() != n || x0.size() != n)
    throw NetworkError("controller or state arity mismatch");
  if (opt.horizon < 0) throw ParamError("horizon must be nonnegative");
  if (!opt.initial_modes.empty() && opt.initial_modes.size() != n)
    throw ParamError("initial mode arity mismatch");
  if (!opt.safe.boxes.empty()) validate_box_union(opt.safe);

  NetState s;
  s.x = x0;
  s.p.resize(n);
  s.l.assign(n, 0);
  std::vector<int> fair(n, 0);
  std::vector<std::vector<std::int64_t>> last_active(n);

  for (std::size_t i = 0; i < n; ++i) {
    const Controller& c = *ctrls[i];
    if (c.dim != net.subs[i].dim() || c.m != net.subs[i].n_modes() ||
        c.dwell != net.subs[i].dwell)
      throw InputError("controller shape does not match subsystem " +
                       std::to_string(i));
    if (!opt.initial_modes.empty()) {
      s.p[i] = opt.initial_modes[i];
      if (s.p[i] < 0 || s.p[i] >= c.m) throw ParamError("initial mode out of range");
      fair[i] = fairness_initial(s.p[i], c.red_mode, c.fairness_limit);
      refine_moves(c, s.x[i], s.p[i], 0, fair[i]);  /* domain check */
    } else {
      bool found = false;
      for (int p = 0; p < c.m && !found; ++p) {
        const int fc = fairness_initial(p, c.red_mode, c.fairness_limit);
        const IVec k = nearest_cell(s.x[i], c.eta);
        const auto si = c.index_of(k);
        if (si && c.mask(*si, p, 0, fc) != 0) {
          s.p[i] = p;
          fair[i] = fc;
          found = true;
        }
      }
      if (!found)
        throw RefinementError("no initial mode admits the starting state of "
                              "subsystem " +
                              std::to_string(i));
    }
    last_active[i].assign(64, -1);
    last_active[i][static_cast<std::size_t>(s.p[i])] = 0;
  }

  ClosedLoopLog log;
  const auto record_state = [&](const NetState& st, const std::vector<int>& fc) {
    log.states.push_back(st);
    log.fair.push_back(fc);
    bool ok = true;
    if (!opt.safe.boxes.empty()) {
      for (std::size_t i = 0; i < n; ++i)
        if (!opt.safe.contains(output1(net.subs[i], st.x[i]), 1e-9)) ok = false;
    }
    log.safe_ok.push_back(ok ? 1 : 0);
    if (!ok) log.all_safe = false;
  };

  record_state(s, fair);
  for (int t = 0; t < opt.horizon; ++t) {
    std::vector<Vec> y2s(n);
    for (std::size_t i = 0; i < n; ++i) y2s[i] = output2(net.subs[i], s.x[i]);

    std::vector<int> u(n);
    std::vector<Vec> ws(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Controller& c = *ctrls[i];
      const std::uint64_t mask = refine_moves(c, s.x[i], s.p[i], s.l[i], fair[i]);
      switch (opt.policy) {
        case Policy::Lex:
          u[i] = pick_lex(mask);
          break;
        case Policy::Random:
          u[i] = pick_random(mask, opt.seed,
                             static_cast<std::uint64_t>(t) * n + i);
          break;
        case Policy::Fair:
          u[i] = pick_fair(mask, last_active[i]);
          break;
      }
      ws[i] = internal_input_block(net, static_cast<int>(i), y2s);
    }

    s = network_step(net, s, u);
    for (std::size_t i = 0; i < n; ++i) {
      fair[i] = fairness_next(fair[i], s.p[i], ctrls[i]->red_mode,
                              ctrls[i]->fairness_limit);
      last_active[i][static_cast<std::size_t>(s.p[i])] = t + 1;
    }
    log.chosen.push_back(std::move(u));
    log.wlog.push_back(std::move(ws));
    record_state(s, fair);
  }
  return log;
}

void export_csv(const ClosedLoopLog& log, const NetworkSpec& net, std::ostream& out) {
  const std::size_t n = net.subs.size();
  /* stable field-grouped order: time, then all states, all modes, all
   * fairness counters (1-based labels) */
  out << "time";
  for (std::size_t i = 0; i < n; ++i)
    for (int d = 0; d < net.subs[i].dim(); ++d)
      out << ",x_" << (i + 1) << "_" << (d + 1);
  for (std::size_t i = 0; i < n; ++i) out << ",mode_" << (i + 1);
  for (std::size_t i = 0; i < n; ++i) out << ",counter_" << (i + 1);
  out << '\n';

  char buf[64];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    out << buf;
  };
  for (std::size_t t = 0; t < log.states.size(); ++t) {
    out << t;
    for (std::size_t i = 0; i < n; ++i)
      for (double v : log.states[t].x[i]) {
        out << ',';
        num(v);
      }
    for (std::size_t i = 0; i < n; ++i) out << ',' << log.states[t].p[i];
    for (std::size_t i = 0; i < n; ++i) out << ',' << log.fair[t][i];
    out << '\n';
  }
}

MismatchRun paired_run(const SwitchedSubsystem& sub, const SymbolicModel& model,
                       const Vec& x0, const std::vector<int>& mode_seq,
                       const std::vector<Vec>& w_seq, double bound, double tol) {
  validate_subsystem(sub);
  const int horizon = static_cast<int>(w_seq.size());
  if (mode_seq.size() < static_cast<std::size_t>(horizon) + 1)
    throw InputError("mode sequence shorter than horizon+1");
  if (!validate_switching_signal(
          std::vector<int>(mode_seq.begin(), mode_seq.begin() + horizon + 1),
          sub.dwell))
    throw InputError("mode sequence violates the dwell time");

  const auto snap_w = [&](const Vec& w) -> std::size_t {
    std::size_t best = 0;
    double best_d = HUGE_VAL;
    for (std::size_t wi = 0; wi < model.nw(); ++wi) {
      const double d = sup_norm(vec_sub(w, model.wpoints[wi]));
      if (d < best_d) {
        best_d = d;
        best = wi;
      }
    }
    return best;
  };

  const auto s0 = model.index_of(nearest_cell(x0, model.eta));
  if (!s0) throw RefinementError("initial state has no related grid cell");

  MismatchRun run;
  Vec x = x0;
  std::size_t s = *s0;
  const auto gap = [&](const Vec& xc, std::size_t sc) {
    return sup_norm(vec_sub(output1(sub, xc), model.out1(sc)));
  };
  run.mismatch.push_back(gap(x, s));

  for (int t = 0; t < horizon; ++t) {
    const int p = mode_seq[static_cast<std::size_t>(t)];
    const Vec& w = w_seq[static_cast<std::size_t>(t)];
    const Vec xn = step(sub, p, x, w);
    if (!sub.state_set.contains(xn, 1e-9))
      throw InputError("concrete trajectory left the state set");

    const std::size_t wi = snap_w(w);
    const auto span = model.successors(s, p, wi);
    if (span.empty())
      throw RefinementError("abstraction blocks while the concrete system moves");
    std::uint32_t best = span.front();
    double best_d = HUGE_VAL;
    for (std::uint32_t cand : span) {
      const double d = sup_norm(vec_sub(xn, model.point(cand)));
      if (d < best_d) {
        best_d = d;
        best = cand;
      }
    }
    x = xn;
    s = best;
    run.mismatch.push_back(gap(x, s));
  }

  for (double d : run.mismatch) run.max_mismatch = std::max(run.max_mismatch, d);
  run.within = run.max_mismatch <= bound + tol;
  return run;
}

RelatednessReport check_relatedness(const NetworkSpec& net,
                                    const std::vector<AugStorageFn>& fns,
                                    const std::vector<Vec>& x,
                                    const std::vector<Vec>& xhat,
                                    const std::vector<int>& l, double phi) {
  const std::size_t n = net.subs.size();
  if (fns.size() != n || x.size() != n || xhat.size() != n || l.size() != n)
    throw NetworkError("relatedness query arity mismatch");
  RelatednessReport rep;
  rep.phi = phi;
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = net.mu_weights.empty() ? 1.0 : net.mu_weights[i];
    rep.value += mu * fns[i].value(x[i], xhat[i], l[i]);
  }
  rep.related = rep.value <= phi;
  return rep;
}

}  // namespace symnet
