#include "symnet/composition.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "symnet/errors.hpp"
#include "symnet/transition.hpp"

namespace symnet {

namespace {

std::vector<int> w_offsets(const NetworkSpec& net) {
  std::vector<int> off(net.subs.size() + 1, 0);
  for (std::size_t i = 0; i < net.subs.size(); ++i)
    off[i + 1] = off[i] + net.subs[i].wdim();
  return off;
}

std::vector<int> y2_offsets(const NetworkSpec& net) {
  std::vector<int> off(net.subs.size() + 1, 0);
  for (std::size_t i = 0; i < net.subs.size(); ++i)
    off[i + 1] = off[i] + net.subs[i].y2dim();
  return off;
}

double mu_weight(const NetworkSpec& net, std::size_t i) {
  return net.mu_weights.empty() ? 1.0 : net.mu_weights[i];
}

}  // namespace

int NetworkSpec::total_wdim() const {
  int s = 0;
  for (const auto& sub : subs) s += sub.wdim();
  return s;
}

int NetworkSpec::total_y2dim() const {
  int s = 0;
  for (const auto& sub : subs) s += sub.y2dim();
  return s;
}

void validate_network(const NetworkSpec& net) {
  if (net.subs.empty()) throw NetworkError("network has no subsystems");
  for (const auto& sub : net.subs) validate_subsystem(sub);
  if (net.M.rows != net.total_wdim() || net.M.cols != net.total_y2dim())
    throw NetworkError("coupling matrix shape does not match stacked channels");
  if (!net.mu_weights.empty()) {
    if (net.mu_weights.size() != net.subs.size())
      throw NetworkError("weight vector arity does not match the subsystem count");
    for (double m : net.mu_weights)
      if (!(m > 0.0)) throw NetworkError("weights must be positive");
  }

  /* well-posedness: coupling image of the stacked internal-output hulls must
   * fit inside the internal-input sets.  Hulls make this check conservative
   * for multi-box unions; every bundled system uses single boxes, where the
   * check is exact. */
  const std::vector<int> yoff = y2_offsets(net);
  Box stacked;
  stacked.lo.assign(static_cast<std::size_t>(net.total_y2dim()), 0.0);
  stacked.hi.assign(static_cast<std::size_t>(net.total_y2dim()), 0.0);
  for (std::size_t i = 0; i < net.subs.size(); ++i) {
    const BoxUnion img = linear_image(net.subs[i].C2, net.subs[i].state_set);
    for (int d = 0; d < net.subs[i].y2dim(); ++d) {
      double lo = HUGE_VAL, hi = -HUGE_VAL;
      for (const Box& b : img.boxes) {
        lo = std::min(lo, b.lo[static_cast<std::size_t>(d)]);
        hi = std::max(hi, b.hi[static_cast<std::size_t>(d)]);
      }
      stacked.lo[static_cast<std::size_t>(yoff[i] + d)] = lo;
      stacked.hi[static_cast<std::size_t>(yoff[i] + d)] = hi;
    }
  }
  BoxUnion stacked_union;
  stacked_union.boxes.push_back(stacked);
  const BoxUnion wimg = linear_image(net.M, stacked_union);
  const std::vector<int> woff = w_offsets(net);
  for (std::size_t i = 0; i < net.subs.size(); ++i) {
    if (net.subs[i].wdim() == 0) continue;
    const Box& ib = wimg.boxes.front();
    bool covered = false;
    for (const Box& wb : net.subs[i].internal_input_set.boxes) {
      bool inside = true;
      for (int d = 0; d < net.subs[i].wdim(); ++d) {
        const std::size_t g = static_cast<std::size_t>(woff[i] + d);
        if (ib.lo[g] < wb.lo[static_cast<std::size_t>(d)] - 1e-9 ||
            ib.hi[g] > wb.hi[static_cast<std::size_t>(d)] + 1e-9) {
          inside = false;
          break;
        }
      }
      if (inside) {
        covered = true;
        break;
      }
    }
    if (!covered)
      throw NetworkError("coupling image exceeds the internal input set of subsystem " +
                         std::to_string(i));
  }
}

Vec internal_input_block(const NetworkSpec& net, int i, const std::vector<Vec>& y2s) {
  if (y2s.size() != net.subs.size())
    throw NetworkError("internal output arity does not match the subsystem count");
  const std::vector<int> woff = w_offsets(net);
  const std::vector<int> yoff = y2_offsets(net);
  const int wd = net.subs[static_cast<std::size_t>(i)].wdim();
  Vec w(static_cast<std::size_t>(wd), 0.0);
  for (int r = 0; r < wd; ++r) {
    double acc = 0.0;
    const int row = woff[static_cast<std::size_t>(i)] + r;
    for (std::size_t j = 0; j < net.subs.size(); ++j) {
      const Vec& y = y2s[j];
      for (int c = 0; c < net.subs[j].y2dim(); ++c) {
        const double coeff = net.M(row, yoff[j] + c);
        if (coeff != 0.0) acc += coeff * y[static_cast<std::size_t>(c)];
      }
    }
    w[static_cast<std::size_t>(r)] = acc;
  }
  return w;
}

NetState network_step(const NetworkSpec& net, const NetState& s,
                      const std::vector<int>& u) {
  const std::size_t n = net.subs.size();
  if (s.x.size() != n || s.p.size() != n || s.l.size() != n || u.size() != n)
    throw NetworkError("network state arity mismatch");

  std::vector<Vec> y2s(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!net.subs[i].state_set.contains(s.x[i], 1e-9))
      throw InputError("subsystem state left its state set");
    y2s[i] = output2(net.subs[i], s.x[i]);
  }

  NetState next;
  next.x.resize(n);
  next.p.resize(n);
  next.l.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec w = internal_input_block(net, static_cast<int>(i), y2s);
    if (net.subs[i].wdim() > 0 && !net.subs[i].internal_input_set.contains(w, 1e-9))
      throw NetworkError("coupling produced an internal input outside its set");
    const auto [pn, ln] = mode_counter_step(s.p[i], s.l[i], u[i], net.subs[i].dwell,
                                            net.subs[i].n_modes());
    next.x[i] = step(net.subs[i], s.p[i], s.x[i], w);
    next.p[i] = pn;
    next.l[i] = ln;
  }
  return next;
}

NetRun network_run(const NetworkSpec& net, const std::vector<Vec>& x0,
                   const std::vector<std::vector<int>>& mode_seqs, int horizon) {
  const std::size_t n = net.subs.size();
  if (x0.size() != n || mode_seqs.size() != n)
    throw NetworkError("initial data arity mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (mode_seqs[i].size() < static_cast<std::size_t>(horizon) + 1)
      throw InputError("mode sequence shorter than horizon+1");
    if (!validate_switching_signal(
            std::vector<int>(mode_seqs[i].begin(),
                             mode_seqs[i].begin() + horizon + 1),
            net.subs[i].dwell))
      throw InputError("mode sequence violates the dwell time");
  }

  NetRun run;
  NetState s;
  s.x = x0;
  s.p.resize(n);
  s.l.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) s.p[i] = mode_seqs[i].front();

  const auto stacked_y1 = [&](const NetState& st) {
    Vec y;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec yi = output1(net.subs[i], st.x[i]);
      y.insert(y.end(), yi.begin(), yi.end());
    }
    return y;
  };

  run.states.push_back(s);
  run.outputs.push_back(stacked_y1(s));
  for (int t = 0; t < horizon; ++t) {
    std::vector<int> u(n);
    for (std::size_t i = 0; i < n; ++i)
      u[i] = mode_seqs[i][static_cast<std::size_t>(t) + 1];
    s = network_step(net, s, u);
    run.states.push_back(s);
    run.outputs.push_back(stacked_y1(s));
  }
  return run;
}

SymMatrix assemble_Rdelta(const NetworkSpec& net, const std::vector<SymMatrix>& R) {
  const std::size_t n = net.subs.size();
  if (R.size() != n) throw NetworkError("supply matrix arity mismatch");
  const std::vector<int> woff = w_offsets(net);
  const std::vector<int> yoff = y2_offsets(net);
  const int q1 = net.total_wdim();
  const int q2 = net.total_y2dim();
  Mat full(q1 + q2, q1 + q2, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int wd = net.subs[i].wdim();
    const int yd = net.subs[i].y2dim();
    if (R[i].n != wd + yd)
      throw NetworkError("supply matrix blocks do not match subsystem channels");
    const double mu = mu_weight(net, i);
    for (int a = 0; a < wd; ++a)
      for (int b = 0; b < wd; ++b)
        full(woff[i] + a, woff[i] + b) = mu * R[i](a, b);
    for (int a = 0; a < wd; ++a)
      for (int b = 0; b < yd; ++b) {
        full(woff[i] + a, q1 + yoff[i] + b) = mu * R[i](a, wd + b);
        full(q1 + yoff[i] + b, woff[i] + a) = mu * R[i](wd + b, a);
      }
    for (int a = 0; a < yd; ++a)
      for (int b = 0; b < yd; ++b)
        full(q1 + yoff[i] + a, q1 + yoff[i] + b) = mu * R[i](wd + a, wd + b);
  }
  return SymMatrix(full);
}

LmiReport check_composition_lmi(const NetworkSpec& net,
                                const std::vector<SymMatrix>& R, double tol) {
  const SymMatrix rd = assemble_Rdelta(net, R);
  const int q1 = net.total_wdim();
  const int q2 = net.total_y2dim();
  Mat j(q1 + q2, q2, 0.0);
  for (int r = 0; r < q1; ++r)
    for (int c = 0; c < q2; ++c) j(r, c) = net.M(r, c);
  for (int c = 0; c < q2; ++c) j(q1 + c, c) = 1.0;
  const SymMatrix g(j.transposed() * rd.dense() * j);
  const Vec ev = sym_eigvals(g);
  LmiReport rep;
  rep.margin = ev.empty() ? 0.0 : ev.back();
  rep.ok = rep.margin <= tol;
  return rep;
}

/* ---- coupling-induced internal input sets ------------------------------- */

namespace {

/* deduplicated internal-output values of one model, lexicographically sorted */
std::vector<Vec> y2_values(const SymbolicModel& mod) {
  std::set<Vec> uniq;
  for (std::size_t s = 0; s < mod.n_states(); ++s) uniq.insert(mod.out2(s));
  return {uniq.begin(), uniq.end()};
}

/* does output block j feed input block i? */
bool feeds(const NetworkSpec& net, int i, int j, const std::vector<int>& woff,
           const std::vector<int>& yoff) {
  for (int r = 0; r < net.subs[static_cast<std::size_t>(i)].wdim(); ++r)
    for (int c = 0; c < net.subs[static_cast<std::size_t>(j)].y2dim(); ++c)
      if (net.M(woff[static_cast<std::size_t>(i)] + r,
                yoff[static_cast<std::size_t>(j)] + c) != 0.0)
        return true;
  return false;
}

}  // namespace

namespace {

std::vector<std::vector<Vec>> coupling_w_points_core(
    const NetworkSpec& net, const std::vector<std::vector<Vec>>& values,
    std::uint64_t guard) {
  const std::size_t n = net.subs.size();
  const std::vector<int> woff = w_offsets(net);
  const std::vector<int> yoff = y2_offsets(net);

  for (std::size_t j = 0; j < n; ++j)
    if (values[j].empty())
      throw NetworkError("subsystem " + std::to_string(j) + " has no output values");

  std::vector<std::vector<Vec>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int wd = net.subs[i].wdim();
    if (wd == 0) {
      out[i] = {Vec{}};
      continue;
    }
    /* w_i is a sum of per-block contributions, so its value set is the
     * Minkowski sum of the per-block images; folding one feeding block at a
     * time and deduplicating after each stage keeps the candidate count near
     * the final set size instead of the full product of block set sizes.
     * Contributions are accumulated in the same block/column order as
     * internal_input_block, so the floating-point results are identical. */
    std::uint64_t work = 0;
    std::vector<Vec> partial{Vec(static_cast<std::size_t>(wd), 0.0)};
    for (std::size_t j = 0; j < n; ++j) {
      if (!feeds(net, static_cast<int>(i), static_cast<int>(j), woff, yoff)) continue;
      work += static_cast<std::uint64_t>(partial.size()) * values[j].size();
      if (work > guard)
        throw NetworkError("coupling image enumeration exceeds the guard");
      std::set<Vec> uniq;
      for (const Vec& base : partial) {
        for (const Vec& y : values[j]) {
          Vec cand = base;
          for (int r = 0; r < wd; ++r) {
            double acc = cand[static_cast<std::size_t>(r)];
            const int row = woff[i] + r;
            for (int c = 0; c < net.subs[j].y2dim(); ++c) {
              const double coeff = net.M(row, yoff[j] + c);
              if (coeff != 0.0) acc += coeff * y[static_cast<std::size_t>(c)];
            }
            cand[static_cast<std::size_t>(r)] = acc;
          }
          uniq.insert(std::move(cand));
        }
      }
      partial.assign(uniq.begin(), uniq.end());
    }
    out[i] = std::move(partial);
  }
  return out;
}

}  // namespace

std::vector<std::vector<Vec>> coupling_w_points(
    const NetworkSpec& net, const std::vector<const SymbolicModel*>& models,
    std::uint64_t guard) {
  const std::size_t n = net.subs.size();
  if (models.size() != n) throw NetworkError("model arity mismatch");
  std::vector<std::vector<Vec>> values(n);
  for (std::size_t j = 0; j < n; ++j) values[j] = y2_values(*models[j]);
  return coupling_w_points_core(net, values, guard);
}

std::vector<std::vector<Vec>> coupling_w_points_from_grids(
    const NetworkSpec& net, const std::vector<std::vector<IVec>>& grids, double eta,
    std::uint64_t guard) {
  const std::size_t n = net.subs.size();
  if (grids.size() != n) throw NetworkError("grid arity mismatch");
  std::vector<std::vector<Vec>> values(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::set<Vec> uniq;
    for (const IVec& k : grids[j]) uniq.insert(net.subs[j].C2 * grid_point(k, eta));
    values[j].assign(uniq.begin(), uniq.end());
  }
  return coupling_w_points_core(net, values, guard);
}

MatchReport check_internal_input_match(const NetworkSpec& net,
                                       const std::vector<const SymbolicModel*>& models) {
  MatchReport rep;
  const std::vector<std::vector<Vec>> img = coupling_w_points(net, models);
  const std::vector<int> woff = w_offsets(net);
  const std::vector<int> yoff = y2_offsets(net);

  rep.blocks_ok = true;
  rep.inclusion_ok = true;
  for (std::size_t i = 0; i < net.subs.size(); ++i) {
    std::vector<Vec> have = models[i]->wpoints;
    std::sort(have.begin(), have.end());
    if (have != img[i]) {
      rep.blocks_ok = false;
      rep.inclusion_ok = std::includes(have.begin(), have.end(),
                                       img[i].begin(), img[i].end());
      /* name one point of the symmetric difference as a counterexample */
      std::vector<Vec> diff;
      std::set_symmetric_difference(have.begin(), have.end(), img[i].begin(),
                                    img[i].end(), std::back_inserter(diff));
      std::string pt = "(";
      if (!diff.empty())
        for (std::size_t d = 0; d < diff.front().size(); ++d)
          pt += (d ? "," : "") + std::to_string(diff.front()[d]);
      pt += ")";
      rep.reason = "abstraction input set of subsystem " + std::to_string(i) +
                   " differs from the coupling image (" + std::to_string(have.size()) +
                   " vs " + std::to_string(img[i].size()) +
                   " points, e.g. " + pt + ")";
      rep.ok = false;
      return rep;
    }
  }

  /* product structure: an output block with more than one value may feed at
   * most one input block, otherwise the stacked image is not a product set */
  rep.product_ok = true;
  std::vector<std::vector<Vec>> values(net.subs.size());
  for (std::size_t j = 0; j < net.subs.size(); ++j) values[j] = y2_values(*models[j]);
  for (std::size_t j = 0; j < net.subs.size(); ++j) {
    if (values[j].size() <= 1) continue;
    int consumers = 0;
    for (std::size_t i = 0; i < net.subs.size(); ++i)
      if (feeds(net, static_cast<int>(i), static_cast<int>(j), woff, yoff)) ++consumers;
    if (consumers > 1) {
      rep.product_ok = false;
      rep.reason = "output block " + std::to_string(j) +
                   " feeds several input blocks: the coupling image is not a "
                   "product set";
      rep.ok = false;
      return rep;
    }
  }
  rep.ok = true;
  return rep;
}

AltSimFn compose_alt_sim(const NetworkSpec& net, const std::vector<AugStorageFn>& fns) {
  const std::size_t n = net.subs.size();
  if (fns.size() != n) throw NetworkError("storage function arity mismatch");
  AltSimFn out;
  double c = 0.0;
  out.sigma_tilde = 0.0;
  out.eps_tilde = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(fns[i].alpha.exp - 2.0) > 1e-12)
      throw CertificateError(
          "network composition of lower gains needs quadratic gains");
    if (fns[i].alpha.coeff <= 0.0)
      throw CertificateError("lower gains must have positive coefficients");
    const double mu = mu_weight(net, i);
    c += 1.0 / (mu * fns[i].alpha.coeff);
    out.sigma_tilde = std::max(out.sigma_tilde, fns[i].sigma);
    out.eps_tilde += mu * fns[i].eps_offset;
  }
  out.alpha_tilde = PowerK{1.0 / c, 2.0};
  return out;
}

RelationBound error_bound(const AltSimFn& fn, double psi) {
  if (psi <= 0.0 || psi >= 1.0) throw ParamError("psi must lie in (0, 1)");
  if (fn.sigma_tilde <= 0.0 || fn.sigma_tilde >= 1.0)
    throw CertificateError("network decay rate must lie in (0, 1)");
  if (fn.eps_tilde < 0.0) throw CertificateError("offset must be nonnegative");
  RelationBound b;
  b.psi = psi;
  b.phi = fn.eps_tilde / ((1.0 - fn.sigma_tilde) * psi);
  b.rho = 1.0 - (1.0 - psi) * (1.0 - fn.sigma_tilde);
  b.eps_hat = fn.alpha_tilde.inverse()(b.phi);
  return b;
}

/* ---- lazy symbolic network ---------------------------------------------- */

bool NetworkModel::State::operator<(const State& o) const {
  if (s != o.s) return s < o.s;
  if (p != o.p) return p < o.p;
  return l < o.l;
}

std::vector<NetworkModel::State> NetworkModel::successors(
    const State& st, const std::vector<int>& u) const {
  const std::size_t n = models.size();
  if (st.s.size() != n || st.p.size() != n || st.l.size() != n || u.size() != n)
    throw NetworkError("network state arity mismatch");

  std::vector<Vec> y2s(n);
  for (std::size_t i = 0; i < n; ++i) y2s[i] = models[i]->out2(st.s[i]);

  std::vector<std::span<const std::uint32_t>> spans(n);
  std::vector<int> pn(n), ln(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec w = internal_input_block(*net, static_cast<int>(i), y2s);
    const auto& wps = models[i]->wpoints;
    const auto it = std::find(wps.begin(), wps.end(), w);
    if (it == wps.end())
      throw NetworkError("coupling value missing from the abstraction input set "
                         "of subsystem " +
                         std::to_string(i));
    const std::size_t wi = static_cast<std::size_t>(it - wps.begin());
    const auto [pi, li] = mode_counter_step(st.p[i], st.l[i], u[i],
                                            models[i]->dwell, models[i]->m);
    pn[i] = pi;
    ln[i] = li;
    spans[i] = models[i]->successors(st.s[i], st.p[i], wi);
    if (spans[i].empty()) return {};
  }

  std::vector<State> out;
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    State s2;
    s2.s.resize(n);
    s2.p = pn;
    s2.l = ln;
    for (std::size_t i = 0; i < n; ++i) s2.s[i] = spans[i][idx[i]];
    out.push_back(std::move(s2));
    std::size_t k = n;
    bool done = true;
    while (k > 0) {
      --k;
      if (++idx[k] < spans[k].size()) {
        std::fill(idx.begin() + static_cast<std::ptrdiff_t>(k) + 1, idx.end(), 0);
        done = false;
        break;
      }
      idx[k] = 0;
    }
    if (done) break;
  }
  return out;
}

NetworkModel compose_symbolic_network(const NetworkSpec& net,
                                      const std::vector<const SymbolicModel*>& models) {
  validate_network(net);
  if (models.size() != net.subs.size()) throw NetworkError("model arity mismatch");
  const MatchReport match = check_internal_input_match(net, models);
  /* the lazy product resolves each internal input it actually produces, so
   * containment of the coupling image suffices even when the stacked image
   * is not a product set */
  if (!match.ok && !match.inclusion_ok)
    throw NetworkError("internal input sets inconsistent with the coupling: " +
                       match.reason);
  NetworkModel nm;
  nm.net = &net;
  nm.models = models;
  return nm;
}

}  // namespace symnet
