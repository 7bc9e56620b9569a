#include "symnet/driver.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "symnet/binio.hpp"
#include "symnet/config.hpp"
#include "symnet/errors.hpp"
#include "symnet/sim.hpp"

namespace symnet {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

fs::path resolve_out(const std::string& config_path, const RunFlags& flags) {
  fs::path dir = flags.out.empty()
                     ? fs::path(config_path).parent_path() / "out"
                     : fs::path(flags.out);
  fs::create_directories(dir);
  return dir;
}

/* content key for deduplicating identical subsystems (and their models) */
std::string sub_key(const SwitchedSubsystem& sub, const std::vector<Vec>* wover) {
  std::string k;
  const auto put_boxes = [&](const BoxUnion& u) {
    binio::put_u64(k, u.boxes.size());
    for (const Box& b : u.boxes) {
      binio::put_u64(k, b.lo.size());
      for (double v : b.lo) binio::put_f64(k, v);
      for (double v : b.hi) binio::put_f64(k, v);
    }
  };
  const auto put_mat = [&](const Mat& m) {
    binio::put_u64(k, static_cast<std::uint64_t>(m.rows));
    binio::put_u64(k, static_cast<std::uint64_t>(m.cols));
    for (double v : m.a) binio::put_f64(k, v);
  };
  put_boxes(sub.state_set);
  put_boxes(sub.internal_input_set);
  put_mat(sub.C1);
  put_mat(sub.C2);
  binio::put_u64(k, static_cast<std::uint64_t>(sub.dwell));
  binio::put_u64(k, sub.modes.size());
  for (const ModeDynamics& md : sub.modes) {
    put_mat(md.A);
    put_mat(md.D);
    binio::put_u64(k, md.B.size());
    for (double v : md.B) binio::put_f64(k, v);
  }
  if (wover) {
    binio::put_u64(k, wover->size());
    for (const Vec& w : *wover)
      for (double v : w) binio::put_f64(k, v);
  }
  return k;
}

/* build one model per distinct subsystem; coupling-consistent internal input
 * sets when a network block is present */
std::vector<SymbolicModel> build_models(const NetworkConfig& cfg, int workers,
                                        std::vector<const SymbolicModel*>* view) {
  if (!cfg.has_abstraction)
    throw ParamError("config: abstraction block required for this command");

  std::vector<std::vector<Vec>> overrides;
  if (cfg.has_network) {
    const NetworkSpec net = cfg.network();
    validate_network(net);
    std::vector<std::vector<IVec>> grids;
    for (const SwitchedSubsystem& sub : cfg.subs)
      grids.push_back(quantize_set(sub.state_set, cfg.eta));
    overrides = coupling_w_points_from_grids(net, grids, cfg.eta);
  }

  std::vector<SymbolicModel> models;
  std::vector<std::size_t> which(cfg.subs.size());
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < cfg.subs.size(); ++i) {
    const std::vector<Vec>* wover = cfg.has_network ? &overrides[i] : nullptr;
    const std::string key = sub_key(cfg.subs[i], wover);
    const auto it = seen.find(key);
    if (it != seen.end()) {
      which[i] = it->second;
      continue;
    }
    models.push_back(build_symbolic_model(cfg.subs[i], cfg.eta, cfg.varpi, wover,
                                          workers == 0 ? 1 : workers));
    seen.emplace(key, models.size() - 1);
    which[i] = models.size() - 1;
  }
  if (view) {
    view->clear();
    for (std::size_t i = 0; i < cfg.subs.size(); ++i)
      view->push_back(&models[which[i]]);
  }
  return models;
}

/* per-subsystem row block of the coupling matrix */
Mat row_block(const NetworkSpec& net, std::size_t i) {
  int off = 0;
  for (std::size_t j = 0; j < i; ++j) off += net.subs[j].wdim();
  return net.M.block(off, 0, net.subs[i].wdim(), net.M.cols);
}

/* stacked per-subsystem output assumption (single box each) */
BoxUnion stack_assumption(const NetworkConfig& cfg) {
  Box stacked;
  for (std::size_t i = 0; i < cfg.subs.size(); ++i) {
    if (cfg.assumed_outputs.boxes.size() != 1 ||
        cfg.assumed_outputs.dim() != cfg.subs[i].y2dim())
      throw ParamError(
          "config spec.assumed_output_box: expected a single box matching the "
          "internal output dimension");
    const Box& b = cfg.assumed_outputs.boxes.front();
    stacked.lo.insert(stacked.lo.end(), b.lo.begin(), b.lo.end());
    stacked.hi.insert(stacked.hi.end(), b.hi.begin(), b.hi.end());
  }
  BoxUnion u;
  u.boxes.push_back(std::move(stacked));
  return u;
}

double resolve_psi(const NetworkConfig& cfg, const RunFlags& flags) {
  return flags.psi > 0.0 ? flags.psi : cfg.psi;
}

/* mismatch bound from the certificates; also reports the composed data */
RelationBound composed_bound(const NetworkConfig& cfg, double psi,
                             AltSimFn* alt_out) {
  if (!cfg.has_certs || !cfg.has_network)
    throw ParamError("config: certificate and network blocks required to "
                     "compute the mismatch bound");
  const NetworkSpec net = cfg.network();
  std::vector<AugStorageFn> fns;
  for (std::size_t i = 0; i < cfg.subs.size(); ++i)
    fns.push_back(derive_augmented_storage(cfg.subs[i], cfg.certs[i], cfg.eta));
  const AltSimFn alt = compose_alt_sim(net, fns);
  if (alt_out) *alt_out = alt;
  return error_bound(alt, psi);
}

/* ---- commands ------------------------------------------------------------ */

int cmd_check_cert(const NetworkConfig& cfg, const RunFlags& flags,
                   std::ostream& out, const fs::path& outdir) {
  if (!cfg.has_certs)
    throw ParamError("config: certificate block required for check-cert");

  std::ostringstream rep;
  bool all_ok = true;
  const std::vector<double> thetas = theta_grid(1.01, 1.2, 0.01);

  std::map<std::string, std::string> dedup;
  for (std::size_t i = 0; i < cfg.subs.size(); ++i) {
    const SwitchedSubsystem& sub = cfg.subs[i];
    const StorageCertificate& cert = cfg.certs[i];
    const std::string key = sub_key(sub, nullptr);

    rep << "subsystem " << i << "\n";
    const auto it = dedup.find(key);
    if (it != dedup.end()) {
      rep << it->second;
      if (it->second.find("INFEASIBLE") != std::string::npos) all_ok = false;
      continue;
    }

    std::ostringstream block;
    for (int p = 0; p < sub.n_modes(); ++p) {
      double margin = 0.0;
      try {
        const double theta =
            scan_theta(sub.modes[static_cast<std::size_t>(p)], sub.C2,
                       cert.Z[static_cast<std::size_t>(p)],
                       cert.Q[static_cast<std::size_t>(p)],
                       cert.kappa[static_cast<std::size_t>(p)], thetas,
                       flags.tol, &margin);
        block << "  mode " << p << ": feasible  theta=" << fmt(theta)
              << "  lmi_margin=" << fmt(margin)
              << "  kappa=" << fmt(cert.kappa[static_cast<std::size_t>(p)]) << "\n";
      } catch (const CertificateError& e) {
        all_ok = false;
        block << "  mode " << p << ": INFEASIBLE  " << e.what() << "\n";
      }
    }

    const double mu_computed = cert.common ? 1.0 : compute_mu(cert.Z);
    const double mu_declared = cert.mu;
    block << "  mu: declared=" << fmt(mu_declared)
          << " computed=" << fmt(mu_computed) << "\n";
    if (mu_declared + 1e-9 < mu_computed) {
      all_ok = false;
      block << "  mu: INFEASIBLE (declared value understates the computed "
               "dominance constant)\n";
    }
    double kmax = 0.0;
    for (double kp : cert.kappa) kmax = std::max(kmax, kp);
    const int kd = min_dwell_time(std::max(mu_declared, 1.0), kmax, cert.eps_exp);
    block << "  dwell: bound=" << kd << " configured=" << sub.dwell
          << (sub.dwell >= kd ? "" : "  INFEASIBLE (below the bound)") << "\n";
    if (sub.dwell < kd) all_ok = false;

    if (!cert.common && sub.dwell > 1) {
      try {
        const SymMatrix qt =
            construct_Qtilde(cert.Q, kmax, cert.eps_exp, sub.dwell, 1e-9);
        Mat sum(qt.n, qt.n, 0.0);
        for (const SymMatrix& qp : cert.Q) sum = sum + qp.dense();
        for (int q = 1; q < sub.dwell; ++q) {
          const double scale =
              std::pow(kmax, -static_cast<double>(q) / cert.eps_exp);
          const SymMatrix slack(qt.dense() - scale * sum);
          const Vec ev = sym_eigvals(slack);
          block << "  qtilde q=" << q << ": margin=" << fmt(ev.front()) << "\n";
        }
      } catch (const CertificateError& e) {
        all_ok = false;
        block << "  qtilde: INFEASIBLE  " << e.what() << "\n";
      }
    }
    dedup.emplace(key, block.str());
    rep << block.str();
  }

  rep << (all_ok ? "certificates: all checks passed\n"
                 : "certificates: FAILED (see records above)\n");
  out << rep.str();
  std::ofstream f(outdir / "cert-report.txt", std::ios::trunc);
  f << rep.str();
  return all_ok ? 0 : 1;
}

int cmd_abstract(const NetworkConfig& cfg, const RunFlags& flags,
                 std::ostream& out, const fs::path& outdir) {
  std::vector<const SymbolicModel*> view;
  const std::vector<SymbolicModel> models = build_models(cfg, flags.workers, &view);
  for (std::size_t i = 0; i < view.size(); ++i) {
    const fs::path p = outdir / ("model_" + std::to_string(i) + ".smdl");
    save_model(*view[i], p.string());
    out << "model " << i << ": states=" << view[i]->n_states()
        << " inputs=" << view[i]->nw() << " transitions=" << view[i]->targets.size()
        << " digest=" << view[i]->digest() << " -> " << p.string() << "\n";
  }
  return 0;
}

int cmd_compose_check(const NetworkConfig& cfg, const RunFlags& flags,
                      std::ostream& out, const fs::path& outdir) {
  if (!cfg.has_certs || !cfg.has_network)
    throw ParamError("config: certificate and network blocks required for "
                     "compose-check");
  const NetworkSpec net = cfg.network();
  validate_network(net);

  std::vector<AugStorageFn> fns;
  std::vector<SymMatrix> R;
  for (std::size_t i = 0; i < cfg.subs.size(); ++i) {
    fns.push_back(derive_augmented_storage(cfg.subs[i], cfg.certs[i], cfg.eta));
    R.push_back(fns.back().R);
  }

  const LmiReport lmi = check_composition_lmi(net, R, flags.tol);
  out << "composition lmi: max_eig=" << fmt(lmi.margin)
      << (lmi.ok ? "  (dissipated)" : "  VIOLATED") << "\n";

  std::vector<const SymbolicModel*> view;
  const std::vector<SymbolicModel> models = build_models(cfg, flags.workers, &view);
  const MatchReport match = check_internal_input_match(net, view);
  out << "internal input match: "
      << (match.ok ? "exact"
                   : (match.inclusion_ok ? "inclusion only" : "MISMATCH"))
      << "\n";
  if (!match.ok) out << "  " << match.reason << "\n";

  const AltSimFn alt = compose_alt_sim(net, fns);
  const double psi = resolve_psi(cfg, flags);
  const RelationBound b = error_bound(alt, psi);
  out << "sigma_tilde=" << fmt(alt.sigma_tilde) << "\n"
      << "eps_tilde=" << fmt(alt.eps_tilde) << "\n"
      << "psi=" << fmt(psi) << "  phi=" << fmt(b.phi) << "  rho=" << fmt(b.rho)
      << "\n"
      << "eps_hat=" << fmt(b.eps_hat) << "\n";

  std::ofstream f(outdir / "compose-report.txt", std::ios::trunc);
  f << "lmi_max_eig=" << fmt(lmi.margin) << "\nmatch=" << (match.ok ? 1 : 0)
    << "\nmatch_inclusion=" << (match.inclusion_ok ? 1 : 0)
    << "\nsigma_tilde=" << fmt(alt.sigma_tilde) << "\neps_tilde="
    << fmt(alt.eps_tilde) << "\npsi=" << fmt(psi) << "\nphi=" << fmt(b.phi)
    << "\nrho=" << fmt(b.rho) << "\neps_hat=" << fmt(b.eps_hat) << "\n";

  /* the composed model only needs to resolve every internal input the
   * coupling can produce, so the containment direction gates success; the
   * strict equality is reported above */
  return (lmi.ok && match.inclusion_ok) ? 0 : 1;
}

struct SynthesisArtifacts {
  std::vector<SymbolicModel> models;
  std::vector<const SymbolicModel*> model_view;   /* per subsystem */
  std::vector<SymbolicModel> restricted;          /* distinct restricted models */
  std::vector<const SymbolicModel*> game_view;    /* per subsystem */
  std::vector<Controller> controllers;            /* distinct controllers */
  std::vector<const Controller*> ctrl_view;       /* per subsystem */
  double shrink = 0.0;
  int iterations = 0;
};

SynthesisArtifacts synthesize_all(const NetworkConfig& cfg, const RunFlags& flags,
                                  std::ostream& out) {
  if (!cfg.has_spec)
    throw ParamError("config: spec block required for synthesis");

  SynthesisArtifacts art;
  art.models = build_models(cfg, flags.workers, &art.model_view);

  double shrink = cfg.shrink;
  if (shrink < 0.0) {
    const RelationBound b = composed_bound(cfg, resolve_psi(cfg, flags), nullptr);
    shrink = b.eps_hat;
    out << "safe-set erosion from mismatch bound: " << fmt(shrink) << "\n";
  } else {
    out << "safe-set erosion from config: " << fmt(shrink) << "\n";
  }
  art.shrink = shrink;

  const bool restrict = !cfg.assumed_outputs.empty();
  NetworkSpec net;
  BoxUnion stacked;
  if (restrict) {
    if (!cfg.has_network)
      throw ParamError("config: assumed_output_box needs a network block");
    net = cfg.network();
    stacked = stack_assumption(cfg);
  }

  SafetySpec spec;
  spec.safe = cfg.safe;
  spec.shrink = shrink;
  spec.fairness_limit = cfg.fairness_limit;
  spec.red_mode = cfg.red_mode;

  /* distinct (base model, allowed input set) pairs share one game; the key
   * includes the restriction because row blocks can differ per subsystem */
  std::map<std::string, std::size_t> gidx;
  std::vector<std::size_t> which(cfg.subs.size());
  for (std::size_t i = 0; i < cfg.subs.size(); ++i) {
    const SymbolicModel* base = art.model_view[i];
    std::string key;
    binio::put_u64(key, reinterpret_cast<std::uintptr_t>(base));
    BoxUnion allowed;
    if (restrict) {
      allowed = linear_image(row_block(net, i), stacked);
      for (const Box& b : allowed.boxes) {
        for (double v : b.lo) binio::put_f64(key, v);
        for (double v : b.hi) binio::put_f64(key, v);
      }
    }
    const auto it = gidx.find(key);
    if (it != gidx.end()) {
      which[i] = it->second;
      continue;
    }
    art.restricted.push_back(restrict ? restrict_internal_inputs(*base, allowed)
                                      : *base);
    SynthesisResult res =
        solve_safety_game(art.restricted.back(), spec, flags.workers);
    out << "subsystem " << i << ": game states " << res.initial_states << " -> "
        << res.final_states << " in " << res.iterations << " sweeps, domain "
        << res.controller.domain_size() << "\n";
    art.iterations = std::max(art.iterations, res.iterations);
    if (res.final_states == 0)
      throw SynthesisInfeasible(
          res.initial_states == 0 ? "eroded safe set contains no abstract state"
                                  : "safety game has an empty winning region",
          res.iterations);
    art.controllers.push_back(std::move(res.controller));
    which[i] = art.restricted.size() - 1;
    gidx.emplace(key, which[i]);
  }
  for (std::size_t i = 0; i < cfg.subs.size(); ++i) {
    art.game_view.push_back(&art.restricted[which[i]]);
    art.ctrl_view.push_back(&art.controllers[which[i]]);
  }
  return art;
}

int cmd_synthesize(const NetworkConfig& cfg, const RunFlags& flags,
                   std::ostream& out, const fs::path& outdir) {
  const SynthesisArtifacts art = synthesize_all(cfg, flags, out);
  for (std::size_t i = 0; i < art.ctrl_view.size(); ++i) {
    const fs::path cp = outdir / ("controller_" + std::to_string(i) + ".sctl");
    save_controller(*art.ctrl_view[i], cp.string());
    const fs::path dp = outdir / ("domain_" + std::to_string(i) + ".csv");
    std::ofstream df(dp, std::ios::trunc);
    export_domain_csv(*art.ctrl_view[i], df);
    out << "controller " << i << ": domain=" << art.ctrl_view[i]->domain_size()
        << " digest=" << art.ctrl_view[i]->digest() << " -> " << cp.string()
        << "\n";
  }
  return 0;
}

int cmd_simulate(const NetworkConfig& cfg, const RunFlags& flags,
                 std::ostream& out, const fs::path& outdir) {
  if (!cfg.has_sim)
    throw ParamError("config: simulation block required for simulate");
  const SynthesisArtifacts art = synthesize_all(cfg, flags, out);
  const NetworkSpec net = cfg.network();

  SimOptions opt;
  opt.horizon = cfg.horizon;
  opt.policy = parse_policy(flags.policy.empty() ? cfg.policy : flags.policy);
  opt.seed = flags.seed_set ? flags.seed : cfg.seed;
  opt.safe = cfg.safe;

  const ClosedLoopLog log = simulate_closed_loop(net, art.ctrl_view, cfg.x0, opt);

  const fs::path cp = outdir / "closedloop.csv";
  std::ofstream cf(cp, std::ios::trunc);
  export_csv(log, net, cf);

  /* summary: output extrema and the longest run in the fairness mode */
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  for (const NetState& st : log.states)
    for (const Vec& x : st.x)
      for (double v : x) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  int longest_red = 0;
  for (std::size_t i = 0; i < net.subs.size(); ++i) {
    int run = 0;
    for (const NetState& st : log.states) {
      run = (st.p[i] == cfg.red_mode) ? run + 1 : 0;
      longest_red = std::max(longest_red, run);
    }
  }
  out << "simulated " << cfg.horizon << " steps; state range [" << fmt(lo) << ", "
      << fmt(hi) << "]; longest run in mode " << cfg.red_mode << ": "
      << longest_red << "; safe=" << (log.all_safe ? "yes" : "NO") << " -> "
      << cp.string() << "\n";
  return log.all_safe ? 0 : 1;
}

int cmd_report(const NetworkConfig& cfg, const RunFlags& flags, std::ostream& out) {
  out << "name: " << (cfg.name.empty() ? "(unnamed)" : cfg.name) << "\n";
  out << "subsystems: " << cfg.subs.size() << "\n";
  for (std::size_t i = 0; i < cfg.subs.size(); ++i) {
    const SwitchedSubsystem& s = cfg.subs[i];
    out << "  [" << i << "] dim=" << s.dim() << " wdim=" << s.wdim()
        << " modes=" << s.n_modes() << " dwell=" << s.dwell;
    if (cfg.has_abstraction)
      out << " grid_points=" << grid_point_count(s.state_set, cfg.eta);
    out << "\n";
  }
  if (cfg.has_abstraction)
    out << "abstraction: eta=" << fmt(cfg.eta) << " varpi=" << fmt(cfg.varpi)
        << " dwell=" << cfg.dwell << "\n";
  if (cfg.has_certs) {
    const StorageCertificate& c = cfg.certs.front();
    out << "certificate: modes=" << c.Z.size() << " common=" << (c.common ? 1 : 0)
        << " mu=" << fmt(c.mu) << " eps_exp=" << fmt(c.eps_exp) << " kappa=[";
    for (std::size_t p = 0; p < c.kappa.size(); ++p)
      out << (p ? "," : "") << fmt(c.kappa[p]);
    out << "]\n";
  }
  if (cfg.has_network) {
    int nnz = 0;
    for (double v : cfg.M.a) nnz += (v != 0.0);
    out << "coupling: " << cfg.M.rows << "x" << cfg.M.cols << " nonzeros=" << nnz
        << "\n";
  }
  if (cfg.has_spec) {
    out << "spec: fairness_limit=" << cfg.fairness_limit
        << " red_mode=" << cfg.red_mode << " psi=" << fmt(cfg.psi);
    if (cfg.shrink >= 0.0) out << " shrink=" << fmt(cfg.shrink);
    out << "\n";
  }
  if (cfg.has_sim)
    out << "simulation: horizon=" << cfg.horizon << " seed=" << cfg.seed
        << " policy=" << cfg.policy << "\n";
  (void)flags;
  return 0;
}

}  // namespace

int run_command(const std::string& command, const std::string& config_path,
                const RunFlags& flags, std::ostream& out, std::ostream& err) {
  try {
    const NetworkConfig cfg = parse_config(config_path);
    const fs::path outdir = resolve_out(config_path, flags);
    if (command == "check-cert") return cmd_check_cert(cfg, flags, out, outdir);
    if (command == "abstract") return cmd_abstract(cfg, flags, out, outdir);
    if (command == "compose-check")
      return cmd_compose_check(cfg, flags, out, outdir);
    if (command == "synthesize") return cmd_synthesize(cfg, flags, out, outdir);
    if (command == "simulate") return cmd_simulate(cfg, flags, out, outdir);
    if (command == "report") return cmd_report(cfg, flags, out);
    err << "unknown command '" << command << "'\n";
    return 2;
  } catch (const ParamError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const SynthesisInfeasible& e) {
    err << "infeasible: " << e.what() << " (after " << e.iterations
        << " sweeps)\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace symnet
