#include "symnet/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "symnet/errors.hpp"
#include "symnet/rng.hpp"
#include "symnet/transition.hpp"

namespace symnet {

namespace {

/* [[TL, TR], [BL, BR]] into one symmetric matrix */
SymMatrix assemble2x2(const Mat& tl, const Mat& tr, const Mat& bl, const Mat& br) {
  const int n1 = tl.rows, n2 = br.rows;
  Mat full(n1 + n2, n1 + n2, 0.0);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n1; ++j) full(i, j) = tl(i, j);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) full(i, n1 + j) = tr(i, j);
  for (int i = 0; i < n2; ++i)
    for (int j = 0; j < n1; ++j) full(n1 + i, j) = bl(i, j);
  for (int i = 0; i < n2; ++i)
    for (int j = 0; j < n2; ++j) full(n1 + i, n1 + j) = br(i, j);
  return SymMatrix(full);
}

void check_storage_matrix(const SymMatrix& z) {
  const Vec ev = sym_eigvals(z);
  double scale = 0.0;
  for (double l : ev) scale = std::max(scale, std::abs(l));
  if (ev.empty() || ev.front() <= 1e-12 * std::max(1.0, scale))
    throw ParamError("storage matrix must be positive definite");
}

}  // namespace

bool verify_delta_p_affine(const ModeDynamics& md, const Mat& C2, const SymMatrix& Z,
                           const SymMatrix& Q, double kappa, double theta, double tol,
                           double* margin) {
  if (md.custom)
    throw InputError("machine-checked certificates cover affine modes only");
  if (kappa <= 0.0 || kappa >= 1.0) throw ParamError("kappa must lie in (0, 1)");
  if (theta <= 1.0) throw ParamError("theta must exceed 1");
  check_storage_matrix(Z);

  const int n = md.A.rows;
  const int wd = md.D.cols;
  const int y2 = C2.rows;
  if (md.A.cols != n || md.D.rows != n || C2.cols != n || Z.n != n)
    throw InputError("certificate matrices have inconsistent dimensions");
  if (Q.n != wd + y2) throw InputError("supply matrix has wrong block dimensions");

  const Mat Zd = Z.dense();
  const Mat At = md.A.transposed();
  const Mat Dt = md.D.transposed();
  const Mat C2t = C2.transposed();

  const Mat q11 = Q.block(0, 0, wd, wd);
  const Mat q12 = Q.block(0, wd, wd, y2);
  const Mat q21 = Q.block(wd, 0, y2, wd);
  const Mat q22 = Q.block(wd, wd, y2, y2);

  const SymMatrix lhs = assemble2x2(theta * (At * Zd * md.A), At * Zd * md.D,
                                    Dt * Zd * md.A, theta * (Dt * Zd * md.D));
  const SymMatrix rhs = assemble2x2(kappa * Zd + C2t * q22 * C2, C2t * q21,
                                    q12 * C2, q11);
  const Vec ev = sym_eigvals(rhs - lhs);
  const double m = ev.empty() ? 0.0 : ev.front();
  if (margin) *margin = m;
  return m >= -tol;
}

std::vector<double> theta_grid(double start, double stop, double step) {
  if (step <= 0.0 || start <= 1.0 || stop < start)
    throw ParamError("theta grid must be ascending with start > 1");
  std::vector<double> g;
  for (int i = 0;; ++i) {
    const double t = start + step * i;
    if (t > stop + 0.5 * step) break;
    g.push_back(t);
  }
  return g;
}

double scan_theta(const ModeDynamics& md, const Mat& C2, const SymMatrix& Z,
                  const SymMatrix& Q, double kappa, const std::vector<double>& thetas,
                  double tol, double* margin) {
  if (thetas.empty()) throw ParamError("theta grid is empty");
  double best_margin = -HUGE_VAL;
  double best_theta = thetas.front();
  for (const double t : thetas) {
    double m = 0.0;
    if (verify_delta_p_affine(md, C2, Z, Q, kappa, t, tol, &m)) {
      if (margin) *margin = m;
      return t;
    }
    if (m > best_margin) {
      best_margin = m;
      best_theta = t;
    }
  }
  if (margin) *margin = best_margin;
  throw CertificateError("dissipation inequality infeasible over the theta grid "
                         "(best margin " +
                         std::to_string(best_margin) + " at theta " +
                         std::to_string(best_theta) + ")");
}

double compute_mu(const std::vector<SymMatrix>& Z) {
  if (Z.empty()) throw InputError("compute_mu needs at least one storage matrix");
  double mu = 1.0;
  for (std::size_t p = 0; p < Z.size(); ++p)
    for (std::size_t q = 0; q < Z.size(); ++q) {
      if (p == q) continue;
      mu = std::max(mu, min_dominance_scale(Z[p], Z[q]));
    }
  return mu;
}

QuadK gamma_bound(const SymMatrix& Z, const BoxUnion& states) {
  check_storage_matrix(Z);
  const Vec ev = sym_eigvals(Z);
  const double lmax = ev.back();
  const double n = static_cast<double>(Z.n);
  const double d2 = euclid_diameter(states);
  /* moving one argument of (x-y)^T Z (x-y) by u adds u^T Z u + 2 e^T Z u
   * with e the old difference: bound via ||u||_2 <= sqrt(n) ||u||_inf and
   * ||e||_2 <= diameter */
  return {lmax * n, lmax * 2.0 * std::sqrt(n) * d2};
}

int min_dwell_time(double mu, double kappa_max, double eps_exp) {
  if (mu < 1.0) throw ParamError("dominance constant must be >= 1");
  if (kappa_max <= 0.0 || kappa_max >= 1.0)
    throw ParamError("kappa must lie in (0, 1)");
  if (eps_exp <= 1.0) throw ParamError("the exponent parameter must exceed 1");
  const double bound = eps_exp * std::log(mu) / std::log(1.0 / kappa_max) + 1.0;
  const double rounded = std::round(bound);
  if (std::abs(bound - rounded) <= 1e-9 * std::max(1.0, std::abs(rounded)))
    return std::max(1, static_cast<int>(rounded));
  return std::max(1, static_cast<int>(std::ceil(bound)));
}

SymMatrix construct_Qtilde(const std::vector<SymMatrix>& Q, double kappa_max,
                           double eps_exp, int dwell, double tol) {
  if (Q.empty()) throw InputError("supply matrix list is empty");
  SymMatrix sum = Q.front();
  for (std::size_t p = 1; p < Q.size(); ++p) sum = sum + Q[p];
  if (dwell < 1) throw ParamError("dwell time must be >= 1");
  if (dwell == 1) return SymMatrix(sum.n);  // no counter values to dominate

  const double cmin = std::pow(kappa_max, -1.0 / eps_exp);
  const double cmax = std::pow(kappa_max, -(static_cast<double>(dwell) - 1.0) / eps_exp);
  const PosNegSplit split = pos_neg_split(sum);
  const SymMatrix qt = cmax * split.pos + cmin * split.neg;

  for (int q = 1; q <= dwell - 1; ++q) {
    const double c = std::pow(kappa_max, -static_cast<double>(q) / eps_exp);
    if (!is_psd(qt - c * sum, tol))
      throw CertificateError("dominating supply construction failed at counter " +
                             std::to_string(q));
  }
  return qt;
}

double AugStorageFn::value(const Vec& x, const Vec& xhat, int l) const {
  const Vec d = vec_sub(x, xhat);
  if (common) return Z.front().quad(d);
  if (l < 0 || l > dwell - 1) throw InputError("dwell counter out of range");
  double s = 0.0;
  for (const SymMatrix& z : Z) s += z.quad(d);
  return std::pow(kappa_max, -static_cast<double>(l) / eps_exp) * s;
}

AugStorageFn derive_augmented_storage(const SwitchedSubsystem& sub,
                                      const StorageCertificate& cert, double eta) {
  const std::size_t m = sub.modes.size();
  if (cert.Z.size() != m || cert.Q.size() != m || cert.kappa.size() != m ||
      cert.alpha_lower.size() != m)
    throw InputError("certificate arity does not match the mode count");
  if (eta < 0.0) throw ParamError("eta must be nonnegative");
  for (const double k : cert.kappa)
    if (k <= 0.0 || k >= 1.0) throw ParamError("kappa must lie in (0, 1)");
  for (const SymMatrix& z : cert.Z) check_storage_matrix(z);

  const double kmax = *std::max_element(cert.kappa.begin(), cert.kappa.end());

  if (cert.common) {
    for (std::size_t p = 1; p < m; ++p)
      if (cert.Z[p].a != cert.Z[0].a || cert.Q[p].a != cert.Q[0].a ||
          cert.kappa[p] != cert.kappa[0])
        throw CertificateError("common storage declared but per-mode data differ");
  }

  const int kd_min = min_dwell_time(cert.mu, kmax, cert.eps_exp);
  if (sub.dwell < kd_min)
    throw CertificateError("dwell time " + std::to_string(sub.dwell) +
                           " below the admissible minimum " + std::to_string(kd_min));

  AugStorageFn fn;
  fn.Z = cert.Z;
  fn.kappa_max = kmax;
  fn.eps_exp = cert.eps_exp;
  fn.common = cert.common;
  fn.dwell = sub.dwell;

  /* lower gain: invert  max_p ( ell o alpha_p^{-1} ), feasible in closed
   * form when all compositions share one exponent */
  std::vector<PowerK> comps;
  comps.reserve(m);
  for (const PowerK& a : cert.alpha_lower)
    comps.push_back(sub.out_lipschitz.compose(a.inverse()));
  for (std::size_t p = 1; p < m; ++p)
    if (std::abs(comps[p].exp - comps[0].exp) > 1e-12)
      throw CertificateError(
          "unsupported certificate: mode gains compose to mixed exponents");
  PowerK envelope = comps.front();
  for (const PowerK& c : comps) envelope.coeff = std::max(envelope.coeff, c.coeff);
  fn.alpha = envelope.inverse();

  std::vector<QuadK> gamma;
  gamma.reserve(m);
  for (const SymMatrix& z : cert.Z) gamma.push_back(gamma_bound(z, sub.state_set));

  if (cert.common) {
    fn.sigma = cert.kappa.front();
    fn.R = cert.Q.front();
    fn.eps_offset = gamma.front()(eta);
  } else {
    fn.sigma = std::pow(kmax, (cert.eps_exp - 1.0) / cert.eps_exp);
    fn.R = construct_Qtilde(cert.Q, kmax, cert.eps_exp, sub.dwell, 1e-9);
    QuadK total{0.0, 0.0};
    for (const QuadK& g : gamma) total = total + g;
    fn.eps_offset =
        total.scaled(std::pow(kmax, -static_cast<double>(sub.dwell) / cert.eps_exp))(eta);
  }
  return fn;
}

McReport validate_storage_mc(const SwitchedSubsystem& sub, const SymbolicModel& model,
                             const AugStorageFn& fn, std::uint64_t samples,
                             std::uint64_t seed, int workers) {
  if (workers < 1) throw ParamError("worker count must be >= 1");
  if (model.grid.empty()) throw InputError("model has no states");
  if (model.nw() == 0) throw InputError("model has no internal input points");

  const auto draw_in = [](Rng& rng, const BoxUnion& s) {
    const Box& b = s.boxes[rng.below(s.boxes.size())];
    Vec x(b.lo.size());
    for (std::size_t d = 0; d < x.size(); ++d) x[d] = rng.uniform(b.lo[d], b.hi[d]);
    return x;
  };

  struct Acc {
    double lower = -HUGE_VAL, decay = -HUGE_VAL;
    std::uint64_t skipped = 0;
  };

  auto run_range = [&](std::uint64_t begin, std::uint64_t end, Acc& acc) {
    for (std::uint64_t i = begin; i < end; ++i) {
      Rng rng(seed, i);
      const Vec x = draw_in(rng, sub.state_set);
      const std::size_t shat = rng.below(model.grid.size());
      const Vec xhat = model.point(shat);
      const int p = static_cast<int>(rng.below(static_cast<std::uint64_t>(model.m)));
      const int l = static_cast<int>(rng.below(static_cast<std::uint64_t>(model.dwell)));
      const Vec w = sub.wdim() > 0 ? draw_in(rng, sub.internal_input_set) : Vec{};
      const Vec what = model.wpoints[rng.below(model.nw())];

      /* lower-bound inequality */
      const double v = fn.value(x, xhat, l);
      const Vec y = output1(sub, x);
      const Vec yhat = sub.C1 * xhat;
      const double lower_slack = fn.alpha(sup_norm(vec_sub(y, yhat))) - v;
      acc.lower = std::max(acc.lower, lower_slack);

      /* decay inequality along one transition pair */
      const int u = (l < model.dwell - 1)
                        ? p
                        : static_cast<int>(rng.below(static_cast<std::uint64_t>(model.m)));
      const auto [pn, ln] = mode_counter_step(p, l, u, model.dwell, model.m);
      (void)pn;
      const Vec xn = step(sub, p, x, w);
      if (!sub.state_set.contains(xn, 1e-9)) {
        ++acc.skipped;
        continue;
      }
      /* witness grid successor: nearest grid point to the model image */
      const Vec img = step(sub, p, xhat, what);
      IVec khat(img.size());
      bool ok = true;
      for (std::size_t d = 0; d < img.size(); ++d) {
        const double r = img[d] / model.eta;
        khat[d] = static_cast<std::int64_t>(std::ceil(r - 0.5));
        if (std::abs(img[d] - static_cast<double>(khat[d]) * model.eta) > model.eta)
          ok = false;
      }
      const auto idx = ok ? model.index_of(khat) : std::nullopt;
      if (!idx) {
        ++acc.skipped;
        continue;
      }
      const Vec xhat_n = model.point(*idx);
      Vec t = sub.wdim() > 0 ? vec_sub(w, what) : Vec{};
      const Vec dy2 = vec_sub(output2(sub, x), sub.C2 * xhat);
      t.insert(t.end(), dy2.begin(), dy2.end());
      const double vn = fn.value(xn, xhat_n, ln);
      const double decay_slack =
          vn - (fn.sigma * v + fn.eps_offset + fn.R.quad(t));
      acc.decay = std::max(acc.decay, decay_slack);
    }
  };

  const std::uint64_t nthreads =
      std::min<std::uint64_t>(static_cast<std::uint64_t>(workers), std::max<std::uint64_t>(samples, 1));
  std::vector<Acc> accs(nthreads);
  if (nthreads <= 1) {
    run_range(0, samples, accs[0]);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (samples + nthreads - 1) / nthreads;
    for (std::uint64_t t = 0; t < nthreads; ++t) {
      const std::uint64_t b = t * chunk;
      const std::uint64_t e = std::min(samples, b + chunk);
      if (b >= e) break;
      pool.emplace_back(run_range, b, e, std::ref(accs[t]));
    }
    for (auto& th : pool) th.join();
  }

  McReport rep;
  rep.samples = samples;
  rep.lower_max = -HUGE_VAL;
  rep.decay_max = -HUGE_VAL;
  for (const Acc& a : accs) {
    rep.lower_max = std::max(rep.lower_max, a.lower);
    rep.decay_max = std::max(rep.decay_max, a.decay);
    rep.skipped += a.skipped;
  }
  rep.max_violation = std::max(rep.lower_max, rep.decay_max);
  return rep;
}

}  // namespace symnet
