/* certificates.hpp
 *
 * Storage-function certificates for switched subsystems and the machinery
 * that turns them into abstraction error bounds:
 *
 *  - per-mode incremental-passivity verification for affine modes via a
 *    linear matrix inequality feasibility test (with a searched scaling
 *    parameter theta),
 *  - the mode-dominance constant mu and the induced minimum dwell time,
 *  - the dominating supply matrix built from the positive/negative spectral
 *    split when modes use different storage functions,
 *  - the augmented storage function certifying that the quantized model
 *    approximately simulates the subsystem, with decay sigma and offset
 *    epsilon, plus a seeded Monte-Carlo validator for its two defining
 *    inequalities.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "symnet/abstraction.hpp"
#include "symnet/matcert.hpp"
#include "symnet/system.hpp"

namespace symnet {

struct StorageCertificate {
  std::vector<SymMatrix> Z;          // per-mode storage matrices, positive definite
  std::vector<SymMatrix> Q;          // per-mode supply matrices, blocks (wdim, y2dim)
  std::vector<double> kappa;         // per-mode decay, in (0, 1)
  std::vector<double> theta;         // chosen scaling per mode (0 = not scanned yet)
  std::vector<PowerK> alpha_lower;   // per-mode lower gain  alpha(||.||) <= storage
  double mu = 1.0;                   // declared dominance constant, >= 1
  double eps_exp = 1.01;             // exponent parameter used by the dwell bound
  bool common = false;               // all modes share one storage function
};

/* feasibility of the dissipation inequality for one affine mode at a fixed
 * scaling theta > 1; margin receives the minimum eigenvalue of the slack */
bool verify_delta_p_affine(const ModeDynamics& md, const Mat& C2, const SymMatrix& Z,
                           const SymMatrix& Q, double kappa, double theta, double tol,
                           double* margin = nullptr);

/* ascending theta grid helper (inclusive of stop up to roundoff) */
std::vector<double> theta_grid(double start, double stop, double step);

/* first theta in the grid that makes the mode inequality feasible;
 * throws CertificateError when none works (best margin in the message) */
double scan_theta(const ModeDynamics& md, const Mat& C2, const SymMatrix& Z,
                  const SymMatrix& Q, double kappa, const std::vector<double>& thetas,
                  double tol, double* margin = nullptr);

/* smallest c >= 1 with S_p <= c * S_q for all ordered mode pairs */
double compute_mu(const std::vector<SymMatrix>& Z);

/* perturbation gain of the quadratic storage x -> x^T Z x over the state
 * set: moving one argument by s (sup norm) changes the storage by at most
 * quad*s^2 + lin*s */
QuadK gamma_bound(const SymMatrix& Z, const BoxUnion& states);

/* smallest admissible dwell time for the given dominance constant */
int min_dwell_time(double mu, double kappa_max, double eps_exp);

/* supply matrix dominating kappa^{-q/eps} * sum_p Q_p for all counter values
 * q in [1, dwell-1]; built from the spectral split of the sum */
SymMatrix construct_Qtilde(const std::vector<SymMatrix>& Q, double kappa_max,
                           double eps_exp, int dwell, double tol);

/* augmented storage function relating the subsystem and its quantized model:
 *   alpha(||y1 - y1_hat||) <= V,   V+ <= sigma V + eps_offset + T^T R T    */
struct AugStorageFn {
  PowerK alpha;       // lower bound gain (already inverted to alpha form)
  double sigma = 0.0;
  double eps_offset = 0.0;
  SymMatrix R;

  /* evaluation data */
  std::vector<SymMatrix> Z;
  double kappa_max = 0.0;
  double eps_exp = 1.01;
  bool common = false;
  int dwell = 1;

  /* V((x,p,l), (xhat,p,l)); the mode does not enter the value */
  double value(const Vec& x, const Vec& xhat, int l) const;
};

AugStorageFn derive_augmented_storage(const SwitchedSubsystem& sub,
                                      const StorageCertificate& cert, double eta);

struct McReport {
  double max_violation = 0.0;  // over both inequalities, negative = all satisfied
  double lower_max = 0.0;      // worst slack of the lower-bound inequality
  double decay_max = 0.0;      // worst slack of the decay inequality
  std::uint64_t samples = 0;
  std::uint64_t skipped = 0;   // draws without an in-set transition to check
};

/* sample random (state, grid state, mode, counter, inputs) tuples and
 * evaluate both inequalities; one independent substream per sample index
 * makes the report independent of the worker count */
McReport validate_storage_mc(const SwitchedSubsystem& sub, const SymbolicModel& model,
                             const AugStorageFn& fn, std::uint64_t samples,
                             std::uint64_t seed, int workers = 1);

}  // namespace symnet
