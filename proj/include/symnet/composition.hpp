/* composition.hpp
 *
 * Interconnection of switched subsystems through a static coupling matrix M:
 * the stacked internal inputs are M applied to the stacked internal outputs.
 * Provides the concrete network semantics (per-subsystem modes and dwell
 * counters advance independently), the network-level feasibility test that
 * the weighted block supply matrix is dissipated by [M; I], the internal
 * input consistency check between coupling image and abstraction input sets,
 * and the composition of per-subsystem storage functions into one network
 * simulation function with its quantization error bound.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "symnet/abstraction.hpp"
#include "symnet/certificates.hpp"
#include "symnet/matcert.hpp"
#include "symnet/system.hpp"

namespace symnet {

struct NetworkSpec {
  std::vector<SwitchedSubsystem> subs;
  Mat M;             // (sum of wdims) x (sum of y2dims); all-zero dims allowed
  Vec mu_weights;    // per-subsystem positive weights (defaults to all ones)

  int n_subs() const { return static_cast<int>(subs.size()); }
  int total_wdim() const;
  int total_y2dim() const;
};

/* shape checks plus well-posedness: the coupling image of the stacked
 * internal-output sets must fit inside the stacked internal-input sets
 * (exact interval arithmetic per box) */
void validate_network(const NetworkSpec& net);

/* internal input block of subsystem i given all internal outputs; every
 * consumer of coupling values goes through this one expression so that
 * generated point sets and runtime lookups agree bit-for-bit */
Vec internal_input_block(const NetworkSpec& net, int i, const std::vector<Vec>& y2s);

/* concrete network state: per-subsystem continuous state, mode, counter */
struct NetState {
  std::vector<Vec> x;
  std::vector<int> p;
  std::vector<int> l;
};

/* one synchronous network step under per-subsystem next-mode requests */
NetState network_step(const NetworkSpec& net, const NetState& s,
                      const std::vector<int>& u);

struct NetRun {
  std::vector<NetState> states;
  std::vector<Vec> outputs;  // stacked external outputs
};

/* drive the interconnected system along per-subsystem mode sequences
 * (horizon+1 entries each, dwell-admissible) */
NetRun network_run(const NetworkSpec& net, const std::vector<Vec>& x0,
                   const std::vector<std::vector<int>>& mode_seqs, int horizon);

/* weighted block-diagonal rearrangement of the per-subsystem supply
 * matrices: block (i', j') of the result is diag_i(mu_i * R_i^{i'j'}) */
SymMatrix assemble_Rdelta(const NetworkSpec& net, const std::vector<SymMatrix>& R);

struct LmiReport {
  bool ok = false;
  double margin = 0.0;  // max eigenvalue of [M; I]^T R_delta [M; I], want <= 0
};
LmiReport check_composition_lmi(const NetworkSpec& net,
                                const std::vector<SymMatrix>& R, double tol);

/* per-subsystem internal input point sets induced by the coupling: block i
 * of M applied to every combination of neighbour grid outputs (deduplicated,
 * lexicographically sorted); throws NetworkError when the combination count
 * exceeds the enumeration guard */
std::vector<std::vector<Vec>> coupling_w_points(const NetworkSpec& net,
                                                const std::vector<const SymbolicModel*>& models,
                                                std::uint64_t guard = 4000000);

/* same computation from pre-quantized grids, for use before any transition
 * relation exists (identical arithmetic, hence identical point sets) */
std::vector<std::vector<Vec>> coupling_w_points_from_grids(
    const NetworkSpec& net, const std::vector<std::vector<IVec>>& grids, double eta,
    std::uint64_t guard = 4000000);

struct MatchReport {
  bool ok = false;          // stacked-set equality (blocks_ok && product_ok)
  bool inclusion_ok = false;  // coupling image fits inside the input sets per block
  bool blocks_ok = false;     // per-block value-set equality
  bool product_ok = false;    // stacked coupling image is a product set
  std::string reason;
};

/* equality between the stacked abstraction input sets and the coupling image
 * of the stacked abstraction output sets; decided exactly via per-block value
 * sets plus a product-structure test (each output block may feed at most one
 * input block, singletons aside).  The weaker per-block inclusion — enough for
 * the composed model to resolve every internal input it can ever produce — is
 * reported separately: couplings that sum several non-trivial output blocks
 * (e.g. all-to-all) cannot satisfy the product form, yet remain usable. */
MatchReport check_internal_input_match(const NetworkSpec& net,
                                       const std::vector<const SymbolicModel*>& models);

/* network simulation function data composed from per-subsystem storage */
struct AltSimFn {
  PowerK alpha_tilde;      // network lower gain
  double sigma_tilde = 0.0;
  double eps_tilde = 0.0;
};

AltSimFn compose_alt_sim(const NetworkSpec& net, const std::vector<AugStorageFn>& fns);

struct RelationBound {
  double psi = 0.0;     // splitting parameter in (0, 1)
  double phi = 0.0;     // sublevel threshold of the composed function
  double eps_hat = 0.0; // guaranteed sup-norm output mismatch
  double rho = 0.0;     // contraction rate of the sublevel recursion
};
RelationBound error_bound(const AltSimFn& fn, double psi);

/* lazy product view of per-subsystem symbolic models coupled through M */
struct NetworkModel {
  const NetworkSpec* net = nullptr;
  std::vector<const SymbolicModel*> models;

  struct State {
    std::vector<std::uint32_t> s;
    std::vector<int> p;
    std::vector<int> l;
    bool operator==(const State&) const = default;
    bool operator<(const State&) const;
  };

  /* all joint successors under per-subsystem next-mode requests; resolves
   * each subsystem's internal input through the coupling and takes the
   * product of the stored successor lists */
  std::vector<State> successors(const State& st, const std::vector<int>& u) const;
};

/* validates the internal input match before returning the view */
NetworkModel compose_symbolic_network(const NetworkSpec& net,
                                      const std::vector<const SymbolicModel*>& models);

}  // namespace symnet
