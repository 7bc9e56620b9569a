#pragma once

/* Closed-loop simulation of a concrete network under refined controllers,
 * plus paired concrete/abstract runs that measure the output mismatch. */

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "symnet/abstraction.hpp"
#include "symnet/certificates.hpp"
#include "symnet/composition.hpp"
#include "symnet/synthesis.hpp"
#include "symnet/system.hpp"

namespace symnet {

enum class Policy { Lex, Random, Fair };

/* accepts "lex", "random", "fair" */
Policy parse_policy(const std::string& name);

struct SimOptions {
  int horizon = 100;
  Policy policy = Policy::Fair;
  std::uint64_t seed = 0;
  std::vector<int> initial_modes;  /* empty: smallest mode in each domain */
  BoxUnion safe;                   /* checked on every primary output; empty skips */
};

struct ClosedLoopLog {
  std::vector<NetState> states;            /* horizon + 1 entries */
  std::vector<std::vector<int>> fair;      /* fairness counters, horizon + 1 */
  std::vector<std::vector<int>> chosen;    /* requested modes, horizon */
  std::vector<std::vector<Vec>> wlog;      /* internal inputs, horizon */
  std::vector<std::uint8_t> safe_ok;       /* per state, horizon + 1 */
  bool all_safe = true;
};

/* refines each controller from the concrete state at every step; throws
 * RefinementError if a state leaves a controller domain */
ClosedLoopLog simulate_closed_loop(const NetworkSpec& net,
                                   const std::vector<const Controller*>& ctrls,
                                   const std::vector<Vec>& x0,
                                   const SimOptions& opt);

void export_csv(const ClosedLoopLog& log, const NetworkSpec& net, std::ostream& out);

/* concrete run against its abstraction: the abstract twin follows the same
 * mode sequence, snaps each internal input to the nearest model input point,
 * and picks the successor cell closest to the concrete state */
struct MismatchRun {
  std::vector<double> mismatch;  /* sup-norm primary-output gap, horizon + 1 */
  double max_mismatch = 0.0;
  bool within = true;            /* every gap at most bound + tol */
};

MismatchRun paired_run(const SwitchedSubsystem& sub, const SymbolicModel& model,
                       const Vec& x0, const std::vector<int>& mode_seq,
                       const std::vector<Vec>& w_seq, double bound,
                       double tol = 1e-9);

/* weighted network storage value at (x, xhat, l); relation membership is
 * value <= phi */
struct RelatednessReport {
  double value = 0.0;
  double phi = 0.0;
  bool related = false;
};

RelatednessReport check_relatedness(const NetworkSpec& net,
                                    const std::vector<AugStorageFn>& fns,
                                    const std::vector<Vec>& x,
                                    const std::vector<Vec>& xhat,
                                    const std::vector<int>& l, double phi);

}  // namespace symnet
