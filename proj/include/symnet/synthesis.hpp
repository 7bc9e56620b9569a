#pragma once

/* Safety-controller synthesis on a symbolic model.
 *
 * The game is played on states (s, p, l, c): grid cell, active mode, dwell
 * counter, and an optional fairness counter that tracks how many consecutive
 * steps the subsystem has spent in a designated mode.  The controller picks
 * the next-mode request u; the environment picks the internal input point and
 * the successor cell.  A move is admissible when every internal input point
 * admits at least one successor (a blocked branch counts as unsafe) and every
 * successor stays inside the current candidate set.  The maximal fixed point
 * of that operator is the winning region. */

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "symnet/abstraction.hpp"
#include "symnet/system.hpp"

namespace symnet {

struct SafetySpec {
  BoxUnion safe;            /* required region for the primary output */
  double shrink = 0.0;      /* sup-norm erosion applied before the game */
  int fairness_limit = -1;  /* max consecutive steps in red_mode; -1 disables */
  int red_mode = 0;
};

/* fairness counter semantics (limit < 0 disables the counter entirely) */
int fairness_initial(int p, int red_mode, int limit);
int fairness_next(int c, int p_next, int red_mode, int limit);
bool fairness_blocks(int c, int p_next, int red_mode, int limit);

struct Controller {
  double eta = 0.0;
  int dim = 0;
  int m = 1;
  int dwell = 1;
  int fairness_limit = -1;
  int red_mode = 0;
  double shrink = 0.0;
  std::uint64_t model_digest = 0;  /* ties the controller to its model */
  std::uint64_t spec_digest = 0;   /* ties it to the safety requirement */
  std::vector<IVec> grid;          /* sorted grid indices, copied from the model */
  std::vector<std::uint64_t> moves; /* flat (s,p,l,c) -> admissible-mode bitmask */

  int cdim() const { return fairness_limit < 0 ? 1 : fairness_limit + 1; }
  std::size_t n_states() const { return grid.size(); }
  std::size_t flat(std::size_t s, int p, int l, int c) const;
  std::uint64_t mask(std::size_t s, int p, int l, int c) const;
  std::optional<std::size_t> index_of(const IVec& k) const;
  std::size_t domain_size() const;  /* flat states with at least one move */
  std::uint64_t digest() const;
};

struct SynthesisResult {
  Controller controller;
  int iterations = 0;              /* synchronous sweeps until stable */
  std::size_t initial_states = 0;  /* game states inside the eroded safe set */
  std::size_t final_states = 0;    /* game states in the maximal fixed point */
};

/* never throws on an empty winning region; inspect final_states */
SynthesisResult solve_safety_game(const SymbolicModel& model, const SafetySpec& spec,
                                  int workers = 0);

/* convenience wrapper: throws SynthesisInfeasible when the region is empty */
Controller synthesize_controller(const SymbolicModel& model, const SafetySpec& spec,
                                 int workers = 0);

/* digest of a safety requirement, recorded in controller headers */
std::uint64_t spec_digest_of(const SafetySpec& spec);

/* keep only the internal input points inside `allowed`, reindexing every
 * transition block; the result is marked as having overridden inputs.  When
 * nothing survives the model keeps zero input points, which flags every
 * (state, mode) pair as non-progressing */
SymbolicModel restrict_internal_inputs(const SymbolicModel& model,
                                       const BoxUnion& allowed);

/* assume-guarantee form: the allowed set is the image of the assumed
 * neighbour-output set under this subsystem's row block of the coupling */
SymbolicModel restrict_internal_inputs(const SymbolicModel& model,
                                       const BoxUnion& assumed_outputs,
                                       const Mat& M_row_block);

/* per-dimension nearest grid index, lower cell on exact half-way ties */
IVec nearest_cell(const Vec& x, double eta);

/* admissible modes for a concrete state; throws RefinementError when the
 * nearest cell is missing from the grid or carries no move */
std::uint64_t refine_moves(const Controller& ctrl, const Vec& x, int p, int l, int c);

void save_controller(const Controller& c, const std::string& path);
Controller load_controller(const std::string& path);

/* ASCII table of the controller domain: cell coordinates, mode, counters,
 * and the admissible-mode bitmask */
void export_domain_csv(const Controller& c, std::ostream& out);

}  // namespace symnet
