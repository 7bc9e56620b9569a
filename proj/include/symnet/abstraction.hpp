/* abstraction.hpp
 *
 * Finite symbolic models of switched subsystems.  States are the grid points
 * of the state set (integer multi-indices scaled by eta); a grid point x'
 * is a successor of (x, p) under internal input w exactly when the affine
 * image f_p(x, w) lies within eta of x' in the sup norm.  Mode and dwell
 * counter dynamics are not stored: successor state sets depend only on
 * (state, mode, internal input), and the counter automaton is replayed on
 * demand, which compresses the relation considerably.
 *
 * Models serialize to a digest-checked binary format (docs/model-format.md).
 */
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "symnet/system.hpp"

namespace symnet {

struct SymbolicModel {
  double eta = 0.0;
  double varpi = 0.0;
  int dim = 0;
  int wdim = 0;
  int m = 0;      // number of modes
  int dwell = 1;  // minimum dwell time
  Mat C1;
  Mat C2;
  bool w_overridden = false;  // internal inputs imposed by the network builder

  std::vector<IVec> grid;     // lexicographically sorted grid points
  std::vector<Vec> wpoints;   // internal input points (one empty point if wdim==0)

  /* transitions in compressed sparse form; cell index is
   * (state * m + mode) * wpoints.size() + w index */
  std::vector<std::uint64_t> offsets;  // n_cells + 1 entries
  std::vector<std::uint32_t> targets;  // ascending grid indices per cell

  std::size_t n_states() const { return grid.size(); }
  std::size_t nw() const { return wpoints.size(); }
  std::size_t n_cells() const { return grid.size() * static_cast<std::size_t>(m) * nw(); }
  std::uint64_t cell(std::size_t s, int p, std::size_t wi) const {
    return (s * static_cast<std::size_t>(m) + static_cast<std::size_t>(p)) * nw() + wi;
  }
  std::span<const std::uint32_t> successors(std::size_t s, int p, std::size_t wi) const;

  /* true when some internal input leaves (s, p) without any successor */
  bool non_progressing(std::size_t s, int p) const;

  std::optional<std::uint32_t> index_of(const IVec& k) const;  // binary search
  Vec point(std::size_t s) const { return grid_point(grid[s], eta); }
  Vec out1(std::size_t s) const { return C1 * point(s); }
  Vec out2(std::size_t s) const { return C2 * point(s); }

  /* FNV-1a digest of the canonical payload; recorded in the file header */
  std::uint64_t digest() const;
};

/* successor grid points of (xhat, p) under internal input what: all grid
 * points of the state set within eta (sup norm) of the one-step image */
std::vector<IVec> abstract_successors(const SwitchedSubsystem& sub, const IVec& xhat,
                                      int p, const Vec& what, double eta);

/* build the full model; w_override replaces the varpi-quantized internal
 * input set (used when the network imposes coupling-image points); workers
 * split the grid into contiguous ranges, the result does not depend on the
 * worker count */
SymbolicModel build_symbolic_model(const SwitchedSubsystem& sub, double eta,
                                   double varpi,
                                   const std::vector<Vec>* w_override = nullptr,
                                   int workers = 1);

void save_model(const SymbolicModel& model, const std::string& path);
SymbolicModel load_model(const std::string& path);

}  // namespace symnet
