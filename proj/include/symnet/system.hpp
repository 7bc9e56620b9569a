/* system.hpp
 *
 * Core modelling vocabulary: hyper-rectangular sets and unions, power-law
 * gain functions, discrete-time switched subsystems with internal inputs,
 * and the uniform-grid helpers (integer multi-index quantization) every
 * other module builds on.
 *
 * Grid points are handled as integer multi-indices scaled by the grid
 * parameter; materializing coordinates late keeps set membership and
 * deduplication exact.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "symnet/matcert.hpp"

namespace symnet {

using IVec = std::vector<std::int64_t>;

/* closed axis-aligned box, lo[d] <= hi[d] required per dimension */
struct Box {
  Vec lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& x, double tol = 0.0) const;
  /* per-side deflation; returns empty optional when a side crosses */
  std::optional<Box> deflated(double shrink) const;
};

/* finite union of boxes over a common dimension */
struct BoxUnion {
  std::vector<Box> boxes;
  int dim() const { return boxes.empty() ? 0 : boxes.front().dim(); }
  bool contains(const Vec& x, double tol = 0.0) const;
  bool empty() const { return boxes.empty(); }
};

void validate_box(const Box& b);
void validate_box_union(const BoxUnion& s);

/* smallest edge length over all boxes of the union; any grid with
 * eta <= span(S) has at least one point inside every box */
double span(const BoxUnion& s);

/* Euclidean diameter of the union (max distance between two points) */
double euclid_diameter(const BoxUnion& s);

/* interval image of a box union under a linear map (exact row-wise interval
 * arithmetic; the image of each box is a box) */
BoxUnion linear_image(const Mat& m, const BoxUnion& s);

/* class-K-infinity power law s -> coeff * s^exp, closed under inversion
 * and composition */
struct PowerK {
  double coeff = 1.0;
  double exp = 1.0;
  double operator()(double s) const;
  PowerK inverse() const;               // (coeff, exp) -> (coeff^(-1/exp), 1/exp)
  PowerK compose(const PowerK& g) const;  // this after g
};

/* quadratic-plus-linear gain s -> quad*s^2 + lin*s (used for storage
 * perturbation bounds; evaluated only, never inverted) */
struct QuadK {
  double quad = 0.0;
  double lin = 0.0;
  double operator()(double s) const { return quad * s * s + lin * s; }
  QuadK scaled(double c) const { return {c * quad, c * lin}; }
};
QuadK operator+(const QuadK& x, const QuadK& y);

/* one mode of the switched dynamics x+ = A x + D w + B; an optional
 * black-box map can replace the affine form for experimentation, the
 * machine-checked certificates cover the affine form only */
struct ModeDynamics {
  Mat A;
  Mat D;   // dim x wdim, may have zero columns
  Vec B;
  std::function<Vec(const Vec&, const Vec&)> custom;  // overrides A,D,B if set
};

/* discrete-time switched subsystem with dwell time and two output channels:
 * external outputs y1 = C1 x and internal outputs y2 = C2 x (fed to
 * neighbours through the coupling matrix) */
struct SwitchedSubsystem {
  BoxUnion state_set;
  BoxUnion internal_input_set;  // dimension 0 means no internal channel
  std::vector<ModeDynamics> modes;
  Mat C1;
  Mat C2;
  int dwell = 1;                 // minimum dwell time, >= 1
  PowerK out_lipschitz{1.0, 1.0};  // class-K bound for ||C1 x - C1 x'|| vs ||x - x'||

  int dim() const { return state_set.dim(); }
  int wdim() const { return internal_input_set.dim(); }
  int n_modes() const { return static_cast<int>(modes.size()); }
  int y1dim() const { return C1.rows; }
  int y2dim() const { return C2.rows; }
};

void validate_subsystem(const SwitchedSubsystem& sub);

/* one step of mode p from x under internal input w */
Vec step(const SwitchedSubsystem& sub, int p, const Vec& x, const Vec& w);

Vec output1(const SwitchedSubsystem& sub, const Vec& x);
Vec output2(const SwitchedSubsystem& sub, const Vec& x);

/* a mode sequence is admissible when every maximal constant block except
 * possibly the last runs for at least the dwell time; the leading block
 * counts (initialization behaves like a fresh switch) */
bool validate_switching_signal(const std::vector<int>& modes, int dwell);

/* --- uniform grid helpers ----------------------------------------------- */

/* smallest/largest integer k with k*eta >= x resp. <= x; values within
 * 1e-9 relative of an exact multiple snap to it so box bounds that are
 * grid-aligned up to roundoff keep their boundary points */
std::int64_t snap_ceil(double x, double eta);
std::int64_t snap_floor(double x, double eta);

Vec grid_point(const IVec& k, double eta);

/* all points of s whose coordinates are integer multiples of eta,
 * deduplicated across boxes, lexicographically sorted */
std::vector<IVec> quantize_set(const BoxUnion& s, double eta);

/* exact number of such points (closed form per box, inclusion-exclusion
 * replaced by direct dedup when boxes overlap) */
std::uint64_t grid_point_count(const BoxUnion& s, double eta);

}  // namespace symnet
