/* Transition-system view of a switched subsystem: mode/dwell-counter
 * automaton and exact run equivalence with the raw recursion.
 *
 * The equivalence oracle is reimplemented here (plain loop over
 * x+ = A x + D w + B) so the comparison does not rely on the library's own
 * comparator.
 */
#include <vector>

#include "doctest.h"
#include "symnet/errors.hpp"
#include "symnet/rng.hpp"
#include "symnet/transition.hpp"

using namespace symnet;

namespace {

SwitchedSubsystem traffic_link() {
  const double r = 1.0 / 3.0;
  SwitchedSubsystem sub;
  sub.state_set = BoxUnion{{Box{{0, 0}, {60, 60}}}};
  sub.internal_input_set = BoxUnion{{Box{{0}, {60}}}};
  Mat A{{0.9 - r, 0}, {r, 0.65 - r}};
  Mat D{{r}, {0}};
  sub.modes.push_back({A, D, Vec{12, 0}, nullptr});
  sub.modes.push_back({A, D, Vec{0, 0}, nullptr});
  sub.C1 = Mat::identity(2);
  sub.C2 = Mat{{0, 1}};
  sub.dwell = 1;
  return sub;
}

/* random affine switched system over a box, dimensions and mode count drawn
 * from the generator */
SwitchedSubsystem random_affine(Rng& rng) {
  const int n = 1 + static_cast<int>(rng.below(3));
  const int wd = static_cast<int>(rng.below(3));  // 0, 1 or 2 internal inputs
  const int m = 1 + static_cast<int>(rng.below(3));
  SwitchedSubsystem sub;
  sub.state_set = BoxUnion{{Box{Vec(n, -10.0), Vec(n, 10.0)}}};
  if (wd > 0) sub.internal_input_set = BoxUnion{{Box{Vec(wd, -2.0), Vec(wd, 2.0)}}};
  for (int p = 0; p < m; ++p) {
    Mat A(n, n), D(n, wd);
    Vec B(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) = rng.uniform(-0.4, 0.4);
      for (int j = 0; j < wd; ++j) D(i, j) = rng.uniform(-0.5, 0.5);
      B[static_cast<std::size_t>(i)] = rng.uniform(-1, 1);
    }
    sub.modes.push_back({A, D, B, nullptr});
  }
  Mat C1(1 + static_cast<int>(rng.below(2)), n);
  for (int i = 0; i < C1.rows; ++i)
    for (int j = 0; j < n; ++j) C1(i, j) = rng.uniform(-1, 1);
  sub.C1 = C1;
  sub.C2 = Mat::zero(0, n);
  sub.dwell = 1 + static_cast<int>(rng.below(3));
  return sub;
}

/* dwell-admissible sequence of active modes, horizon+1 entries */
std::vector<int> random_mode_seq(Rng& rng, int m, int dwell, int horizon) {
  std::vector<int> seq;
  int p = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
  int held = 0;
  for (int t = 0; t <= horizon; ++t) {
    if (held >= dwell && m > 1 && rng.below(3) == 0) {
      int q = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
      if (q != p) {
        p = q;
        held = 0;
      }
    }
    seq.push_back(p);
    ++held;
  }
  return seq;
}

std::vector<Vec> random_w_seq(Rng& rng, int wd, int horizon) {
  std::vector<Vec> ws;
  for (int t = 0; t < horizon; ++t) {
    Vec w(static_cast<std::size_t>(wd));
    for (int d = 0; d < wd; ++d) w[static_cast<std::size_t>(d)] = rng.uniform(-2, 2);
    ws.push_back(w);
  }
  return ws;
}

}  // namespace

TEST_CASE("mode/counter automaton") {
  const int dwell = 3, m = 2;
  SUBCASE("holding increments the counter until it saturates") {
    CHECK(mode_counter_step(0, 0, 0, dwell, m) == std::pair{0, 1});
    CHECK(mode_counter_step(0, 1, 0, dwell, m) == std::pair{0, 2});
    CHECK(mode_counter_step(0, 2, 0, dwell, m) == std::pair{0, 2});  // saturated
  }
  SUBCASE("switching is only allowed at the saturated counter") {
    CHECK(mode_counter_step(0, 2, 1, dwell, m) == std::pair{1, 0});
    CHECK_THROWS_AS(mode_counter_step(0, 0, 1, dwell, m), InputError);
    CHECK_THROWS_AS(mode_counter_step(0, 1, 1, dwell, m), InputError);
  }
  SUBCASE("dwell one always allows switching") {
    CHECK(mode_counter_step(0, 0, 1, 1, m) == std::pair{1, 0});
    CHECK(mode_counter_step(1, 0, 1, 1, m) == std::pair{1, 0});
  }
  SUBCASE("invalid mode requests are rejected") {
    CHECK_THROWS_AS(mode_counter_step(0, 2, 5, dwell, m), InputError);
    CHECK_THROWS_AS(mode_counter_step(0, 2, -1, dwell, m), InputError);
  }
}

TEST_CASE("concrete successor validates membership") {
  SwitchedSubsystem sub = traffic_link();
  AugState s{Vec{10, 10}, 0, 0};
  AugState nxt = successor_concrete(sub, s, 1, Vec{5});
  CHECK(nxt.p == 1);
  CHECK(nxt.l == 0);
  CHECK_THROWS_AS(successor_concrete(sub, AugState{Vec{-1, 0}, 0, 0}, 0, Vec{5}),
                  InputError);
  CHECK_THROWS_AS(successor_concrete(sub, s, 0, Vec{61}), InputError);
}

TEST_CASE("runs") {
  SwitchedSubsystem sub = traffic_link();

  SUBCASE("horizon zero yields just the initial output") {
    Run r = generate_run(sub, Vec{4, 5}, {0}, {}, 0);
    REQUIRE(r.outputs.size() == 1);
    CHECK(r.outputs[0] == Vec{4, 5});
  }
  SUBCASE("two green steps from the empty road, iterated by hand") {
    /* x0 = [0,0] -> [12,0] -> [(17/30)*12 + 12, (1/3)*12] = [18.8, 4] */
    Run r = generate_run(sub, Vec{0, 0}, {0, 0, 0}, {Vec{0}, Vec{0}}, 2);
    REQUIRE(r.outputs.size() == 3);
    CHECK(r.outputs[0] == Vec{0, 0});
    CHECK(r.outputs[1] == Vec{12, 0});
    CHECK(r.outputs[2][0] == doctest::Approx(18.8).epsilon(1e-12));
    CHECK(r.outputs[2][1] == doctest::Approx(4.0).epsilon(1e-12));
  }
  SUBCASE("zero dynamics give a constant output run") {
    SwitchedSubsystem z;
    z.state_set = BoxUnion{{Box{{-1}, {1}}}};
    z.modes.push_back({Mat::zero(1, 1), Mat::zero(1, 0), Vec{0}, nullptr});
    z.C1 = Mat::identity(1);
    z.C2 = Mat::zero(0, 1);
    Run r = generate_run(z, Vec{0}, {0, 0, 0, 0}, {Vec{}, Vec{}, Vec{}}, 3);
    for (const Vec& y : r.outputs) CHECK(y == Vec{0});
  }
  SUBCASE("dwell violations in the mode sequence are rejected") {
    SwitchedSubsystem d = traffic_link();
    d.dwell = 2;
    CHECK_THROWS_AS(generate_run(d, Vec{0, 0}, {0, 1, 0}, {Vec{0}, Vec{0}}, 2),
                    InputError);
  }
}

TEST_CASE("transition-system runs equal the raw recursion exactly") {
  /* independent oracle: iterate the affine map directly, then compare
   * output sequences for bitwise equality */
  Rng rng(4242);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    SwitchedSubsystem sub = random_affine(rng);
    const int horizon = 20;
    std::vector<int> seq = random_mode_seq(rng, sub.n_modes(), sub.dwell, horizon);
    std::vector<Vec> ws = random_w_seq(rng, sub.wdim(), horizon);
    Vec x0(static_cast<std::size_t>(sub.dim()));
    for (int d = 0; d < sub.dim(); ++d)
      x0[static_cast<std::size_t>(d)] = rng.uniform(-1, 1);

    Run run = generate_run(sub, x0, seq, ws, horizon);

    Vec x = x0;
    for (int t = 0; t <= horizon; ++t) {
      Vec y = sub.C1 * x;
      REQUIRE(run.outputs[static_cast<std::size_t>(t)].size() == y.size());
      for (std::size_t d = 0; d < y.size(); ++d)
        CHECK(run.outputs[static_cast<std::size_t>(t)][d] == y[d]);  // exact
      if (t == horizon) break;
      const ModeDynamics& md = sub.modes[static_cast<std::size_t>(seq[static_cast<std::size_t>(t)])];
      Vec nx = md.A * x;
      if (sub.wdim() > 0) nx = vec_add(nx, md.D * ws[static_cast<std::size_t>(t)]);
      nx = vec_add(nx, md.B);
      x = nx;
      ++checked;
    }

    double dev = 1.0;
    CHECK(check_run_equivalence(sub, x0, seq, ws, horizon, &dev));
    CHECK(dev == 0.0);
  }
  CHECK(checked > 0);
}
