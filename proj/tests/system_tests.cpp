/* Boxes, grids, gain functions, and the switched-subsystem step.
 *
 * Derived expectations are recomputed inside the test (brute-force grid
 * scans, hand-expanded affine arithmetic); the traffic-link constants are
 * written out from their defining fractions so a transcription error in the
 * library cannot hide.
 */
#include <cmath>
#include <set>

#include "doctest.h"
#include "symnet/errors.hpp"
#include "symnet/rng.hpp"
#include "symnet/system.hpp"

using namespace symnet;

namespace {

Box box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  return Box{Vec(lo), Vec(hi)};
}

BoxUnion single(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  return BoxUnion{{box(lo, hi)}};
}

/* the two-cell road link used across the suite; mode 0 = green entry
 * (12 vehicles per period), mode 1 = red entry (no inflow) */
SwitchedSubsystem traffic_link() {
  const double r = 1.0 / 3.0;  // tau*v/d with tau=10/3600 h, v=120 km/h, d=1 km
  SwitchedSubsystem sub;
  sub.state_set = single({0, 0}, {60, 60});
  sub.internal_input_set = single({0}, {60});
  Mat A{{0.9 - r, 0}, {r, 0.65 - r}};
  Mat D{{r}, {0}};
  sub.modes.push_back({A, D, Vec{12, 0}, nullptr});
  sub.modes.push_back({A, D, Vec{0, 0}, nullptr});
  sub.C1 = Mat::identity(2);
  sub.C2 = Mat{{0, 1}};
  sub.dwell = 1;
  return sub;
}

}  // namespace

TEST_CASE("box membership and deflation") {
  Box b = box({0, 0}, {30, 30});
  CHECK(b.contains(Vec{0, 30}));
  CHECK_FALSE(b.contains(Vec{0, 30.001}));
  CHECK(b.contains(Vec{0, 30.001}, 1e-2));

  auto d = b.deflated(2.0);
  REQUIRE(d.has_value());
  CHECK(d->lo == Vec{2, 2});
  CHECK(d->hi == Vec{28, 28});

  CHECK_FALSE(box({0}, {1}).deflated(0.6).has_value());  // sides cross
  auto zero = box({0}, {1}).deflated(0.5);               // degenerate point allowed
  REQUIRE(zero.has_value());
  CHECK(zero->lo == zero->hi);
}

TEST_CASE("span is the smallest box edge") {
  CHECK(span(single({0, 0}, {2, 1})) == 1.0);
  BoxUnion u{{box({0}, {1}), box({5}, {5.3})}};
  CHECK(span(u) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(span(single({0, 0}, {60, 60})) == 60.0);
}

TEST_CASE("euclidean diameter") {
  CHECK(euclid_diameter(single({0, 0}, {1, 1})) == doctest::Approx(std::sqrt(2.0)));
  CHECK(euclid_diameter(single({0, 0}, {60, 60})) ==
        doctest::Approx(60.0 * std::sqrt(2.0)));
  BoxUnion u{{box({0}, {1}), box({5}, {5.3})}};
  CHECK(euclid_diameter(u) == doctest::Approx(5.3));
}

TEST_CASE("linear image uses exact interval arithmetic") {
  /* row [1, -1] over [0,2]x[0,3]: min = 0-3, max = 2-0 */
  BoxUnion img = linear_image(Mat{{1, -1}}, single({0, 0}, {2, 3}));
  REQUIRE(img.boxes.size() == 1);
  CHECK(img.boxes[0].lo == Vec{-3});
  CHECK(img.boxes[0].hi == Vec{2});

  /* identity maps a union box-by-box */
  BoxUnion u{{box({0}, {1}), box({5}, {5.3})}};
  BoxUnion img2 = linear_image(Mat{{2}}, u);
  REQUIRE(img2.boxes.size() == 2);
  CHECK(img2.boxes[1].hi == Vec{10.6});
}

TEST_CASE("power-law gains") {
  PowerK f{4, 2};
  CHECK(f(3.0) == 36.0);
  PowerK fi = f.inverse();
  for (double s : {0.25, 1.0, 7.5}) {
    CHECK(fi(f(s)) == doctest::Approx(s).epsilon(1e-12));
    CHECK(f(fi(s)) == doctest::Approx(s).epsilon(1e-12));
  }
  PowerK g{3, 1};
  for (double s : {0.3, 1.0, 2.7})
    CHECK(f.compose(g)(s) == doctest::Approx(f(g(s))).epsilon(1e-12));
}

TEST_CASE("quadratic gains") {
  QuadK q{2, 4};
  CHECK(q(1.0) == 6.0);
  CHECK(q(0.0) == 0.0);
  CHECK(q.scaled(0.5)(1.0) == 3.0);
  /* (2+1) * 2^2 + (4+1) * 2 */
  CHECK((q + QuadK{1, 1})(2.0) == doctest::Approx(12.0 + 10.0));
}

TEST_CASE("switched step evaluates the affine map") {
  SwitchedSubsystem sub = traffic_link();

  SUBCASE("green mode from (10,10) with w=5, expanded by hand") {
    /* x1+ = (0.9 - 1/3)*10 + (1/3)*5 + 12, x2+ = (1/3)*10 + (0.65 - 1/3)*10 */
    Vec next = step(sub, 0, Vec{10, 10}, Vec{5});
    CHECK(next[0] ==
          doctest::Approx((0.9 - 1.0 / 3) * 10 + 5.0 / 3 + 12).epsilon(1e-15));
    CHECK(next[1] == doctest::Approx(10.0 / 3 + (0.65 - 1.0 / 3) * 10).epsilon(1e-15));
    CHECK(next[1] == doctest::Approx(6.5).epsilon(1e-12));
  }
  SUBCASE("zero dynamics give the zero vector") {
    SwitchedSubsystem z;
    z.state_set = single({-1, -1}, {1, 1});
    z.internal_input_set = single({-1}, {1});
    z.modes.push_back({Mat::zero(2, 2), Mat::zero(2, 1), Vec{0, 0}, nullptr});
    z.C1 = Mat::identity(2);
    z.C2 = Mat::zero(0, 2);
    CHECK(step(z, 0, Vec{0.4, -0.7}, Vec{0.9}) == Vec{0, 0});
  }
  SUBCASE("identity dynamics return the state") {
    SwitchedSubsystem id;
    id.state_set = single({0, 0}, {3, 3});
    id.internal_input_set = BoxUnion{};
    id.modes.push_back({Mat::identity(2), Mat::zero(2, 0), Vec{0, 0}, nullptr});
    id.C1 = Mat::identity(2);
    id.C2 = Mat::zero(0, 2);
    CHECK(step(id, 0, Vec{1, 2}, Vec{}) == Vec{1, 2});
  }
}

TEST_CASE("step is affine in (x, w)") {
  Rng rng(99);
  SwitchedSubsystem sub = traffic_link();
  for (int trial = 0; trial < 50; ++trial) {
    const int p = static_cast<int>(rng.below(2));
    Vec x{rng.uniform(0, 30), rng.uniform(0, 30)};
    Vec xp{rng.uniform(0, 30), rng.uniform(0, 30)};
    Vec w{rng.uniform(0, 30)}, wp{rng.uniform(0, 30)};
    /* step(x+x', w+w') - step(x,w) - step(x',w') + step(0,0) vanishes */
    Vec lhs = vec_add(
        vec_sub(vec_sub(step(sub, p, vec_add(x, xp), vec_add(w, wp)),
                        step(sub, p, x, w)),
                step(sub, p, xp, wp)),
        step(sub, p, Vec{0, 0}, Vec{0}));
    CHECK(sup_norm(lhs) < 1e-12);
  }
}

TEST_CASE("output channels") {
  SwitchedSubsystem sub = traffic_link();
  CHECK(output1(sub, Vec{3, 7}) == Vec{3, 7});  // C1 = identity
  CHECK(output2(sub, Vec{3, 7}) == Vec{7});     // C2 = [0 1]
  sub.C1 = Mat::zero(2, 2);
  CHECK(output1(sub, Vec{3, 7}) == Vec{0, 0});
}

TEST_CASE("switching-signal dwell validation") {
  CHECK(validate_switching_signal({4, 4, 4, 4}, 3));
  CHECK(validate_switching_signal({1, 1, 2, 2, 1}, 2));  // gaps 2 and 2
  CHECK_FALSE(validate_switching_signal({1, 2, 1}, 2));  // gap 1
  CHECK(validate_switching_signal({1, 2, 1}, 1));
}

TEST_CASE("grid quantization") {
  SUBCASE("unit interval at half spacing") {
    auto pts = quantize_set(single({0}, {1}), 0.5);
    REQUIRE(pts.size() == 3);
    CHECK(pts[0] == IVec{0});
    CHECK(pts[1] == IVec{1});
    CHECK(pts[2] == IVec{2});
  }
  SUBCASE("unit square at half spacing has 9 points") {
    CHECK(quantize_set(single({0, 0}, {1, 1}), 0.5).size() == 9);
    CHECK(grid_point_count(single({0, 0}, {1, 1}), 0.5) == 9);
  }
  SUBCASE("interval with no aligned endpoints") {
    auto pts = quantize_set(single({0.2}, {0.9}), 0.5);
    REQUIRE(pts.size() == 1);
    CHECK(grid_point(pts[0], 0.5) == Vec{0.5});
  }
  SUBCASE("count formula cross-checked by scanning") {
    /* oracle: scan integer multiples directly */
    Box b = box({-1.3, 0.4}, {2.2, 3.0});
    const double eta = 0.7;
    std::set<IVec> brute;
    for (std::int64_t k0 = -10; k0 <= 10; ++k0)
      for (std::int64_t k1 = -10; k1 <= 10; ++k1) {
        Vec p{k0 * eta, k1 * eta};
        if (p[0] >= b.lo[0] && p[0] <= b.hi[0] && p[1] >= b.lo[1] && p[1] <= b.hi[1])
          brute.insert(IVec{k0, k1});
      }
    auto pts = quantize_set(BoxUnion{{b}}, eta);
    CHECK(pts.size() == brute.size());
    for (const IVec& k : pts) CHECK(brute.count(k) == 1);
  }
  SUBCASE("points lie inside and on multiples") {
    auto pts = quantize_set(single({0.2, -0.9}, {2.0, 1.1}), 0.3);
    BoxUnion s = single({0.2, -0.9}, {2.0, 1.1});
    for (const IVec& k : pts) {
      Vec p = grid_point(k, 0.3);
      CHECK(s.contains(p, 1e-12));
      for (std::size_t d = 0; d < p.size(); ++d)
        CHECK(std::abs(p[d] - std::round(p[d] / 0.3) * 0.3) < 1e-12);
    }
  }
  SUBCASE("overlapping boxes deduplicate") {
    BoxUnion u{{box({0}, {1}), box({0.5}, {1.5})}};
    CHECK(quantize_set(u, 0.5).size() == 4);  // {0, 0.5, 1.0, 1.5}
  }
  SUBCASE("grid parameter out of range") {
    CHECK_THROWS_AS(quantize_set(single({0}, {1}), 0.0), ParamError);
    CHECK_THROWS_AS(quantize_set(single({0}, {1}), -0.5), ParamError);
    CHECK_THROWS_AS(quantize_set(single({0}, {1}), 1.5), ParamError);
  }
}

TEST_CASE("snapping tolerates 1e-9-relative roundoff on box bounds") {
  /* 0.3 is not exactly representable; 3*0.1 differs from it by one ulp and
   * must still land on index 3 */
  CHECK(snap_ceil(3 * 0.1, 0.1) == 3);
  CHECK(snap_floor(3 * 0.1, 0.1) == 3);
  CHECK(snap_ceil(0.35, 0.1) == 4);
  CHECK(snap_floor(0.35, 0.1) == 3);
  CHECK(snap_ceil(-0.35, 0.1) == -3);
  CHECK(snap_floor(-0.35, 0.1) == -4);
}

TEST_CASE("subsystem validation rejects shape mismatches") {
  SwitchedSubsystem sub = traffic_link();
  CHECK_NOTHROW(validate_subsystem(sub));
  sub.C1 = Mat{{1, 0, 0}};  // three columns for a two-dimensional state
  CHECK_THROWS_AS(validate_subsystem(sub), InputError);
}
