/* Symbolic models: successor semantics against a brute-force grid scan,
 * build determinism across worker counts, and the binary persistence format.
 */
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "symnet/abstraction.hpp"
#include "symnet/errors.hpp"
#include "symnet/rng.hpp"

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

/* independent successor oracle: scan every grid point of the state set and
 * keep those within eta (sup norm) of the one-step image */
std::set<IVec> brute_successors(const SwitchedSubsystem& sub, const IVec& xhat, int p,
                                const Vec& what, double eta) {
  const Vec img = step(sub, p, grid_point(xhat, eta), what);
  std::set<IVec> hits;
  for (const IVec& k : quantize_set(sub.state_set, eta)) {
    const Vec g = grid_point(k, eta);
    if (sup_norm(vec_sub(img, g)) <= eta) hits.insert(k);
  }
  return hits;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("successor enumeration on a one-dimensional example") {
  /* constant map to 0.6 over [0,1] at eta = 0.5: candidates 0, 0.5, 1.0 with
   * distances 0.6, 0.1, 0.4 -> {0.5, 1.0} */
  SwitchedSubsystem sub;
  sub.state_set = BoxUnion{{Box{{0}, {1}}}};
  sub.modes.push_back({Mat::zero(1, 1), Mat::zero(1, 0), Vec{0.6}, nullptr});
  sub.C1 = Mat::identity(1);
  sub.C2 = Mat::zero(0, 1);

  auto succ = abstract_successors(sub, IVec{0}, 0, Vec{}, 0.5);
  REQUIRE(succ.size() == 2);
  CHECK(succ[0] == IVec{1});
  CHECK(succ[1] == IVec{2});

  SUBCASE("image exactly on a grid point includes that point") {
    sub.modes[0].B = Vec{0.5};
    auto s2 = abstract_successors(sub, IVec{0}, 0, Vec{}, 0.5);
    CHECK(std::set<IVec>(s2.begin(), s2.end()).count(IVec{1}) == 1);
  }
  SUBCASE("image far outside the state set yields no successor") {
    sub.modes[0].B = Vec{2.0};  // distance to the nearest grid point is 1.0 > eta
    CHECK(abstract_successors(sub, IVec{0}, 0, Vec{}, 0.5).empty());
  }
}

TEST_CASE("halving dynamics on three grid cells") {
  /* x' = 0.5 x over [0,1], eta = 0.5.  From the cell at 1.0 the image is 0.5,
   * and every grid point is within 0.5 of it: |0.5-0| = 0.5, |0.5-0.5| = 0,
   * |0.5-1| = 0.5, so all three cells are successors. */
  SwitchedSubsystem sub;
  sub.state_set = BoxUnion{{Box{{0}, {1}}}};
  sub.modes.push_back({Mat{{0.5}}, Mat::zero(1, 0), Vec{0}, nullptr});
  sub.C1 = Mat::identity(1);
  sub.C2 = Mat::zero(0, 1);

  SymbolicModel model = build_symbolic_model(sub, 0.5, 0.0);
  CHECK(model.n_states() == 3);
  auto from_one = model.successors(2, 0, 0);  // grid index 2 = point 1.0
  REQUIRE(from_one.size() == 3);
  CHECK(model.grid[from_one[0]] == IVec{0});
  CHECK(model.grid[from_one[1]] == IVec{1});
  CHECK(model.grid[from_one[2]] == IVec{2});

  /* cross-check every cell against the brute-force oracle */
  for (std::size_t s = 0; s < model.n_states(); ++s) {
    auto brute = brute_successors(sub, model.grid[s], 0, Vec{}, 0.5);
    auto got = model.successors(s, 0, 0);
    REQUIRE(got.size() == brute.size());
    for (std::uint32_t t : got) CHECK(brute.count(model.grid[t]) == 1);
  }
}

TEST_CASE("grid size at the published quantization") {
  /* 60 / 0.03 = 2000 steps -> 2001 points per dimension */
  SwitchedSubsystem sub = traffic_link();
  CHECK(grid_point_count(sub.state_set, 0.03) == 2001ull * 2001ull);
}

TEST_CASE("desk-scale traffic model matches the brute-force oracle") {
  SwitchedSubsystem sub = traffic_link();
  SymbolicModel model = build_symbolic_model(sub, 1.0, 1.0);
  CHECK(model.n_states() == 61 * 61);
  CHECK(model.nw() == 61);
  CHECK(model.m == 2);

  Rng rng(321);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t s = rng.below(model.n_states());
    const int p = static_cast<int>(rng.below(2));
    const std::size_t wi = rng.below(model.nw());
    auto brute = brute_successors(sub, model.grid[s], p, model.wpoints[wi], 1.0);
    auto got = model.successors(s, p, wi);
    REQUIRE(got.size() == brute.size());
    for (std::uint32_t t : got) CHECK(brute.count(model.grid[t]) == 1);
  }
}

TEST_CASE("build is independent of the worker count") {
  SwitchedSubsystem sub = traffic_link();
  SymbolicModel one = build_symbolic_model(sub, 1.0, 1.0, nullptr, 1);
  SymbolicModel four = build_symbolic_model(sub, 1.0, 1.0, nullptr, 4);
  CHECK(one.digest() == four.digest());
  CHECK(one.offsets == four.offsets);
  CHECK(one.targets == four.targets);
}

TEST_CASE("non-progressing detection") {
  /* a map that jumps far outside the state set has no successors anywhere */
  SwitchedSubsystem sub;
  sub.state_set = BoxUnion{{Box{{0}, {1}}}};
  sub.modes.push_back({Mat{{1}}, Mat::zero(1, 0), Vec{0}, nullptr});   // identity
  sub.modes.push_back({Mat{{0}}, Mat::zero(1, 0), Vec{9}, nullptr});   // escape
  sub.C1 = Mat::identity(1);
  sub.C2 = Mat::zero(0, 1);
  SymbolicModel model = build_symbolic_model(sub, 0.5, 0.0);
  CHECK_FALSE(model.non_progressing(0, 0));
  CHECK(model.non_progressing(0, 1));
}

TEST_CASE("model persistence") {
  SwitchedSubsystem sub = traffic_link();
  SymbolicModel model = build_symbolic_model(sub, 1.0, 1.0);
  const std::string path = temp_path("symnet_model_roundtrip.smdl");

  SUBCASE("round-trip preserves everything") {
    save_model(model, path);
    SymbolicModel back = load_model(path);
    CHECK(back.eta == model.eta);
    CHECK(back.varpi == model.varpi);
    CHECK(back.dwell == model.dwell);
    CHECK(back.grid == model.grid);
    CHECK(back.wpoints == model.wpoints);
    CHECK(back.offsets == model.offsets);
    CHECK(back.targets == model.targets);
    CHECK(back.digest() == model.digest());

    /* saving the loaded model reproduces the file byte for byte */
    const std::string path2 = temp_path("symnet_model_roundtrip2.smdl");
    save_model(back, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), {});
    std::string b2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(b1 == b2);
    CHECK(!b1.empty());
    std::remove(path2.c_str());
  }
  SUBCASE("truncation is detected") {
    save_model(model, path);
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    in.close();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    out.close();
    CHECK_THROWS_AS(load_model(path), FormatError);
  }
  SUBCASE("payload corruption is detected via the digest") {
    save_model(model, path);
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(-9, std::ios::end);  // inside the transition payload
    char c = 0;
    f.read(&c, 1);
    f.seekp(-9, std::ios::end);
    c = static_cast<char>(c ^ 0x01);
    f.write(&c, 1);
    f.close();
    CHECK_THROWS_AS(load_model(path), FormatError);
  }
  std::remove(path.c_str());
}

TEST_CASE("abstract_successors rejects off-grid sources") {
  SwitchedSubsystem sub = traffic_link();
  CHECK_THROWS_AS(abstract_successors(sub, IVec{-3, 0}, 0, Vec{0}, 1.0), InputError);
}
