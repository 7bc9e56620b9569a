/* Configuration files: parsing, template expansion, serialization round
 * trips, the bundled network descriptions, and the error paths with their
 * key-path diagnostics.
 */
#include <string>

#include "doctest.h"
#include "symnet/config.hpp"
#include "symnet/errors.hpp"

using namespace symnet;

namespace {

const std::string kConfigDir = SYMNET_CONFIG_DIR;

void check_same_subsystem(const SwitchedSubsystem& a, const SwitchedSubsystem& b) {
  REQUIRE(a.state_set.boxes.size() == b.state_set.boxes.size());
  for (std::size_t i = 0; i < a.state_set.boxes.size(); ++i) {
    CHECK(a.state_set.boxes[i].lo == b.state_set.boxes[i].lo);
    CHECK(a.state_set.boxes[i].hi == b.state_set.boxes[i].hi);
  }
  REQUIRE(a.internal_input_set.boxes.size() == b.internal_input_set.boxes.size());
  for (std::size_t i = 0; i < a.internal_input_set.boxes.size(); ++i) {
    CHECK(a.internal_input_set.boxes[i].lo == b.internal_input_set.boxes[i].lo);
    CHECK(a.internal_input_set.boxes[i].hi == b.internal_input_set.boxes[i].hi);
  }
  CHECK(a.C1.a == b.C1.a);
  CHECK(a.C2.a == b.C2.a);
  CHECK(a.dwell == b.dwell);
  REQUIRE(a.modes.size() == b.modes.size());
  for (std::size_t p = 0; p < a.modes.size(); ++p) {
    CHECK(a.modes[p].A.a == b.modes[p].A.a);
    CHECK(a.modes[p].D.a == b.modes[p].D.a);
    CHECK(a.modes[p].B == b.modes[p].B);
  }
}

void check_same_config(const NetworkConfig& a, const NetworkConfig& b) {
  CHECK(a.name == b.name);
  REQUIRE(a.subs.size() == b.subs.size());
  for (std::size_t i = 0; i < a.subs.size(); ++i)
    check_same_subsystem(a.subs[i], b.subs[i]);

  CHECK(a.has_certs == b.has_certs);
  if (a.has_certs) {
    REQUIRE(a.certs.size() == b.certs.size());
    for (std::size_t i = 0; i < a.certs.size(); ++i) {
      const StorageCertificate& ca = a.certs[i];
      const StorageCertificate& cb = b.certs[i];
      REQUIRE(ca.Z.size() == cb.Z.size());
      for (std::size_t p = 0; p < ca.Z.size(); ++p) {
        CHECK(ca.Z[p].a == cb.Z[p].a);
        CHECK(ca.Q[p].a == cb.Q[p].a);
        CHECK(ca.alpha_lower[p].coeff == cb.alpha_lower[p].coeff);
        CHECK(ca.alpha_lower[p].exp == cb.alpha_lower[p].exp);
      }
      CHECK(ca.kappa == cb.kappa);
      CHECK(ca.theta == cb.theta);
      CHECK(ca.mu == cb.mu);
      CHECK(ca.eps_exp == cb.eps_exp);
      CHECK(ca.common == cb.common);
    }
  }

  CHECK(a.has_network == b.has_network);
  if (a.has_network) {
    CHECK(a.M.rows == b.M.rows);
    CHECK(a.M.cols == b.M.cols);
    CHECK(a.M.a == b.M.a);
    CHECK(a.mu_weights == b.mu_weights);
  }

  CHECK(a.has_abstraction == b.has_abstraction);
  if (a.has_abstraction) {
    CHECK(a.eta == b.eta);
    CHECK(a.varpi == b.varpi);
    CHECK(a.dwell == b.dwell);
  }

  CHECK(a.has_spec == b.has_spec);
  if (a.has_spec) {
    REQUIRE(a.safe.boxes.size() == b.safe.boxes.size());
    for (std::size_t i = 0; i < a.safe.boxes.size(); ++i) {
      CHECK(a.safe.boxes[i].lo == b.safe.boxes[i].lo);
      CHECK(a.safe.boxes[i].hi == b.safe.boxes[i].hi);
    }
    CHECK(a.fairness_limit == b.fairness_limit);
    CHECK(a.red_mode == b.red_mode);
    CHECK(a.psi == b.psi);
    CHECK(a.shrink == b.shrink);
    REQUIRE(a.assumed_outputs.boxes.size() == b.assumed_outputs.boxes.size());
    for (std::size_t i = 0; i < a.assumed_outputs.boxes.size(); ++i) {
      CHECK(a.assumed_outputs.boxes[i].lo == b.assumed_outputs.boxes[i].lo);
      CHECK(a.assumed_outputs.boxes[i].hi == b.assumed_outputs.boxes[i].hi);
    }
  }

  CHECK(a.has_sim == b.has_sim);
  if (a.has_sim) {
    CHECK(a.x0 == b.x0);
    CHECK(a.horizon == b.horizon);
    CHECK(a.seed == b.seed);
    CHECK(a.policy == b.policy);
  }
}

}  // namespace

TEST_CASE("three-link road network configuration") {
  NetworkConfig cfg = parse_config(kConfigDir + "/traffic.cfg");

  SUBCASE("template expansion and dynamics constants") {
    REQUIRE(cfg.subs.size() == 3);
    const SwitchedSubsystem& sub = cfg.subs[0];
    CHECK(sub.dim() == 2);
    CHECK(sub.wdim() == 1);
    REQUIRE(sub.n_modes() == 2);
    CHECK(sub.modes[0].A(0, 0) == 17.0 / 30.0);
    CHECK(sub.modes[0].A(1, 0) == 1.0 / 3.0);
    CHECK(sub.modes[0].A(1, 1) == 19.0 / 60.0);
    CHECK(sub.modes[0].D(0, 0) == 1.0 / 3.0);
    CHECK(sub.modes[0].B == Vec{12, 0});  // green admits the demand
    CHECK(sub.modes[1].B == Vec{0, 0});   // red blocks it
    CHECK(sub.C2.a == Mat{{0, 1}}.a);
    check_same_subsystem(cfg.subs[0], cfg.subs[1]);
    check_same_subsystem(cfg.subs[0], cfg.subs[2]);
  }
  SUBCASE("certificate constants") {
    REQUIRE(cfg.has_certs);
    REQUIRE(cfg.certs.size() == 3);
    const StorageCertificate& cert = cfg.certs[0];
    CHECK(cert.kappa == Vec{0.98, 0.98});
    CHECK(cert.Q[0](0, 0) == 0.3527);
    CHECK(cert.Q[0](0, 1) == 0.0937);
    CHECK(cert.Q[0](1, 1) == -0.6785);
    CHECK(cert.Z[0].a == SymMatrix::identity(2).a);
    CHECK(cert.alpha_lower[0].coeff == 1.0);
    CHECK(cert.alpha_lower[0].exp == 2.0);
    CHECK(cert.mu == 1.0);
    CHECK(cert.eps_exp == 1.01);
    CHECK(cert.common);
  }
  SUBCASE("ring coupling: each link reads its predecessor") {
    REQUIRE(cfg.has_network);
    REQUIRE(cfg.M.rows == 3);
    REQUIRE(cfg.M.cols == 3);
    CHECK(cfg.M(0, 2) == 1.0);
    CHECK(cfg.M(1, 0) == 1.0);
    CHECK(cfg.M(2, 1) == 1.0);
    CHECK(cfg.M(0, 0) == 0.0);
    CHECK(cfg.M(0, 1) == 0.0);
    CHECK(cfg.mu_weights == Vec{1, 1, 1});
  }
  SUBCASE("abstraction, requirement, and simulation blocks") {
    CHECK(cfg.eta == 1.0);
    CHECK(cfg.varpi == 1.0);
    CHECK(cfg.dwell == 1);
    REQUIRE(cfg.has_spec);
    CHECK(cfg.safe.boxes.front().hi == Vec{30, 30});
    CHECK(cfg.fairness_limit == 2);
    CHECK(cfg.red_mode == 1);
    CHECK(cfg.psi == 0.99);
    CHECK(cfg.assumed_outputs.boxes.front().hi == Vec{30});
    CHECK(cfg.shrink == -1.0);  // erode by the computed mismatch bound
    REQUIRE(cfg.has_sim);
    CHECK(cfg.x0 == std::vector<Vec>(3, Vec{10, 10}));
    CHECK(cfg.horizon == 1000);
    CHECK(cfg.seed == 1);
    CHECK(cfg.policy == "fair");
  }
  SUBCASE("network view") {
    NetworkSpec net = cfg.network();
    CHECK(net.subs.size() == 3);
    CHECK_NOTHROW(validate_network(net));
  }
}

TEST_CASE("five-subsystem benchmark configuration") {
  NetworkConfig cfg = parse_config(kConfigDir + "/fullnet.cfg");
  REQUIRE(cfg.subs.size() == 5);
  CHECK(cfg.subs[0].wdim() == 2);
  CHECK(cfg.subs[0].y2dim() == 2);

  REQUIRE(cfg.has_certs);
  const StorageCertificate& cert = cfg.certs[0];
  SUBCASE("per-mode storage matrices") {
    CHECK(cert.Z[0](0, 0) == 0.3030);
    CHECK(cert.Z[0](0, 1) == 0.0087);
    CHECK(cert.Z[0](1, 1) == 0.4938);
    CHECK(cert.Z[1](0, 0) == 0.4899);
    CHECK(cert.Z[1](0, 1) == -0.0033);
    CHECK(cert.Z[1](1, 1) == 0.4291);
    CHECK(cert.mu == 1.63);
    CHECK(cert.eps_exp == 1.01);
    CHECK(cert.kappa == Vec{0.7, 0.7});
    CHECK_FALSE(cert.common);
  }
  SUBCASE("supply matrices are symmetrized on read") {
    CHECK(cert.Q[0](0, 0) == 0.0027);
    CHECK(cert.Q[0](1, 1) == 0.001);
    /* asymmetric source entries -0.017 / -0.0017 average out */
    CHECK(cert.Q[0](2, 3) == (-0.017 + -0.0017) / 2.0);
    CHECK(cert.Q[0](2, 3) == cert.Q[0](3, 2));
    CHECK(cert.Q[1](0, 0) == 0.0029);
    CHECK(cert.Q[1](3, 3) == -0.294);
  }
  SUBCASE("all-to-all coupling with gain 0.015") {
    REQUIRE(cfg.has_network);
    CHECK(cfg.M.rows == 10);
    CHECK(cfg.M.cols == 10);
    CHECK(cfg.M(0, 0) == 0.0);  // no self-coupling
    CHECK(cfg.M(0, 2) == 0.015);
    CHECK(cfg.M(1, 3) == 0.015);
    CHECK(cfg.M(0, 3) == 0.0);  // channels couple component-wise
    CHECK(cfg.M(8, 0) == 0.015);
  }
  SUBCASE("abstraction parameters") {
    CHECK(cfg.eta == 0.1);
    CHECK(cfg.varpi == 0.1);
    CHECK(cfg.dwell == 3);
    CHECK(cfg.subs[0].dwell == 3);
    CHECK_FALSE(cfg.has_spec);
    CHECK_FALSE(cfg.has_sim);
  }
}

TEST_CASE("demo requirement with explicit margins") {
  NetworkConfig cfg = parse_config(kConfigDir + "/traffic-demo.cfg");
  REQUIRE(cfg.has_spec);
  CHECK(cfg.safe.boxes.front().hi == Vec{30, 15});
  CHECK(cfg.assumed_outputs.boxes.front().hi == Vec{15});
  CHECK(cfg.shrink == 0.0);
  CHECK(cfg.fairness_limit == 2);
}

TEST_CASE("serialization round trip is the identity on semantic content") {
  for (const char* name : {"/traffic.cfg", "/fullnet.cfg", "/traffic-demo.cfg"}) {
    CAPTURE(name);
    NetworkConfig a = parse_config(kConfigDir + name);
    NetworkConfig b = parse_config_text(serialize_config(a));
    check_same_config(a, b);
    /* serializing the reparse reproduces the same canonical text */
    CHECK(serialize_config(a) == serialize_config(b));
  }
}

TEST_CASE("parser error paths name the offending key") {
  const auto fails_with = [](const std::string& text, const std::string& needle) {
    try {
      parse_config_text(text);
      FAIL_CHECK("expected a ParamError mentioning '" << needle << "'");
    } catch (const ParamError& e) {
      const std::string what = e.what();
      CHECK(what.find(needle) != std::string::npos);
    }
  };

  SUBCASE("not even JSON") { fails_with("{oops", "not valid JSON"); }
  SUBCASE("non-object root") { fails_with("[1, 2]", "root must be an object"); }
  SUBCASE("template and list are mutually exclusive") {
    fails_with(R"({"subsystem": {}, "subsystems": []})", "either");
  }
  SUBCASE("missing output matrix") {
    fails_with(R"({"subsystem": {"state_box": [[0, 1]],
                   "modes": [{"A": [[1]]}]}})",
               "C1");
  }
  SUBCASE("both box forms at once") {
    fails_with(R"({"subsystem": {"state_box": [[0, 1]], "state_boxes": [[[0, 1]]],
                   "C1": [[1]], "modes": [{"A": [[1]]}]}})",
               "either state_box or state_boxes");
  }
  SUBCASE("ragged matrix literal") {
    fails_with(R"({"subsystem": {"state_box": [[0, 1], [0, 1]],
                   "C1": [[1, 0], [1]], "modes": [{"A": [[1, 0], [0, 1]]}]}})",
               "ragged");
  }
  SUBCASE("crossed box bounds") {
    fails_with(R"({"subsystem": {"state_box": [[1, 0]],
                   "C1": [[1]], "modes": [{"A": [[1]]}]}})",
               "lo must not exceed hi");
  }
  SUBCASE("nonpositive gain coefficient") {
    fails_with(R"({"subsystem": {"state_box": [[0, 1]], "C1": [[1]],
                   "modes": [{"A": [[0.5]]}]},
                   "certificate": {"Z": [[[1]]], "Q": [[[1]]],
                   "kappa": [0.5], "alpha": [[0, 2]]}})",
               "alpha[0]");
  }
  SUBCASE("certificate arity") {
    fails_with(R"({"subsystem": {"state_box": [[0, 1]], "C1": [[1]],
                   "modes": [{"A": [[0.5]]}, {"A": [[0.25]]}]},
                   "certificate": {"Z": [[[1]]], "Q": [[[1]], [[1]]],
                   "kappa": [0.5, 0.5], "alpha": [[1, 2], [1, 2]]}})",
               ".Z");
  }
  SUBCASE("psi out of range") {
    fails_with(R"({"subsystem": {"state_box": [[0, 1]], "C1": [[1]],
                   "modes": [{"A": [[0.5]]}]},
                   "spec": {"safe_box": [[0, 1]], "psi": 1.5}})",
               "spec.psi");
  }
  SUBCASE("unknown coupling pattern") {
    fails_with(R"({"subsystem": {"count": 2, "state_box": [[0, 1]],
                   "internal_input_box": [[0, 1]], "C1": [[1]], "C2": [[1]],
                   "modes": [{"A": [[0.5]], "D": [[0.25]]}]},
                   "network": {"coupling": {"pattern": "ring"}}})",
               "unknown pattern");
  }
  SUBCASE("coupling triple out of range") {
    fails_with(R"({"subsystem": {"count": 2, "state_box": [[0, 1]],
                   "internal_input_box": [[0, 1]], "C1": [[1]], "C2": [[1]],
                   "modes": [{"A": [[0.5]], "D": [[0.25]]}]},
                   "network": {"coupling": {"triples": [[5, 0, 1.0]]}}})",
               "out of range");
  }
  SUBCASE("weight arity") {
    fails_with(R"({"subsystem": {"count": 2, "state_box": [[0, 1]],
                   "internal_input_box": [[0, 1]], "C1": [[1]], "C2": [[1]],
                   "modes": [{"A": [[0.5]], "D": [[0.25]]}]},
                   "network": {"coupling": {"pattern": "cyclic_shift"},
                               "mu_weights": [1, 1, 1]}})",
               "mu_weights");
  }
  SUBCASE("initial state dimension") {
    fails_with(R"({"subsystem": {"state_box": [[0, 1]], "C1": [[1]],
                   "modes": [{"A": [[0.5]]}]},
                   "simulation": {"x0": [0.5, 0.5]}})",
               "simulation.x0");
  }
  SUBCASE("bad abstraction grid") {
    fails_with(R"({"abstraction": {"eta": -1},
                   "subsystem": {"state_box": [[0, 1]], "C1": [[1]],
                   "modes": [{"A": [[0.5]]}]}})",
               "abstraction.eta");
  }
}
