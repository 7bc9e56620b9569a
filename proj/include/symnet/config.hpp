#pragma once

/* Network configuration files: JSON documents that describe the subsystems,
 * their storage certificates, the coupling, the abstraction parameters, the
 * safety requirement, and the simulation setup.  docs/config-format.md holds
 * the grammar. */

#include <cstdint>
#include <string>
#include <vector>

#include "symnet/certificates.hpp"
#include "symnet/composition.hpp"
#include "symnet/system.hpp"

namespace symnet {

struct NetworkConfig {
  std::string name;

  /* expanded subsystem list (templates with a count are unrolled) */
  std::vector<SwitchedSubsystem> subs;

  bool has_certs = false;
  std::vector<StorageCertificate> certs;  /* parallel to subs when present */

  bool has_network = false;
  Mat M;
  Vec mu_weights;  /* empty means all ones */

  bool has_abstraction = false;
  double eta = 0.0;
  double varpi = 0.0;
  int dwell = 1;

  bool has_spec = false;
  BoxUnion safe;
  int fairness_limit = -1;
  int red_mode = 0;
  double psi = 0.99;
  BoxUnion assumed_outputs;  /* per-subsystem internal-output assumption; empty = none */
  double shrink = -1.0;      /* negative: erode by the computed mismatch bound */

  bool has_sim = false;
  std::vector<Vec> x0;
  int horizon = 100;
  std::uint64_t seed = 0;
  std::string policy = "fair";

  NetworkSpec network() const;  /* non-owning view over subs/M/mu_weights */
};

/* throws ParamError with the offending key path on malformed input */
NetworkConfig parse_config_text(const std::string& text);
NetworkConfig parse_config(const std::string& path);

/* canonical JSON (sorted keys, expanded subsystems); parsing it back yields
 * the same semantic content */
std::string serialize_config(const NetworkConfig& cfg);

}  // namespace symnet
