#pragma once

/* Command orchestration behind the CLI: check-cert, abstract, compose-check,
 * synthesize, simulate, report.  Artifacts land in an output directory next
 * to the configuration file unless overridden. */

#include <cstdint>
#include <iosfwd>
#include <string>

namespace symnet {

struct RunFlags {
  std::string out;       /* output directory; empty = "<config dir>/out" */
  int workers = 0;       /* 0 = hardware concurrency */
  double psi = -1.0;     /* negative = take from the config */
  std::string policy;    /* empty = take from the config */
  bool seed_set = false;
  std::uint64_t seed = 0;
  double tol = 1e-9;
};

/* returns the process exit code: 0 success, 1 infeasible or certificate
 * failure, 2 usage or configuration errors */
int run_command(const std::string& command, const std::string& config_path,
                const RunFlags& flags, std::ostream& out, std::ostream& err);

}  // namespace symnet
