/* symnet: compositional symbolic models and safety controllers for networks
 * of discrete-time switched systems. */

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "symnet/driver.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "symnet - compositional symbolic models and safety controllers for "
      "networks of switched systems"};
  app.require_subcommand(1);

  symnet::RunFlags flags;
  std::string config_path;

  const auto add = [&](const char* name, const char* desc) {
    CLI::App* c = app.add_subcommand(name, desc);
    c->add_option("config", config_path, "network configuration file")
        ->required();
    c->add_option("--out", flags.out, "output directory (default: <config dir>/out)");
    c->add_option("--workers", flags.workers, "worker threads (0 = hardware)");
    c->add_option("--psi", flags.psi, "mismatch-bound splitting parameter in (0,1)");
    c->add_option("--policy", flags.policy, "simulation policy: lex, random, fair");
    c->add_option("--seed", flags.seed, "simulation seed")
        ->check(CLI::NonNegativeNumber);
    c->add_option("--tol", flags.tol, "numeric tolerance for feasibility checks");
    return c;
  };

  add("check-cert", "verify the per-mode storage certificates");
  add("abstract", "build and store the symbolic models");
  add("compose-check", "network dissipativity, input match, mismatch bound");
  add("synthesize", "solve the safety games and store the controllers");
  add("simulate", "closed-loop run of the concrete network");
  add("report", "summarize the configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  /* usage errors exit 2; --help exits 0 */
  }

  CLI::App* sub = app.get_subcommands().front();
  for (const CLI::Option* o : sub->get_options())
    if (o->get_name() == "--seed" && o->count() > 0) flags.seed_set = true;

  return symnet::run_command(sub->get_name(), config_path, flags, std::cout,
                             std::cerr);
}
