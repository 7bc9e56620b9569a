/* errors.hpp
 *
 * Typed error hierarchy shared by the whole library.  Every failure the
 * library can report derives from symnet::Error so callers may catch broadly;
 * the concrete types separate configuration mistakes from mathematical
 * infeasibility (the CLI maps the former to exit code 2, the latter to 1).
 */
#pragma once

#include <stdexcept>
#include <string>

namespace symnet {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/* malformed values: shape mismatches, points outside their sets, ... */
struct InputError : Error {
  using Error::Error;
};

/* out-of-range scalar parameters (eta, kappa, psi, ...) */
struct ParamError : Error {
  using Error::Error;
};

/* dissipativity or dwell-time certificate failures */
struct CertificateError : Error {
  using Error::Error;
};

/* interconnection inconsistencies (coupling matrix shapes, input mismatch) */
struct NetworkError : Error {
  using Error::Error;
};

/* the safety fixed point came back empty */
struct SynthesisInfeasible : Error {
  int iterations = 0;
  SynthesisInfeasible(const std::string& what, int iters)
      : Error(what), iterations(iters) {}
};

/* concrete state not covered by the synthesized controller */
struct RefinementError : Error {
  using Error::Error;
};

/* corrupt, truncated or version-mismatched artifact files */
struct FormatError : Error {
  using Error::Error;
};

/* filesystem failures */
struct IoError : Error {
  using Error::Error;
};

}  // namespace symnet
