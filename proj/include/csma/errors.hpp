#pragma once

#include <stdexcept>
#include <string>

namespace csma {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A service rate sits exactly at 0 or 1.
struct DegenerateRateError : Error {
  using Error::Error;
};

// The local Gibbsian solve diverged or ran out of iterations: the requested
// local rates are on or outside the local capacity region.
struct InfeasibleLocalRatesError : Error {
  InfeasibleLocalRatesError(int link_, const std::string& what)
      : Error(what), link(link_) {}
  int link;
};

// Conflict-graph closed form hit s_i + s_k >= 1 on an edge.
struct RatePairOverloadError : Error {
  RatePairOverloadError(int link_a_, int link_b_, const std::string& what)
      : Error(what), link_a(link_a_), link_b(link_b_) {}
  int link_a;
  int link_b;
};

// A neighborhood is too large to enumerate its local feasible set.
struct EnumerationTooLargeError : Error {
  EnumerationTooLargeError(int link_, int neighborhood_size_,
                           const std::string& what)
      : Error(what), link(link_), neighborhood_size(neighborhood_size_) {}
  int link;
  int neighborhood_size;
};

// Targets outside the enumerated capacity region (global dual diverged).
struct TargetOutsideCapacityError : Error {
  using Error::Error;
};

// Malformed inputs: asymmetric adjacency, missing incoming fugacity, ...
struct StructuralError : Error {
  using Error::Error;
};

// Factor/variable marginals violate local consistency beyond tolerance.
struct InconsistentMarginalsError : Error {
  using Error::Error;
};

}  // namespace csma
