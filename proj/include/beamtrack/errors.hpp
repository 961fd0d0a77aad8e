#pragma once

#include <stdexcept>
#include <string>

namespace beamtrack {

// The stacked beam response g(theta) vanishes: the beams have a null at theta.
struct DegenerateDirectionError : std::runtime_error {
  explicit DegenerateDirectionError(const std::string& what) : std::runtime_error(what) {}
};

// The Fisher bracket is nonpositive: the beam pair carries no angle information at theta.
struct InformationDeficitError : std::runtime_error {
  explicit InformationDeficitError(const std::string& what) : std::runtime_error(what) {}
};

// Every candidate beam pair is information-deficient over the prior.
struct SelectionInfeasibleError : std::runtime_error {
  explicit SelectionInfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// Every grid bin in the search window is degenerate; no estimate can be formed.
struct EstimationFailureError : std::runtime_error {
  explicit EstimationFailureError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace beamtrack
