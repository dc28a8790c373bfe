#pragma once

#include <stdexcept>
#include <string>

namespace dtperc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: graph files, event text, strategy specs, bad parameters.
class InputError : public Error {
 public:
  using Error::Error;
};

// Raised before an enumeration that would exceed its configured cap.
class SizeGuardError : public Error {
 public:
  using Error::Error;
};

// The graph or strategy does not satisfy the hypotheses of a check.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

// A strategy policy broke its contract (re-query, unknown edge).
class StrategyError : public Error {
 public:
  using Error::Error;
};

}  // namespace dtperc
