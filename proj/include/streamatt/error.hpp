#pragma once

#include <stdexcept>
#include <string>

namespace streamatt {

// Bad caller input: malformed files, invalid configs, shape mismatches.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Backend unreachable or protocol violation on the decode wire.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mock model asked about tokens that are not part of its script.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Broken internal invariant (caller passed inconsistent derived data).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace streamatt
