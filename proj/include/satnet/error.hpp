#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace satnet {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad input data: out-of-range field, malformed key, unknown name.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

// A caller broke an API precondition (mismatched timestamps, unplaced
// endpoint, degenerate geometry).
class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what) : Error(what) {}
};

// Attempt to connect an interface that is already part of a link.
class ConflictError : public Error {
 public:
  explicit ConflictError(const std::string& what) : Error(what) {}
};

// A frame could not be delivered; the message names the machine whose
// forwarding state was missing.
class DeliveryError : public Error {
 public:
  explicit DeliveryError(const std::string& what) : Error(what) {}
};

// Watch subscription starts below the store's compaction floor.
class StaleWatchError : public Error {
 public:
  explicit StaleWatchError(const std::string& what) : Error(what) {}
};

// A watcher queue overflowed because the consumer fell too far behind.
class WatchOverflowError : public Error {
 public:
  explicit WatchOverflowError(const std::string& what) : Error(what) {}
};

// Scenario validation collects every violation before failing.
class ScenarioError : public Error {
 public:
  ScenarioError(const std::string& what, std::vector<std::string> violations)
      : Error(what), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace satnet
