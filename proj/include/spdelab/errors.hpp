#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spdelab {

// Base class for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent user input (configs, bad operator classes, ...).
// The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// An assumption audit failed and blocks a requested certificate.
// The CLI maps this to exit code 3.
class AuditBlock : public Error {
 public:
  explicit AuditBlock(const std::string& what) : Error(what) {}
};

// A vector has infinite Cameron-Martin norm (zero covariance eigenvalue
// against a nonzero coefficient).  Distinct from numeric overflow.
class NotInCameronMartin : public Error {
 public:
  explicit NotInCameronMartin(const std::string& what) : Error(what) {}
};

// A trajectory crossed the divergence guard.
class SimulationDiverged : public Error {
 public:
  SimulationDiverged(std::uint32_t replica, std::uint32_t step,
                     const std::string& what)
      : Error(what), replica(replica), step(step) {}
  std::uint32_t replica;
  std::uint32_t step;
};

}  // namespace spdelab
