#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "spdelab/config.hpp"

namespace spdelab {

struct RunOptions {
  std::optional<std::string> out_override;
  std::optional<std::uint64_t> seed_override;
  unsigned threads = 1;
};

// Subcommands: simulate, certify, laplace, sweep, audit, accept.
// Returns the process exit code: 0 success, 2 config error, 3 audit failure
// blocking a certificate, 4 acceptance failure.
int run_subcommand(const std::string& subcommand,
                   const std::string& config_path, const RunOptions& opts,
                   std::ostream& log);

// The acceptance suite; prints one pass/fail line per criterion.
// Returns 0 when every criterion passes, 4 otherwise.  When out_dir is
// nonempty an acceptance.csv report is written there.
int run_acceptance(std::ostream& log, unsigned threads,
                   const std::string& out_dir);

}  // namespace spdelab
