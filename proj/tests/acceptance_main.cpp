#include <iostream>
#include <string>

#include "spdelab/runner.hpp"

// Dedicated acceptance binary: runs every criterion at its pinned tolerance
// and prints one pass/fail line each.  Exit 0 iff all pass.

int main(int argc, char** argv) {
  unsigned threads = 4;
  std::string out_dir = "acceptance_out";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--threads" && i + 1 < argc) {
      threads = static_cast<unsigned>(std::stoul(argv[++i]));
    } else if (arg == "--out" && i + 1 < argc) {
      out_dir = argv[++i];
    }
  }
  const int rc = spdelab::run_acceptance(std::cout, threads, out_dir);
  return rc == 0 ? 0 : 1;
}
