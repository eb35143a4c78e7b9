#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace contactdyn::io {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

//! Fast property suite: gradients, geometry round trips, diffusion
//! statistics and tactile fixtures.
std::vector<CheckResult> run_selfcheck(std::uint64_t seed);

}  // namespace contactdyn::io
