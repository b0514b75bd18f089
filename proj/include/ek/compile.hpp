#pragma once

#include <cstdint>

#include "ek/circuit.hpp"
#include "ek/factor_model.hpp"
#include "ek/vtree.hpp"

namespace ek {

struct CompileOptions {
  bool normalize = true;
  // Largest number of joint states of a left block enumerated at once.
  std::uint64_t block_cap = std::uint64_t{1} << 16;
  int max_vars = 24;
};

// Smooth, deterministic circuit respecting `v` that computes the factor
// product (normalized when requested). Shannon expansion runs down the
// right spine of `v`; every left block is enumerated jointly and encoded as
// an indicator product shaped by its own sub-vtree. Sub-functions are
// shared whenever the already-decided variables they depend on agree.
Circuit compile_from_factors(const FactorModel& m, const Vtree& v, const CompileOptions& opt = {});

}  // namespace ek
