#pragma once

#include <vector>

#include "ek/circuit.hpp"
#include "ek/factor_model.hpp"
#include "ek/kernel_circuit.hpp"
#include "ek/rng.hpp"
#include "ek/vtree.hpp"

namespace ek::testing {

struct PcShape {
  int max_width = 2;
  double bare_product_prob = 0.2;
  double leaf_sum_prob = 0.3;
  double zero_weight_prob = 0.0;
  bool normalized = false;
};

std::vector<VarId> iota_vars(int n);
Assignment random_assignment(const Domain& d, Rng& rng);
// Exactly `observed` coordinates set, the rest kMissing.
Assignment random_evidence(const Domain& d, Rng& rng, int observed);
std::vector<Assignment> all_states(const Domain& d, Scope s);

// Smooth circuit structured along v with random sum/product nesting,
// shared products and unnormalized weights.
Circuit random_structured_pc(const Domain& d, const Vtree& v, Rng& rng, const PcShape& shape = {});
// Retries until the unit count lands in [lo, hi].
Circuit random_structured_pc_sized(const Domain& d, const Vtree& v, Rng& rng, int lo, int hi,
                                   const PcShape& shape = {});

// Positive mixture of two product kernels along v.
KernelCircuit kernel_mixture(const KernelCircuit& a, const KernelCircuit& b, double wa, double wb);
// Hamming, RBF or a mixture of the two.
KernelCircuit random_kernel(const Domain& d, const Vtree& v, Rng& rng);

FactorModel random_factor_model(const Domain& d, Rng& rng, int num_factors, int max_arity);
FactorModel grid_model(int rows, int cols, Rng& rng);

}  // namespace ek::testing
