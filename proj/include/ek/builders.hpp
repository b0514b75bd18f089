#pragma once

#include <vector>

#include "ek/circuit.hpp"
#include "ek/vtree.hpp"

namespace ek {

// Product of per-variable input units arranged along `v`.
Circuit factorized_circuit(const Domain& d, const Vtree& v, const std::vector<std::vector<double>>& leaf_weights);
// Point mass at x (must assign every variable of v).
Circuit point_mass(const Domain& d, const Vtree& v, const Assignment& x);
// Weighted mixture with a fresh sum root; components must share a scope.
Circuit mixture(const std::vector<const Circuit*>& parts, const std::vector<double>& weights);

}  // namespace ek
