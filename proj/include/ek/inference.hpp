#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ek/circuit.hpp"
#include "ek/rng.hpp"

namespace ek {

// Feedforward evaluator with reusable scratch space. Not thread-safe; use
// one per worker.
class Evaluator {
 public:
  explicit Evaluator(const UnitGraph& g) : g_(&g), values_(g.size()) {}

  // Full evaluation; x must assign every variable in the root scope.
  double operator()(const Assignment& x);
  // Unobserved input units contribute the sum of their weights.
  double marginal(const Assignment& evidence);
  // Kernel circuits: leaves read table[x_v][y_v].
  double paired(const Assignment& x, const Assignment& y);

 private:
  template <class Leaf>
  double run(Leaf&& leaf);

  const UnitGraph* g_;
  std::vector<double> values_;
};

double evaluate(const Circuit& c, const Assignment& x);
double marginalize(const Circuit& c, const Assignment& evidence);
double partition_function(const Circuit& c);

// Replaces every leaf for which `observed` returns a value by that constant
// and folds constants upward: zero branches are pruned, single-child sums
// and products alias their child, and the remaining multiplier ends up in
// scale(). Surviving units keep their relative order, so equal inputs give
// identical graphs. The vtree (if any) is restricted to the surviving scope.
UnitGraph fold_leaves(const UnitGraph& g,
                      const std::function<std::optional<double>(const Unit&)>& observed);

// Circuit over the unobserved variables computing c(x_s, x_c).
Circuit clamp(const Circuit& c, const Assignment& evidence);
// Circuit over the unobserved variables computing c(x_s, x_c) / c(x_s).
Circuit condition(const Circuit& c, const Assignment& evidence);

// Rescales parameters so every unit is normalized; scale() becomes 1.
Circuit normalize(const Circuit& c);

// Per-variable probability vectors indexed by category.
using MarginalTable = std::vector<std::vector<double>>;

// Per-variable marginals P(X_v = a | evidence) for v in the root scope;
// observed variables get point masses, variables outside the scope are empty.
MarginalTable variable_marginals(const Circuit& c,
                                                    const Assignment& evidence);

// Exact draws by top-down sampling of the locally normalized circuit.
std::vector<Assignment> sample(const Circuit& c, int n, Rng& rng);

}  // namespace ek
