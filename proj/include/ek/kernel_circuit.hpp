#pragma once

#include <functional>
#include <string>

#include "ek/circuit.hpp"

namespace ek {

// Circuit over paired variables (X_i, X'_i). Leaves are KernelInput units
// whose table is indexed [left value][right value]; scopes are over the
// unpaired ids.
class KernelCircuit : public UnitGraph {
 public:
  KernelCircuit() = default;
  explicit KernelCircuit(UnitGraph g) : UnitGraph(std::move(g)) {}
};

enum class Side { Left, Right };

double evaluate_kernel(const KernelCircuit& k, const Assignment& x, const Assignment& y);

// Product of per-variable leaves arranged along `v`.
KernelCircuit build_product_kc(const Domain& d, const Vtree& v,
                               const std::function<double(VarId, int, int)>& leaf);
// exp(-lambda * Hamming(x, y)).
KernelCircuit build_hamming_kc(const Domain& d, const Vtree& v, double lambda);
// exp(-gamma * ||x - y||^2) with categories read as integers.
KernelCircuit build_rbf_kc(const Domain& d, const Vtree& v, double gamma);
inline double default_hamming_lambda(const Domain& d) { return 1.0 / d.size(); }

// "hamming", "hamming:<lambda>" or "rbf:<gamma>".
KernelCircuit kernel_from_spec(const std::string& spec, const Domain& d, const Vtree& v);

// Side::Left keeps the left argument free: f(x) = k(x, x_fixed).
// Side::Right gives f(y) = k(x_fixed, y).
Circuit project(const KernelCircuit& k, Side side, const Assignment& x_fixed);

// k with the cyclic successor (or its inverse) applied to variable i of
// one argument, by permuting rows or columns of the leaf tables on i.
KernelCircuit permute_kernel(const KernelCircuit& k, VarId i, Side side, bool inverse = false);

// Leaves on variables observed in `left`/`right` become the scalar
// table[left_v][right_v]; the result ranges over the unobserved block. Both
// arguments must observe the same variables.
KernelCircuit restrict_kernel(const KernelCircuit& k, const Assignment& left, const Assignment& right);

// Symmetric PSD leaves (eigenvalues >= -1e-9) and positive sum weights.
bool verify_pd(const KernelCircuit& k);

// Projection structure does not depend on the fixed point (only leaf
// payloads change), so the all-zeros projections are a sufficient witness.
bool check_kernel_compatible(const KernelCircuit& k, const UnitGraph& p, const UnitGraph& q);

KernelCircuit parse_kernel(const std::string& text);
KernelCircuit load_kernel(const std::string& path);
void save_kernel(const KernelCircuit& k, const std::string& path);

}  // namespace ek
