#pragma once

#include <cstddef>
#include <cstdint>

#include "ek/circuit.hpp"
#include "ek/kernel_circuit.hpp"

namespace ek {

struct ExpectedKernelResult {
  double value = 0.0;
  std::size_t memo_entries = 0;
};

// E_{x~p, x'~q}[k(x, x')], dividing by the partition functions of p and q.
// Requires p, q compatible and k kernel-compatible with them.
double expected_kernel(const Circuit& p, const Circuit& q, const KernelCircuit& k);
ExpectedKernelResult expected_kernel_stats(const Circuit& p, const Circuit& q, const KernelCircuit& k,
                                           bool validate = true);

// E_{x~p}[f(x)] for a circuit f over the same scope, compatible with p.
double expected_product(const Circuit& p, const Circuit& f);

// E_{x~p}[k(x, x_fixed)] for Side::Left, E_{x~p}[k(x_fixed, x)] for Side::Right.
double singly_expected_kernel(const Circuit& p, const KernelCircuit& k, const Assignment& x_fixed, Side side);

double mmd2(const Circuit& p, const Circuit& q, const KernelCircuit& k);

// Enumeration over all state pairs.
double brute_force_expected_kernel(const Circuit& p, const Circuit& q, const KernelCircuit& k,
                                   std::uint64_t cap = std::uint64_t{1} << 16);

}  // namespace ek
