#pragma once

#include <vector>

#include "ek/domain.hpp"

namespace ek {

// Table over `vars`, row-major with the last variable varying fastest.
struct Factor {
  std::vector<VarId> vars;
  std::vector<double> table;
};

struct FactorModel {
  Domain domain;
  std::vector<Factor> factors;

  // Checks var ids, table sizes and that entries are finite and nonnegative.
  void validate() const;
  std::size_t index(const Factor& f, const Assignment& x) const;
  // Unnormalized product of all factors at a full assignment.
  double value(const Assignment& x) const;
  bool strictly_positive() const;
};

}  // namespace ek
