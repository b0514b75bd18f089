#include "ek/factor_model.hpp"

#include <cmath>

#include "ek/error.hpp"

namespace ek {

void FactorModel::validate() const {
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const Factor& fac = factors[f];
    std::size_t n = 1;
    Scope seen;
    for (VarId v : fac.vars) {
      domain.check_var(v);
      if (seen.contains(v)) fail(ErrorKind::InvalidInput, "factor " + std::to_string(f) + " repeats a variable");
      seen |= Scope::single(v);
      n *= static_cast<std::size_t>(domain.card(v));
    }
    if (fac.table.size() != n)
      fail(ErrorKind::InvalidInput, "factor " + std::to_string(f) + " table has " + std::to_string(fac.table.size()) +
                                        " entries, expected " + std::to_string(n));
    for (double t : fac.table)
      if (!std::isfinite(t) || t < 0.0)
        fail(ErrorKind::InvalidInput, "factor " + std::to_string(f) + " has a negative or non-finite entry");
  }
}

std::size_t FactorModel::index(const Factor& f, const Assignment& x) const {
  std::size_t idx = 0;
  for (VarId v : f.vars) idx = idx * static_cast<std::size_t>(domain.card(v)) + static_cast<std::size_t>(x[v]);
  return idx;
}

double FactorModel::value(const Assignment& x) const {
  double p = 1.0;
  for (const Factor& f : factors) p *= f.table[index(f, x)];
  return p;
}

bool FactorModel::strictly_positive() const {
  for (const Factor& f : factors)
    for (double t : f.table)
      if (!(t > 0.0)) return false;
  return true;
}

}  // namespace ek
