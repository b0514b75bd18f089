#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ek/factor_model.hpp"
#include "ek/inference.hpp"

namespace ek {

struct IsingOptions {
  std::pair<double, double> coupling{-0.5, 0.5};
  std::pair<double, double> field{-0.2, 0.2};
};

// Grid of binary spins, category 0 <-> -1 and 1 <-> +1. Edge factors
// exp(J sigma_u sigma_v) come first (right then down neighbour, row by row),
// then unary factors exp(h sigma_u); J and h are drawn in that order.
FactorModel build_ising(int rows, int cols, std::uint64_t seed, const IsingOptions& opt = {});

// Enumerates the normalized joint; capped by max_states().
MarginalTable exact_marginals(const FactorModel& m);

double hellinger(const std::vector<double>& a, const std::vector<double>& b);
double hellinger_avg(const MarginalTable& a, const MarginalTable& b);

// CPT factors (child last) in the factor-model format. Rows are smoothed
// to (p + eps) / (1 + card * eps); rows that do not sum to 1 are
// renormalized with a warning on `warn`.
FactorModel parse_bayes_net(const std::string& text, double eps = 1e-4, std::ostream* warn = nullptr);
FactorModel load_bayes_net(const std::string& path, double eps = 1e-4, std::ostream* warn = nullptr);

}  // namespace ek
