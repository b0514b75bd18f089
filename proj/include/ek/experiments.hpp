#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ek/circuit.hpp"
#include "ek/factor_model.hpp"
#include "ek/kernel_circuit.hpp"
#include "ek/svr.hpp"

namespace ek {

// Compiles along a right-linear vtree in decreasing id order, so the
// lowest ids (the default collapsed block) sit at the bottom of the spine.
Circuit compile_target(const FactorModel& m);

struct MarginalRow {
  std::string method;  // gibbs, bbis, cgs or cbbis
  int n = 0;
  std::uint64_t seed = 0;
  double avg_hellinger = 0.0;
  double wall_ms = 0.0;
};

struct MarginalSettings {
  double collapse = 0.5;  // fraction of variables marginalized, in [0, 1)
  int burn_in = 20;
  int thin = 1;
  bool baselines = false;
};

// One run per method on a shared Gibbs chain for p. gibbs and bbis use the
// full states, cbbis their projection onto the sampled set, cgs its own
// collapsed chain; collapsed estimates are Rao-Blackwellized. Hellinger is
// measured against the exact marginals of p.
std::vector<MarginalRow> run_marginal_experiment(const Circuit& p, const KernelCircuit& k, int n,
                                                 std::uint64_t seed, const MarginalSettings& s);

struct SvrRow {
  std::string method;  // expected, median or map
  double pi = 0.0;
  int trial = 0;
  double rmse = 0.0;
};

// Fits on `train`, then for every pi and trial hides test features
// completely at random and scores the three ways of predicting.
std::vector<SvrRow> run_svr_experiment(const Dataset& train, const Dataset& test, const Circuit& p,
                                       const KernelCircuit& k, double lambda, const std::vector<double>& pis,
                                       int trials, std::uint64_t seed);

}  // namespace ek
