#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "ek/circuit.hpp"
#include "ek/factor_model.hpp"
#include "ek/inference.hpp"
#include "ek/kernel_circuit.hpp"
#include "ek/rng.hpp"
#include "ek/stein.hpp"

namespace ek {

// ---- simplex QP ----

// Euclidean projection onto {w >= 0, sum w = 1} by sorting.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v);

struct QpOptions {
  double tol = 1e-8;       // projected-gradient residual
  int max_iter = 100000;
  bool polish = true;      // exact solve on the final support
};

struct QpResult {
  Eigen::VectorXd w;
  double objective = 0.0;
  double kkt = 0.0;  // ||w - P(w - 2Kw)||_inf
  int iterations = 0;
  bool converged = false;
};

double qp_objective(const Eigen::MatrixXd& k, const Eigen::VectorXd& w);
double kkt_residual(const Eigen::MatrixXd& k, const Eigen::VectorXd& w);

// min w^T K w over the simplex: accelerated projected gradient with step
// 1/L (L from power iteration) and adaptive restart, then an optional
// active-set polish. Warns on stderr and returns the best iterate when the
// iteration cap is hit.
QpResult solve_simplex_qp(const Eigen::MatrixXd& k, const QpOptions& opt = {});

// ---- proposals ----

struct ProposalConfig {
  int burn_in = 100;
  int thin = 1;
  std::uint64_t seed = 0;
  // Collapsed mode: only these coordinates are reported, the rest kMissing.
  std::optional<Scope> sampled;
};

// Single-site Gibbs over a strictly positive target. Each sweep visits the
// variables in id order and resamples from the full conditional.
class GibbsChain {
 public:
  GibbsChain(const FactorModel& m, std::uint64_t seed);
  GibbsChain(const Circuit& p, std::uint64_t seed);

  void sweep();
  const Assignment& state() const { return x_; }

 private:
  void init();

  Domain domain_;
  // Unnormalized weights of X_i's categories with the rest of x fixed.
  std::function<void(VarId, Assignment&, std::vector<double>&)> conditional_;
  Rng rng_;
  Assignment x_;
  std::vector<double> buf_;
};

// Gibbs on the collapsed target p(x_s): full conditionals come from circuit
// marginals with X_c summed out.
class CollapsedGibbsChain {
 public:
  CollapsedGibbsChain(const Circuit& p, Scope s, std::uint64_t seed);
  void sweep();
  const Assignment& state() const { return x_; }

 private:
  const Circuit* p_;
  Scope s_;
  Rng rng_;
  Assignment x_;
  Evaluator ev_;
};

std::vector<Assignment> gibbs_propose(const FactorModel& m, int n, const ProposalConfig& cfg);
std::vector<Assignment> gibbs_propose(const Circuit& p, int n, const ProposalConfig& cfg);
// Collapsed Gibbs over cfg.sampled; states carry kMissing on X_c.
std::vector<Assignment> collapsed_gibbs(const Circuit& p, int n, const ProposalConfig& cfg);

// ---- weighting ----

struct WeightedSamples {
  std::vector<Assignment> samples;
  Eigen::VectorXd weights;
};

WeightedSamples bbis(const Circuit& p, const KernelCircuit& k, std::vector<Assignment> samples,
                     unsigned workers = default_workers());

struct CbbisResult {
  std::vector<CollapsedSample> samples;
  int rejected = 0;  // zero-probability x_s redrawn
  QpResult qp;
};

// Weights partial samples x_s (coordinates outside s ignored) by the
// conditional Stein kernel. Zero-probability x_s are dropped and counted.
CbbisResult cbbis_weights(const Circuit& p, const KernelCircuit& k, const std::vector<Assignment>& samples,
                          Scope s, unsigned workers = default_workers());
// Draws n partial samples from the Gibbs chain on p (redrawing rejected
// ones) and weights them.
CbbisResult cbbis(const Circuit& p, const ProposalConfig& proposal, const KernelCircuit& k, int n,
                  unsigned workers = default_workers());

// p(x)/q(x), normalized.
Eigen::VectorXd self_normalized_is_weights(const Circuit& p, const std::function<double(const Assignment&)>& q,
                                           const std::vector<Assignment>& samples);

MarginalTable estimate_marginals(const WeightedSamples& ws, const Domain& d);
// Sampled coordinates by weighted frequency, collapsed ones by the weighted
// conditional marginals.
MarginalTable estimate_marginals(const std::vector<CollapsedSample>& samples, const Domain& d);

// The collapsed set for fraction rho: the first ceil(rho * D) variables.
Scope collapsed_set(const Domain& d, double rho);

}  // namespace ek
