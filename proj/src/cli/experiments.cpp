#include "ek/experiments.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>

#include "ek/compile.hpp"
#include "ek/error.hpp"
#include "ek/importance.hpp"
#include "ek/inference.hpp"
#include "ek/models.hpp"

namespace ek {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

Circuit compile_target(const FactorModel& m) {
  std::vector<VarId> order(m.domain.size());
  std::iota(order.rbegin(), order.rend(), 0);
  return compile_from_factors(m, Vtree::right_linear(order));
}

std::vector<MarginalRow> run_marginal_experiment(const Circuit& p, const KernelCircuit& k, int n,
                                                 std::uint64_t seed, const MarginalSettings& s) {
  const Domain& d = p.domain();
  if (n < 1) fail(ErrorKind::InvalidInput, "sample count must be positive");
  const Scope sampled = d.all() - collapsed_set(d, s.collapse);
  if (sampled.empty()) fail(ErrorKind::InvalidInput, "collapse fraction leaves no sampled variables");
  const MarginalTable exact = variable_marginals(p, Assignment(d.size(), kMissing));

  ProposalConfig cfg;
  cfg.burn_in = s.burn_in;
  cfg.thin = s.thin;
  cfg.seed = seed;
  ProposalConfig collapsed = cfg;
  collapsed.sampled = sampled;

  std::vector<MarginalRow> rows;
  auto push = [&](const char* method, const MarginalTable& est, double ms) {
    rows.push_back({method, n, seed, hellinger_avg(est, exact), ms});
  };

  if (s.baselines) {
    auto t0 = Clock::now();
    const std::vector<Assignment> xs = gibbs_propose(p, n, cfg);
    const double sample_ms = ms_since(t0);
    push("gibbs", estimate_marginals(WeightedSamples{xs, Eigen::VectorXd::Constant(n, 1.0 / n)}, d), sample_ms);

    t0 = Clock::now();
    const WeightedSamples ws = bbis(p, k, xs);
    push("bbis", estimate_marginals(ws, d), sample_ms + ms_since(t0));

    t0 = Clock::now();
    std::map<Assignment, std::shared_ptr<const Circuit>> conds;
    std::vector<CollapsedSample> cs;
    for (const auto& x : collapsed_gibbs(p, n, collapsed)) {
      auto& c = conds[x];
      if (!c) c = std::make_shared<Circuit>(condition(p, x));
      cs.push_back({x, c, 1.0 / n});
    }
    push("cgs", estimate_marginals(cs, d), ms_since(t0));
  }

  const auto t0 = Clock::now();
  const CbbisResult res = cbbis(p, collapsed, k, n);
  push("cbbis", estimate_marginals(res.samples, d), ms_since(t0));
  return rows;
}

std::vector<SvrRow> run_svr_experiment(const Dataset& train, const Dataset& test, const Circuit& p,
                                       const KernelCircuit& k, double lambda, const std::vector<double>& pis,
                                       int trials, std::uint64_t seed) {
  if (test.x.empty()) fail(ErrorKind::InvalidInput, "empty test set");
  if (trials < 1) fail(ErrorKind::InvalidInput, "need at least one trial");
  const Domain& d = p.domain();
  const SvrModel model = fit_kernel_regressor(train.x, train.y, k, lambda);
  const std::vector<int> medians = column_medians(train.x, d);
  const MapImputer map(p);
  Rng rng(seed);
  std::vector<SvrRow> rows;
  for (double pi : pis)
    for (int t = 0; t < trials; ++t) {
      double se[3] = {0.0, 0.0, 0.0};
      for (std::size_t r = 0; r < test.x.size(); ++r) {
        const MissingnessMask mask = mcar_mask(test.x[r], pi, rng);
        const double pred[3] = {expected_prediction(model, p, mask), svr_predict(model, impute_median(medians, mask)),
                                svr_predict(model, map(mask))};
        for (int m = 0; m < 3; ++m) se[m] += (pred[m] - test.y[r]) * (pred[m] - test.y[r]);
      }
      const char* names[3] = {"expected", "median", "map"};
      for (int m = 0; m < 3; ++m)
        rows.push_back({names[m], pi, t, std::sqrt(se[m] / static_cast<double>(test.x.size()))});
    }
  return rows;
}

}  // namespace ek
