#include <doctest.h>

#include <cmath>

#include "ek/builders.hpp"
#include "ek/compile.hpp"
#include "ek/error.hpp"
#include "ek/importance.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace ek;
using namespace ek::testing;

namespace {

Eigen::MatrixXd random_psd(int n, Rng& rng) {
  Eigen::MatrixXd a(n, n / 2 + 1);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = uniform(rng, -1.0, 1.0);
  return a * a.transpose();
}

void check_feasible(const Eigen::VectorXd& w) {
  CHECK(std::abs(w.sum() - 1.0) <= 1e-9);
  CHECK(w.minCoeff() >= 0.0);
}

}  // namespace

TEST_CASE("simplex projection") {
  auto proj = [](std::vector<double> v) { return project_simplex(Eigen::Map<Eigen::VectorXd>(v.data(), v.size())); };
  const Eigen::VectorXd a = proj({0.6, 0.6});
  CHECK(a[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(a[1] == doctest::Approx(0.5).epsilon(1e-15));
  const Eigen::VectorXd b = proj({0.8, 0.4});
  CHECK(std::abs(b[0] - 0.7) <= 1e-15);
  CHECK(std::abs(b[1] - 0.3) <= 1e-15);
  const Eigen::VectorXd c = proj({0.2, 0.3, 0.5});
  CHECK(std::abs(c[0] - 0.2) <= 1e-15);
  CHECK(std::abs(c[2] - 0.5) <= 1e-15);

  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd v(1 + uniform_int(rng, 30));
    for (auto& e : v) e = uniform(rng, -2.0, 2.0);
    const Eigen::VectorXd w = project_simplex(v);
    check_feasible(w);
    CHECK((w - bisection_project_simplex(v)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK_THROWS_AS(project_simplex(Eigen::VectorXd::Constant(2, NAN)), Error);
}

TEST_CASE("simplex QP") {
  const QpResult id = solve_simplex_qp(Eigen::MatrixXd::Identity(2, 2));
  CHECK(std::abs(id.w[0] - 0.5) <= 1e-12);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 4.0;
  const QpResult dr = solve_simplex_qp(d);
  CHECK(std::abs(dr.w[0] - 0.8) <= 1e-9);
  CHECK(std::abs(dr.w[1] - 0.2) <= 1e-9);
  CHECK(solve_simplex_qp(Eigen::MatrixXd::Constant(1, 1, 3.0)).w[0] == 1.0);

  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + static_cast<int>(uniform_int(rng, 60));
    const Eigen::MatrixXd k = random_psd(n, rng);
    const QpResult r = solve_simplex_qp(k);
    check_feasible(r.w);
    CHECK(r.kkt <= 1e-6);
    CHECK(r.kkt == kkt_residual(k, r.w));
    CHECK(r.objective <= qp_objective(k, Eigen::VectorXd::Constant(n, 1.0 / n)) + 1e-15);
  }

  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(2, 2);
  asym(0, 1) = 1.0;
  CHECK_THROWS_AS(solve_simplex_qp(asym), Error);
}

TEST_CASE("gibbs proposals") {
  const Domain d({2, 2, 2});
  FactorModel uniform_model{d, {{{0, 1, 2}, std::vector<double>(8, 1.0)}}};
  ProposalConfig cfg;
  cfg.seed = 9;
  const auto xs = gibbs_propose(uniform_model, 5000, cfg);
  REQUIRE(xs.size() == 5000);
  for (VarId v = 0; v < 3; ++v) {
    double ones = 0;
    for (const auto& x : xs) ones += x[v];
    CHECK(ones / 5000 >= 0.45);
    CHECK(ones / 5000 <= 0.55);
  }
  CHECK(gibbs_propose(uniform_model, 5000, cfg) == xs);

  ProposalConfig one;
  one.burn_in = 0;
  one.thin = 1;
  one.seed = 4;
  GibbsChain chain(uniform_model, 4);
  chain.sweep();
  CHECK(gibbs_propose(uniform_model, 1, one) == std::vector<Assignment>{chain.state()});

  ProposalConfig col = cfg;
  col.sampled = Scope::of({0, 2});
  for (const auto& x : gibbs_propose(uniform_model, 10, col)) {
    CHECK(x[1] == kMissing);
    CHECK(x[0] != kMissing);
  }

  // circuit target: marginals of a long chain
  Rng rng(3);
  const FactorModel m = random_factor_model(Domain({2, 3, 2, 2}), rng, 4, 2);
  const Circuit p = compile_from_factors(m, Vtree::right_linear({0, 1, 2, 3}));
  ProposalConfig long_run;
  long_run.seed = 5;
  const auto cs = gibbs_propose(p, 20000, long_run);
  WeightedSamples ws{cs, Eigen::VectorXd::Constant(20000, 1.0 / 20000)};
  CHECK(mean_abs_error(estimate_marginals(ws, p.domain()), enumerated_marginals(p)) <= 0.02);

  // collapsed chain over X_{1,3}
  ProposalConfig cg = long_run;
  cg.sampled = Scope::of({1, 3});
  const auto cgs = collapsed_gibbs(p, 20000, cg);
  const MarginalTable exact = enumerated_marginals(p);
  for (int a = 0; a < 3; ++a) {
    double f = 0;
    for (const auto& x : cgs) f += x[1] == a;
    CHECK(std::abs(f / 20000 - exact[1][a]) <= 0.03);
  }
  CHECK(cgs[0][0] == kMissing);

  FactorModel zero{Domain({2}), {{{0}, {0.0, 1.0}}}};
  CHECK_THROWS_AS(gibbs_propose(zero, 3, cfg), Error);
  ProposalConfig bad;
  bad.thin = 0;
  CHECK_THROWS_AS(gibbs_propose(uniform_model, 3, bad), Error);
}

TEST_CASE("BBIS") {
  Rng rng(7);
  const Domain d(std::vector<int>(8, 2));
  const Vtree v = Vtree::right_linear(iota_vars(8));
  const Circuit p = random_structured_pc(d, v, rng);
  const KernelCircuit k = build_hamming_kc(d, v, default_hamming_lambda(d));

  const auto single = bbis(p, k, {random_assignment(d, rng)});
  CHECK(single.weights.size() == 1);
  CHECK(single.weights[0] == 1.0);

  const MarginalTable exact = enumerated_marginals(p);
  int wins = 0;
  for (int seed = 0; seed < 5; ++seed) {
    Rng srng(100 + seed);
    const auto xs = exact_samples(p, 200, srng);
    const WeightedSamples ws = bbis(p, k, xs);
    check_feasible(ws.weights);
    const Eigen::MatrixXd g = gram_matrix(p, k, xs);
    const Eigen::VectorXd uni = Eigen::VectorXd::Constant(200, 1.0 / 200);
    CHECK(qp_objective(g, ws.weights) <= qp_objective(g, uni));
    const Eigen::VectorXd snis =
        self_normalized_is_weights(p, [&](const Assignment& x) { return evaluate(p, x); }, xs);
    CHECK(qp_objective(g, ws.weights) <= qp_objective(g, snis) + 1e-15);
    const double werr = mean_abs_error(estimate_marginals(ws, d), exact);
    const double uerr = mean_abs_error(estimate_marginals(WeightedSamples{xs, uni}, d), exact);
    wins += werr <= uerr;
  }
  CHECK(wins >= 4);
}

TEST_CASE("CBBIS") {
  Rng rng(13);
  const Domain d({2, 3, 2, 2, 2});
  const Vtree v = Vtree::right_linear({4, 3, 2, 1, 0});
  const Circuit p = random_structured_pc(d, v, rng);
  const KernelCircuit k = build_hamming_kc(d, v, default_hamming_lambda(d));

  ProposalConfig cfg;
  cfg.seed = 21;
  cfg.burn_in = 20;
  const auto xs = gibbs_propose(p, 25, cfg);
  const WeightedSamples full = bbis(p, k, xs);
  const CbbisResult red = cbbis_weights(p, k, xs, d.all());
  REQUIRE(red.samples.size() == xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(std::abs(red.samples[i].weight - full.weights[i]) <= 1e-9);

  ProposalConfig all = cfg;
  all.sampled = d.all();
  const CbbisResult viacfg = cbbis(p, all, k, 25);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(viacfg.samples[i].weight == red.samples[i].weight);

  ProposalConfig half = cfg;
  half.sampled = d.all() - collapsed_set(d, 0.5);
  CHECK(collapsed_set(d, 0.5) == Scope::of({0, 1, 2}));
  const CbbisResult one = cbbis(p, half, k, 1);
  REQUIRE(one.samples.size() == 1);
  CHECK(one.samples[0].weight == 1.0);

  const CbbisResult res = cbbis(p, half, k, 30);
  CHECK(res.samples.size() == 30);
  CHECK(res.rejected == 0);
  double total = 0;
  for (const auto& s : res.samples) {
    total += s.weight;
    CHECK(s.x_s[0] == kMissing);
    CHECK(s.x_s[4] != kMissing);
    CHECK(s.conditional->root_scope() == Scope::of({0, 1, 2}));
  }
  CHECK(std::abs(total - 1.0) <= 1e-9);
  CHECK(cbbis(p, half, k, 30).samples[7].weight == res.samples[7].weight);
  const MarginalTable est = estimate_marginals(res.samples, d);
  for (const auto& row : est) {
    double s = 0;
    for (double a : row) s += a;
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
}

TEST_CASE("marginal estimators") {
  Rng rng(17);
  const Domain d({2, 3, 2});
  const Vtree v = Vtree::balanced({0, 1, 2});
  const Circuit p = random_structured_pc(d, v, rng);

  // enumeration weights proportional to p
  const auto states = all_states(d, d.all());
  Eigen::VectorXd w(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) w[i] = evaluate(p, states[i]);
  w /= w.sum();
  const MarginalTable est = estimate_marginals(WeightedSamples{states, w}, d);
  const MarginalTable exact = enumerated_marginals(p);
  for (VarId v2 = 0; v2 < 3; ++v2)
    for (int a = 0; a < d.card(v2); ++a) CHECK(std::abs(est[v2][a] - exact[v2][a]) <= 1e-10);

  // single sample
  const MarginalTable pt = estimate_marginals(WeightedSamples{{{1, 2, 0}}, Eigen::VectorXd::Ones(1)}, d);
  CHECK(pt[1][2] == 1.0);
  CHECK(pt[0][0] == 0.0);

  // collapsed coordinates of a factorized conditional
  const Circuit f = factorized_circuit(d, v, {{0.3, 0.7}, {0.2, 0.3, 0.5}, {0.9, 0.1}});
  const Assignment xs{1, kMissing, kMissing};
  auto cond = std::make_shared<Circuit>(condition(f, xs));
  const MarginalTable cm = estimate_marginals({CollapsedSample{xs, cond, 1.0}}, d);
  CHECK(cm[0][1] == 1.0);
  CHECK(std::abs(cm[1][2] - 0.5) <= 1e-15);
  CHECK(std::abs(cm[2][0] - 0.9) <= 1e-15);

  // SNIS weights
  const Eigen::VectorXd uw = self_normalized_is_weights(p, [&](const Assignment& x) { return evaluate(p, x); },
                                                        {states[0], states[3], states[5]});
  for (double e : uw) CHECK(std::abs(e - 1.0 / 3) <= 1e-15);
  const Circuit b = [] {
    GraphBuilder gb(Domain({2}));
    return gb.build_circuit(gb.add_input(0, {1.0, 3.0}));
  }();
  const Eigen::VectorXd r = self_normalized_is_weights(b, [](const Assignment&) { return 1.0; }, {{1}, {0}});
  CHECK(r[0] == 0.75);
  CHECK(r[1] == 0.25);
  CHECK_THROWS_AS(estimate_marginals(WeightedSamples{}, d), Error);
}
