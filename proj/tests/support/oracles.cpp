#include "oracles.hpp"

#include <cmath>

namespace ek::testing {

Eigen::VectorXd bisection_project_simplex(const Eigen::VectorXd& v) {
  // sum(max(v - tau, 0)) is nonincreasing in tau
  double lo = v.minCoeff() - 1.0, hi = v.maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if ((v.array() - mid).max(0.0).sum() > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  const double tau = 0.5 * (lo + hi);
  return (v.array() - tau).max(0.0).matrix();
}

std::vector<Assignment> exact_samples(const Circuit& p, int n, Rng& rng) {
  const Domain& d = p.domain();
  std::vector<Assignment> states;
  std::vector<double> mass;
  Assignment x(d.size(), 0);
  for_each_state(d, d.all(), x, [&](const Assignment& s) {
    states.push_back(s);
    mass.push_back(evaluate(p, s));
  });
  std::vector<Assignment> out;
  for (int i = 0; i < n; ++i) out.push_back(states[categorical(rng, mass)]);
  return out;
}

MarginalTable enumerated_marginals(const Circuit& p) {
  const Domain& d = p.domain();
  MarginalTable out(d.size());
  for (VarId v = 0; v < d.size(); ++v) out[v].assign(d.card(v), 0.0);
  double z = 0.0;
  Assignment x(d.size(), 0);
  for_each_state(d, d.all(), x, [&](const Assignment& s) {
    const double px = evaluate(p, s);
    z += px;
    for (VarId v = 0; v < d.size(); ++v) out[v][s[v]] += px;
  });
  for (auto& row : out)
    for (double& a : row) a /= z;
  return out;
}

double mean_abs_error(const MarginalTable& a, const MarginalTable& b) {
  double total = 0.0;
  int count = 0;
  for (std::size_t v = 0; v < a.size(); ++v)
    for (std::size_t c = 0; c < a[v].size(); ++c) {
      total += std::abs(a[v][c] - b[v][c]);
      ++count;
    }
  return total / count;
}

double completion_average(const Circuit& p, const Assignment& x_s, const std::function<double(const Assignment&)>& f) {
  const Domain& d = p.domain();
  const double z = marginalize(p, x_s);
  double total = 0.0;
  Assignment x = x_s;
  for_each_state(d, d.all() - d.observed(x_s), x, [&](const Assignment& s) { total += evaluate(p, s) / z * f(s); });
  return total;
}

double conditional_average(const Circuit& p, Scope s, const Assignment& x, const Assignment& y,
                           const std::function<double(const Assignment&, const Assignment&)>& f) {
  const Domain& d = p.domain();
  Assignment ex(d.size(), kMissing), ey(d.size(), kMissing);
  for (VarId v : s.vars()) ex[v] = x[v], ey[v] = y[v];
  return completion_average(p, ex, [&](const Assignment& a) {
    return completion_average(p, ey, [&](const Assignment& b) { return f(a, b); });
  });
}

}  // namespace ek::testing
