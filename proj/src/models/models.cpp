#include "ek/models.hpp"

#include <cmath>
#include <ostream>

#include "ek/error.hpp"
#include "ek/io.hpp"
#include "ek/rng.hpp"

namespace ek {

FactorModel build_ising(int rows, int cols, std::uint64_t seed, const IsingOptions& opt) {
  if (rows < 1 || cols < 1) fail(ErrorKind::InvalidInput, "Ising grid needs positive dimensions");
  if (rows * cols > 24) fail(ErrorKind::ResourceBound, "Ising grid limited to 24 spins");
  auto [jlo, jhi] = opt.coupling;
  auto [hlo, hhi] = opt.field;
  if (!(jlo <= jhi) || !(hlo <= hhi)) fail(ErrorKind::InvalidInput, "empty potential range");
  Rng rng(seed);
  FactorModel m{Domain(std::vector<int>(rows * cols, 2)), {}};
  auto id = [cols](int r, int c) { return r * cols + c; };
  auto edge = [&](int u, int v) {
    const double j = uniform(rng, jlo, jhi);
    m.factors.push_back({{u, v}, {std::exp(j), std::exp(-j), std::exp(-j), std::exp(j)}});
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edge(id(r, c), id(r, c + 1));
      if (r + 1 < rows) edge(id(r, c), id(r + 1, c));
    }
  for (int u = 0; u < rows * cols; ++u) {
    const double h = uniform(rng, hlo, hhi);
    m.factors.push_back({{u}, {std::exp(-h), std::exp(h)}});
  }
  if (!m.strictly_positive()) fail(ErrorKind::InvalidInput, "Ising potentials overflowed");
  return m;
}

MarginalTable exact_marginals(const FactorModel& m) {
  m.validate();
  const Domain& d = m.domain;
  require_states(d.num_states(d.all()), max_states(), "exact marginals");
  MarginalTable out(d.size());
  for (VarId v = 0; v < d.size(); ++v) out[v].assign(d.card(v), 0.0);
  double z = 0.0;
  Assignment x(d.size(), 0);
  for_each_state(d, d.all(), x, [&](const Assignment& s) {
    const double p = m.value(s);
    z += p;
    for (VarId v = 0; v < d.size(); ++v) out[v][s[v]] += p;
  });
  if (!(z > 0.0)) fail(ErrorKind::DegenerateEvidence, "model has no mass");
  for (auto& row : out)
    for (double& a : row) a /= z;
  return out;
}

double hellinger(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) fail(ErrorKind::InvalidInput, "distributions have different sizes");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::sqrt(a[i]) - std::sqrt(b[i]);
    s += d * d;
  }
  return std::sqrt(s / 2.0);
}

double hellinger_avg(const MarginalTable& a, const MarginalTable& b) {
  if (a.size() != b.size() || a.empty()) fail(ErrorKind::InvalidInput, "marginal tables do not match");
  double s = 0.0;
  for (std::size_t v = 0; v < a.size(); ++v) s += hellinger(a[v], b[v]);
  return s / static_cast<double>(a.size());
}

FactorModel parse_bayes_net(const std::string& text, double eps, std::ostream* warn) {
  if (!(eps >= 0.0)) fail(ErrorKind::InvalidInput, "smoothing must be nonnegative");
  FactorModel m = parse_factor_model(text);
  m.validate();
  for (std::size_t f = 0; f < m.factors.size(); ++f) {
    Factor& fac = m.factors[f];
    if (fac.vars.empty()) fail(ErrorKind::Parse, "CPT " + std::to_string(f) + " has no child variable");
    const int card = m.domain.card(fac.vars.back());
    for (std::size_t row = 0; row < fac.table.size(); row += card) {
      double s = 0.0;
      for (int a = 0; a < card; ++a) s += fac.table[row + a];
      if (!(s > 0.0)) fail(ErrorKind::Parse, "CPT " + std::to_string(f) + " has an all-zero row");
      if (std::abs(s - 1.0) > 1e-9) {
        if (warn)
          *warn << "warning: CPT " << f << " row " << row / card << " sums to " << s << ", renormalized\n";
        for (int a = 0; a < card; ++a) fac.table[row + a] /= s;
      }
      for (int a = 0; a < card; ++a) fac.table[row + a] = (fac.table[row + a] + eps) / (1.0 + card * eps);
    }
  }
  return m;
}

FactorModel load_bayes_net(const std::string& path, double eps, std::ostream* warn) {
  try {
    return parse_bayes_net(read_text_file(path), eps, warn);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse || e.kind() == ErrorKind::InvalidInput)
      fail(ErrorKind::Parse, path + ": " + e.what());
    throw;
  }
}

}  // namespace ek
