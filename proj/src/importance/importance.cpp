#include "ek/importance.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <memory>

#include <Eigen/Dense>

#include "ek/error.hpp"

namespace ek {

// ---- simplex QP ----

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n == 0) fail(ErrorKind::InvalidInput, "cannot project an empty vector onto the simplex");
  if (!v.allFinite()) fail(ErrorKind::InvalidInput, "non-finite entry in simplex projection");
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, tau = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cum += u[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) tau = t;
  }
  return (v.array() - tau).max(0.0).matrix();
}

double qp_objective(const Eigen::MatrixXd& k, const Eigen::VectorXd& w) { return w.dot(k * w); }

double kkt_residual(const Eigen::MatrixXd& k, const Eigen::VectorXd& w) {
  return (w - project_simplex(w - 2.0 * (k * w))).cwiseAbs().maxCoeff();
}

namespace {

double largest_eigenvalue(const Eigen::MatrixXd& k) {
  const Eigen::Index n = k.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
  double lambda = 0.0;
  for (int it = 0; it < 300; ++it) {
    Eigen::VectorXd kv = k * v;
    const double norm = kv.norm();
    if (norm == 0.0) return 0.0;
    if (std::abs(norm - lambda) <= 1e-10 * norm) {
      lambda = norm;
      break;
    }
    lambda = norm;
    v = kv / norm;
  }
  // Gershgorin as a hard ceiling
  const double bound = k.cwiseAbs().rowwise().sum().maxCoeff();
  return std::min(lambda * 1.05, bound);
}

// Equality-constrained minimizer on the current support, dropping
// coordinates that go negative.
bool polish(const Eigen::MatrixXd& k, Eigen::VectorXd& w) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w[i] > 1e-10) support.push_back(i);
  for (int round = 0; round < 20 && !support.empty(); ++round) {
    const Eigen::Index m = static_cast<Eigen::Index>(support.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + 1, m + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) a(i, j) = 2.0 * k(support[i], support[j]);
      a(i, m) = a(m, i) = 1.0;
    }
    rhs[m] = 1.0;
    const Eigen::VectorXd sol = a.completeOrthogonalDecomposition().solve(rhs);
    if (!sol.allFinite()) return false;
    std::vector<Eigen::Index> next;
    for (Eigen::Index i = 0; i < m; ++i)
      if (sol[i] >= -1e-12) next.push_back(support[i]);
    if (next.size() < support.size()) {
      support = std::move(next);
      continue;
    }
    Eigen::VectorXd cand = Eigen::VectorXd::Zero(w.size());
    for (Eigen::Index i = 0; i < m; ++i) cand[support[i]] = std::max(sol[i], 0.0);
    cand = project_simplex(cand);
    const double f0 = qp_objective(k, w), f1 = qp_objective(k, cand);
    if (f1 > f0 + 1e-12 * std::max(1.0, std::abs(f0))) return false;
    if (kkt_residual(k, cand) > kkt_residual(k, w)) return false;
    w = cand;
    return true;
  }
  return false;
}

}  // namespace

QpResult solve_simplex_qp(const Eigen::MatrixXd& k, const QpOptions& opt) {
  const Eigen::Index n = k.rows();
  if (n == 0 || k.cols() != n) fail(ErrorKind::InvalidInput, "Gram matrix must be square and nonempty");
  if (!k.allFinite()) fail(ErrorKind::InvalidInput, "Gram matrix has non-finite entries");
  const double asym = (k - k.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * std::max(1.0, k.cwiseAbs().maxCoeff()))
    fail(ErrorKind::InvalidInput, "Gram matrix is not symmetric");

  QpResult res;
  res.w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  if (n == 1) {
    res.objective = qp_objective(k, res.w);
    res.converged = true;
    return res;
  }
  double lip = 2.0 * largest_eigenvalue(k);
  if (lip <= 0.0) {
    res.objective = qp_objective(k, res.w);
    res.kkt = kkt_residual(k, res.w);
    res.converged = true;
    return res;
  }

  Eigen::VectorXd w = res.w, kw = k * w, y = w, ky = kw;
  double fw = w.dot(kw), t = 1.0;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    const Eigen::VectorXd wn = project_simplex(y - (2.0 / lip) * ky);
    const Eigen::VectorXd kwn = k * wn;
    const double fn = wn.dot(kwn);
    if (fn > fw) {
      // restart momentum; a plain step that still increases f means L was too small
      if (t == 1.0) lip *= 2.0;
      t = 1.0;
      y = w;
      ky = kw;
      continue;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / tn;
    y = wn + beta * (wn - w);
    ky = kwn + beta * (kwn - kw);
    w = wn;
    kw = kwn;
    fw = fn;
    t = tn;
    if (it % 10 == 0 && (w - project_simplex(w - 2.0 * kw)).cwiseAbs().maxCoeff() <= opt.tol) {
      res.converged = true;
      break;
    }
    if (opt.polish && it > 0 && it % 500 == 0) {
      Eigen::VectorXd trial = w;
      if (polish(k, trial) && kkt_residual(k, trial) <= opt.tol) {
        w = trial;
        res.converged = true;
        break;
      }
    }
  }
  res.iterations = it;
  if (opt.polish) polish(k, w);
  res.w = project_simplex(w);
  res.objective = qp_objective(k, res.w);
  res.kkt = kkt_residual(k, res.w);
  if (res.kkt <= opt.tol) res.converged = true;
  if (!res.converged)
    std::cerr << "warning: simplex QP stopped after " << it << " iterations, residual " << res.kkt << "\n";
  return res;
}

// ---- proposals ----

GibbsChain::GibbsChain(const FactorModel& m, std::uint64_t seed) : domain_(m.domain), rng_(seed) {
  m.validate();
  auto model = std::make_shared<FactorModel>(m);
  auto touching = std::make_shared<std::vector<std::vector<int>>>(m.domain.size());
  for (std::size_t f = 0; f < m.factors.size(); ++f)
    for (VarId v : m.factors[f].vars) (*touching)[v].push_back(static_cast<int>(f));
  conditional_ = [model, touching](VarId i, Assignment& x, std::vector<double>& out) {
    const int keep = x[i];
    out.assign(model->domain.card(i), 1.0);
    for (int a = 0; a < model->domain.card(i); ++a) {
      x[i] = a;
      for (int f : (*touching)[i]) out[a] *= model->factors[f].table[model->index(model->factors[f], x)];
    }
    x[i] = keep;
  };
  init();
}

GibbsChain::GibbsChain(const Circuit& p, std::uint64_t seed) : domain_(p.domain()), rng_(seed) {
  if (p.root_scope() != p.domain().all()) fail(ErrorKind::InvalidInput, "Gibbs target must cover every variable");
  auto ev = std::make_shared<Evaluator>(p);
  conditional_ = [ev, &p](VarId i, Assignment& x, std::vector<double>& out) {
    const int keep = x[i];
    out.resize(p.domain().card(i));
    for (int a = 0; a < p.domain().card(i); ++a) {
      x[i] = a;
      out[a] = (*ev)(x);
    }
    x[i] = keep;
  };
  init();
}

void GibbsChain::init() {
  x_.assign(domain_.size(), 0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (VarId v = 0; v < domain_.size(); ++v) x_[v] = static_cast<int>(uniform_int(rng_, domain_.card(v)));
    // circuits: this is p(x); factor models only touch X_0's factors
    conditional_(0, x_, buf_);
    if (buf_[x_[0]] > 0.0) return;
  }
  fail(ErrorKind::ZeroProbability, "no positive-probability starting state found for the Gibbs chain");
}

void GibbsChain::sweep() {
  for (VarId i = 0; i < domain_.size(); ++i) {
    conditional_(i, x_, buf_);
    const int a = categorical(rng_, buf_);
    if (a < 0) fail(ErrorKind::ZeroProbability, "full conditional of X" + std::to_string(i) + " vanishes");
    x_[i] = a;
  }
}

CollapsedGibbsChain::CollapsedGibbsChain(const Circuit& p, Scope s, std::uint64_t seed)
    : p_(&p), s_(s), rng_(seed), ev_(p) {
  if (s.empty() || !s.subset_of(p.root_scope())) fail(ErrorKind::InvalidInput, "bad sampled set for collapsed Gibbs");
  if (!p.smooth() || !p.decomposable())
    fail(ErrorKind::StructuralPrecondition, "collapsed Gibbs needs a smooth and decomposable circuit");
  const Domain& d = p.domain();
  x_.assign(d.size(), kMissing);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (VarId v : s.vars()) x_[v] = static_cast<int>(uniform_int(rng_, d.card(v)));
    if (ev_.marginal(x_) > 0.0) return;
  }
  fail(ErrorKind::ZeroProbability, "no positive-probability starting state found for collapsed Gibbs");
}

void CollapsedGibbsChain::sweep() {
  std::vector<double> w;
  for (VarId i : s_.vars()) {
    const int keep = x_[i];
    w.assign(p_->domain().card(i), 0.0);
    for (int a = 0; a < static_cast<int>(w.size()); ++a) {
      x_[i] = a;
      w[a] = ev_.marginal(x_);
    }
    x_[i] = keep;
    const int a = categorical(rng_, w);
    if (a < 0) fail(ErrorKind::ZeroProbability, "collapsed conditional of X" + std::to_string(i) + " vanishes");
    x_[i] = a;
  }
}

namespace {

void check_config(const ProposalConfig& cfg, int n) {
  if (n < 0) fail(ErrorKind::InvalidInput, "negative sample count");
  if (cfg.burn_in < 0 || cfg.thin < 1) fail(ErrorKind::InvalidInput, "need burn_in >= 0 and thin >= 1");
  if (cfg.sampled && cfg.sampled->empty()) fail(ErrorKind::InvalidInput, "collapsed mode needs a nonempty sampled set");
}

Assignment project_to(const Assignment& x, const std::optional<Scope>& s) {
  if (!s) return x;
  Assignment out(x.size(), kMissing);
  for (VarId v : s->vars()) out[v] = x[v];
  return out;
}

template <class Chain>
std::vector<Assignment> run_chain(Chain& chain, int n, const ProposalConfig& cfg) {
  for (int b = 0; b < cfg.burn_in; ++b) chain.sweep();
  std::vector<Assignment> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < cfg.thin; ++t) chain.sweep();
    out.push_back(project_to(chain.state(), cfg.sampled));
  }
  return out;
}

}  // namespace

std::vector<Assignment> gibbs_propose(const FactorModel& m, int n, const ProposalConfig& cfg) {
  check_config(cfg, n);
  if (!m.strictly_positive()) fail(ErrorKind::ZeroProbability, "Gibbs proposal needs a strictly positive model");
  GibbsChain chain(m, cfg.seed);
  return run_chain(chain, n, cfg);
}

std::vector<Assignment> gibbs_propose(const Circuit& p, int n, const ProposalConfig& cfg) {
  check_config(cfg, n);
  GibbsChain chain(p, cfg.seed);
  return run_chain(chain, n, cfg);
}

std::vector<Assignment> collapsed_gibbs(const Circuit& p, int n, const ProposalConfig& cfg) {
  check_config(cfg, n);
  if (!cfg.sampled) fail(ErrorKind::InvalidInput, "collapsed Gibbs needs a sampled set");
  CollapsedGibbsChain chain(p, *cfg.sampled, cfg.seed);
  return run_chain(chain, n, cfg);
}

// ---- weighting ----

WeightedSamples bbis(const Circuit& p, const KernelCircuit& k, std::vector<Assignment> samples, unsigned workers) {
  if (samples.empty()) fail(ErrorKind::InvalidInput, "BBIS needs at least one sample");
  WeightedSamples out;
  out.weights = solve_simplex_qp(gram_matrix(p, k, samples, workers)).w;
  out.samples = std::move(samples);
  return out;
}

CbbisResult cbbis_weights(const Circuit& p, const KernelCircuit& k, const std::vector<Assignment>& samples, Scope s,
                          unsigned workers) {
  if (s.empty()) fail(ErrorKind::InvalidInput, "CBBIS needs a nonempty sampled set");
  ConditionalStein engine(p, k, s);
  CbbisResult res;
  std::vector<Assignment> kept;
  std::vector<std::shared_ptr<const Circuit>> conds;
  Evaluator ev(p);
  for (const auto& x : samples) {
    const Assignment xs = project_to(x, s);
    if (!(ev.marginal(xs) > 0.0)) {
      ++res.rejected;
      continue;
    }
    kept.push_back(xs);
    conds.push_back(engine.conditional(xs));
  }
  if (kept.empty()) fail(ErrorKind::ZeroProbability, "every partial sample has zero probability");
  res.qp = solve_simplex_qp(engine.gram(kept, workers));
  for (std::size_t i = 0; i < kept.size(); ++i) res.samples.push_back({kept[i], conds[i], res.qp.w[i]});
  return res;
}

CbbisResult cbbis(const Circuit& p, const ProposalConfig& proposal, const KernelCircuit& k, int n, unsigned workers) {
  check_config(proposal, n);
  if (n < 1) fail(ErrorKind::InvalidInput, "CBBIS needs n >= 1");
  if (!proposal.sampled) fail(ErrorKind::InvalidInput, "CBBIS needs a sampled set");
  const Scope s = *proposal.sampled;
  GibbsChain chain(p, proposal.seed);
  for (int b = 0; b < proposal.burn_in; ++b) chain.sweep();
  Evaluator ev(p);
  std::vector<Assignment> xs;
  int rejected = 0;
  while (static_cast<int>(xs.size()) < n) {
    for (int t = 0; t < proposal.thin; ++t) chain.sweep();
    Assignment x = project_to(chain.state(), s);
    if (!(ev.marginal(x) > 0.0)) {
      if (++rejected > 1000 * n) fail(ErrorKind::ZeroProbability, "too many zero-probability partial samples");
      continue;
    }
    xs.push_back(std::move(x));
  }
  if (rejected > 0) std::cerr << "cbbis: redrew " << rejected << " zero-probability partial samples\n";
  CbbisResult res = cbbis_weights(p, k, xs, s, workers);
  res.rejected += rejected;
  return res;
}

Eigen::VectorXd self_normalized_is_weights(const Circuit& p, const std::function<double(const Assignment&)>& q,
                                           const std::vector<Assignment>& samples) {
  if (samples.empty()) fail(ErrorKind::InvalidInput, "no samples");
  Evaluator ev(p);
  Eigen::VectorXd w(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double qx = q(samples[i]);
    if (!(qx > 0.0)) fail(ErrorKind::ZeroProbability, "proposal density vanishes at a sample");
    w[i] = ev(samples[i]) / qx;
  }
  const double total = w.sum();
  if (!(total > 0.0)) fail(ErrorKind::DegenerateEvidence, "all importance ratios are zero");
  return w / total;
}

MarginalTable estimate_marginals(const WeightedSamples& ws, const Domain& d) {
  if (ws.samples.empty()) fail(ErrorKind::InvalidInput, "no samples");
  if (static_cast<std::size_t>(ws.weights.size()) != ws.samples.size())
    fail(ErrorKind::InvalidInput, "weight count does not match sample count");
  MarginalTable out(d.size());
  for (VarId v = 0; v < d.size(); ++v) out[v].assign(d.card(v), 0.0);
  for (std::size_t i = 0; i < ws.samples.size(); ++i) {
    d.check_assigned(ws.samples[i], d.all());
    for (VarId v = 0; v < d.size(); ++v) out[v][ws.samples[i][v]] += ws.weights[i];
  }
  return out;
}

MarginalTable estimate_marginals(const std::vector<CollapsedSample>& samples, const Domain& d) {
  if (samples.empty()) fail(ErrorKind::InvalidInput, "no samples");
  MarginalTable out(d.size());
  for (VarId v = 0; v < d.size(); ++v) out[v].assign(d.card(v), 0.0);
  std::map<const Circuit*, MarginalTable> cache;
  for (const auto& cs : samples) {
    d.check_partial(cs.x_s);
    const MarginalTable* cm = nullptr;
    for (VarId v = 0; v < d.size(); ++v) {
      if (cs.x_s[v] != kMissing) {
        out[v][cs.x_s[v]] += cs.weight;
        continue;
      }
      if (!cm) {
        if (!cs.conditional) fail(ErrorKind::InvalidInput, "collapsed sample without a conditional");
        auto it = cache.find(cs.conditional.get());
        if (it == cache.end())
          it = cache.emplace(cs.conditional.get(),
                             variable_marginals(*cs.conditional, Assignment(d.size(), kMissing)))
                   .first;
        cm = &it->second;
      }
      if ((*cm)[v].empty()) fail(ErrorKind::InvalidInput, "conditional does not cover X" + std::to_string(v));
      for (int a = 0; a < d.card(v); ++a) out[v][a] += cs.weight * (*cm)[v][a];
    }
  }
  return out;
}

Scope collapsed_set(const Domain& d, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) fail(ErrorKind::InvalidInput, "collapse fraction must lie in [0, 1]");
  const int count = static_cast<int>(std::ceil(rho * d.size() - 1e-9));
  return Scope::first(count);
}

}  // namespace ek
