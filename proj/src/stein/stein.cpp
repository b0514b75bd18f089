#include "ek/stein.hpp"

#include <set>

#include "ek/error.hpp"
#include "ek/expected_kernel.hpp"
#include "ek/inference.hpp"
#include "ek/structure.hpp"

namespace ek {

Assignment negate(Assignment x, VarId i, const Domain& d) {
  d.check_var(i);
  x[i] = (x[i] + 1) % d.card(i);
  return x;
}

Assignment negate_inverse(Assignment x, VarId i, const Domain& d) {
  d.check_var(i);
  x[i] = (x[i] + d.card(i) - 1) % d.card(i);
  return x;
}

namespace {

std::string describe(const Assignment& x) {
  std::string s = "(";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) s += ",";
    s += x[i] == kMissing ? "?" : std::to_string(x[i]);
  }
  return s + ")";
}

void require_full_scope(const Circuit& p) {
  if (p.root_scope() != p.domain().all())
    fail(ErrorKind::InvalidInput, "Stein kernels need p over every domain variable");
}

// Pointwise quantities for one argument: p ratios r_i and inverse shifts.
struct Point {
  Assignment x;
  std::vector<double> r;
  std::vector<Assignment> inv;
};

Point make_point(Evaluator& ev, const Domain& d, const Assignment& x) {
  d.check_assigned(x, d.all());
  Point pt{x, {}, {}};
  const double px = ev(x);
  if (!(px > 0.0)) fail(ErrorKind::ZeroProbability, "p(x) = 0 at x = " + describe(x));
  for (VarId i = 0; i < d.size(); ++i) {
    pt.r.push_back(ev(negate(x, i, d)) / px);
    pt.inv.push_back(negate_inverse(x, i, d));
  }
  return pt;
}

double term(Evaluator& kev, const Point& a, const Point& b, VarId i) {
  const double ra = a.r[i], rb = b.r[i];
  return ra * rb * kev.paired(a.x, b.x) - ra * kev.paired(a.x, b.inv[i]) - rb * kev.paired(a.inv[i], b.x) +
         kev.paired(a.inv[i], b.inv[i]);
}

double sum_terms(Evaluator& kev, const Point& a, const Point& b) {
  KahanSum acc;
  for (std::size_t i = 0; i < a.r.size(); ++i) acc.add(term(kev, a, b, static_cast<VarId>(i)));
  return acc.value();
}

}  // namespace

std::vector<double> score(const Circuit& p, const Assignment& x) {
  const Domain& d = p.domain();
  d.check_assigned(x, p.root_scope());
  Evaluator ev(p);
  const double px = ev(x);
  if (!(px > 0.0)) fail(ErrorKind::ZeroProbability, "score undefined: p(x) = 0 at x = " + describe(x));
  std::vector<double> s(d.size(), 0.0);
  for (VarId i : p.root_scope().vars()) s[i] = 1.0 - ev(negate(x, i, d)) / px;
  return s;
}

double stein_kernel(const Circuit& p, const KernelCircuit& k, const Assignment& x, const Assignment& y) {
  require_full_scope(p);
  Evaluator pev(p), kev(k);
  const Point a = make_point(pev, p.domain(), x), b = make_point(pev, p.domain(), y);
  return k.scale() * sum_terms(kev, a, b);
}

double stein_kernel_term(const Circuit& p, const KernelCircuit& k, const Assignment& x, const Assignment& y,
                         VarId i) {
  require_full_scope(p);
  p.domain().check_var(i);
  Evaluator pev(p), kev(k);
  const Point a = make_point(pev, p.domain(), x), b = make_point(pev, p.domain(), y);
  return k.scale() * term(kev, a, b, i);
}

Eigen::MatrixXd gram_matrix(const Circuit& p, const KernelCircuit& k, const std::vector<Assignment>& samples,
                            unsigned workers) {
  require_full_scope(p);
  const std::size_t n = samples.size();
  std::vector<Point> pts;
  {
    Evaluator pev(p);
    for (const auto& x : samples) pts.push_back(make_point(pev, p.domain(), x));
  }
  Eigen::MatrixXd g(n, n);
  parallel_for(
      n,
      [&](std::size_t a) {
        Evaluator kev(k);
        for (std::size_t b = a; b < n; ++b) g(a, b) = k.scale() * sum_terms(kev, pts[a], pts[b]);
      },
      workers);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < a; ++b) g(a, b) = g(b, a);
  return g;
}

// ---- conditional kernel ----

ConditionalStein::ConditionalStein(const Circuit& p, const KernelCircuit& k, Scope s) : p_(&p), k_(&k), s_(s) {
  if (!p.smooth() || !p.decomposable())
    fail(ErrorKind::StructuralPrecondition, "conditional Stein kernel needs a smooth and decomposable p");
  require_full_scope(p);
  if (!s.subset_of(p.root_scope())) fail(ErrorKind::InvalidInput, "sampled set outside the domain");
  if (!check_kernel_compatible(k, p, p))
    fail(ErrorKind::StructuralPrecondition, "kernel circuit is not compatible with p");
}

Assignment ConditionalStein::key(const Assignment& x) const {
  const Domain& d = p_->domain();
  d.check_assigned(x, s_);
  Assignment out(d.size(), kMissing);
  for (VarId v : s_.vars()) out[v] = x[v];
  return out;
}

int ConditionalStein::intern_circuit(const Circuit& c) {
  const std::uint64_t h = c.structure_hash();
  auto [lo, hi] = circuit_index_.equal_range(h);
  for (auto it = lo; it != hi; ++it)
    if (circuits_[it->second]->same_structure(c)) return it->second;
  auto copy = std::make_shared<Circuit>(c);
  copy->set_scale(1.0);
  circuits_.push_back(std::move(copy));
  const int id = static_cast<int>(circuits_.size()) - 1;
  circuit_index_.emplace(h, id);
  return id;
}

const ConditionalStein::CondEntry& ConditionalStein::cond(const Assignment& x_s) {
  auto it = cond_.find(x_s);
  if (it != cond_.end()) return it->second;
  CondEntry e;
  e.mass = marginalize(*p_, x_s);
  if (e.mass > 0.0) {
    e.normalized = std::make_shared<Circuit>(condition(*p_, x_s));
    e.circuit = intern_circuit(*e.normalized);
  }
  return cond_.emplace(x_s, std::move(e)).first->second;
}

std::shared_ptr<const Circuit> ConditionalStein::conditional(const Assignment& x_s) {
  const CondEntry& e = cond(key(x_s));
  if (!e.normalized) fail(ErrorKind::ZeroProbability, "p(x_s) = 0 at x_s = " + describe(key(x_s)));
  return e.normalized;
}

void ConditionalStein::adopt(const Assignment& x_s, std::shared_ptr<const Circuit> conditional) {
  const Assignment kx = key(x_s);
  if (cond_.count(kx)) return;
  if (!conditional) fail(ErrorKind::InvalidInput, "missing conditional circuit");
  if (conditional->root_scope() != p_->root_scope() - s_)
    fail(ErrorKind::InvalidInput, "conditional circuit has the wrong scope");
  CondEntry e;
  e.mass = marginalize(*p_, kx);
  if (!(e.mass > 0.0)) fail(ErrorKind::ZeroProbability, "p(x_s) = 0 at x_s = " + describe(kx));
  e.circuit = intern_circuit(*conditional);
  e.normalized = std::move(conditional);
  cond_.emplace(kx, std::move(e));
}

const ConditionalStein::KernelEntry& ConditionalStein::restricted(const Assignment& left, const Assignment& right) {
  auto k = std::make_pair(left, right);
  auto it = restricted_.find(k);
  if (it != restricted_.end()) return it->second;
  KernelCircuit r = restrict_kernel(*k_, left, right);
  KernelEntry e;
  e.scale = r.scale();
  r.set_scale(1.0);
  const std::uint64_t h = r.structure_hash();
  auto [lo, hi] = kernel_index_.equal_range(h);
  for (auto j = lo; j != hi && e.kernel < 0; ++j)
    if (kernels_[j->second].same_structure(r)) e.kernel = j->second;
  if (e.kernel < 0) {
    kernels_.push_back(std::move(r));
    e.kernel = static_cast<int>(kernels_.size()) - 1;
    kernel_index_.emplace(h, e.kernel);
  }
  return restricted_.emplace(std::move(k), e).first->second;
}

void ConditionalStein::expand(const Assignment& x_s, const Assignment& y_s, std::vector<Term>& out) {
  const Domain& d = p_->domain();
  Assignment kx = key(x_s), ky = key(y_s);
  // canonical argument order keeps entries a function of the unordered pair
  if (ky < kx) std::swap(kx, ky);
  const CondEntry& cx = cond(kx);
  const CondEntry& cy = cond(ky);
  if (cx.circuit < 0) fail(ErrorKind::ZeroProbability, "p(x_s) = 0 at x_s = " + describe(kx));
  if (cy.circuit < 0) fail(ErrorKind::ZeroProbability, "p(x_s) = 0 at x_s = " + describe(ky));
  auto push = [&](double coef, int a, int b, const KernelEntry& ke) {
    if (coef == 0.0 || ke.scale == 0.0) return;
    out.push_back({coef * ke.scale, a, b, ke.kernel});
  };
  for (VarId i : s_.vars()) {
    const CondEntry& nx = cond(negate(kx, i, d));
    const CondEntry& ny = cond(negate(ky, i, d));
    const Assignment ix = negate_inverse(kx, i, d), iy = negate_inverse(ky, i, d);
    const double rx = nx.mass / cx.mass, ry = ny.mass / cy.mass;
    if (rx > 0.0 && ry > 0.0) push(rx * ry, nx.circuit, ny.circuit, restricted(kx, ky));
    if (rx > 0.0) push(-rx, nx.circuit, cy.circuit, restricted(kx, iy));
    if (ry > 0.0) push(-ry, cx.circuit, ny.circuit, restricted(ix, ky));
    push(1.0, cx.circuit, cy.circuit, restricted(ix, iy));
  }
}

double ConditionalStein::m_value(const Triple& t) {
  auto it = m_cache_.find(t);
  if (it != m_cache_.end()) return it->second;
  const auto [a, b, kid] = t;
  const double v = expected_kernel_stats(*circuits_[a], *circuits_[b], kernels_[kid], false).value;
  m_cache_.emplace(t, v);
  return v;
}

double ConditionalStein::evaluate_terms(const std::vector<Term>& terms) const {
  KahanSum acc;
  for (const Term& t : terms) acc.add(t.coef * m_cache_.at({t.a, t.b, t.kernel}));
  return acc.value();
}

double ConditionalStein::operator()(const Assignment& x_s, const Assignment& y_s) {
  std::vector<Term> terms;
  expand(x_s, y_s, terms);
  for (const Term& t : terms) m_value({t.a, t.b, t.kernel});
  return k_->scale() * evaluate_terms(terms);
}

Eigen::MatrixXd ConditionalStein::gram(const std::vector<Assignment>& xs, unsigned workers) {
  const std::size_t n = xs.size();
  std::vector<Term> terms;
  std::set<Triple> missing;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) {
      terms.clear();
      expand(xs[a], xs[b], terms);
      for (const Term& t : terms)
        if (!m_cache_.count({t.a, t.b, t.kernel})) missing.insert({t.a, t.b, t.kernel});
    }
  const std::vector<Triple> todo(missing.begin(), missing.end());
  std::vector<double> values(todo.size());
  parallel_for(
      todo.size(),
      [&](std::size_t j) {
        const auto [a, b, kid] = todo[j];
        values[j] = expected_kernel_stats(*circuits_[a], *circuits_[b], kernels_[kid], false).value;
      },
      workers);
  for (std::size_t j = 0; j < todo.size(); ++j) m_cache_.emplace(todo[j], values[j]);

  Eigen::MatrixXd g(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) {
      terms.clear();
      expand(xs[a], xs[b], terms);
      g(a, b) = g(b, a) = k_->scale() * evaluate_terms(terms);
    }
  return g;
}

double conditional_stein_kernel(const Circuit& p, const KernelCircuit& k, const Assignment& x_s,
                                const Assignment& y_s, Scope s) {
  ConditionalStein cs(p, k, s);
  return cs(x_s, y_s);
}

Eigen::MatrixXd gram_matrix_collapsed(const Circuit& p, const KernelCircuit& k,
                                      const std::vector<CollapsedSample>& samples, Scope s, unsigned workers) {
  ConditionalStein cs(p, k, s);
  std::vector<Assignment> xs;
  for (const auto& c : samples) {
    if (c.conditional) cs.adopt(c.x_s, c.conditional);
    xs.push_back(c.x_s);
  }
  return cs.gram(xs, workers);
}

// ---- enumeration oracle ----

KdsdOracle::KdsdOracle(const Circuit& p, const KernelCircuit& k, std::uint64_t cap) : k_(k) {
  require_full_scope(p);
  const Domain& d = p.domain();
  scope_ = d.all();
  require_states(d.num_states(scope_), cap, "KDSD enumeration");

  std::vector<std::size_t> stride(d.size());
  std::size_t acc = 1;
  for (VarId v = 0; v < d.size(); ++v) {
    stride[v] = acc;
    acc *= d.card(v);
  }
  auto index = [&](const Assignment& x) {
    std::size_t i = 0;
    for (VarId v = 0; v < d.size(); ++v) i += x[v] * stride[v];
    return i;
  };

  Assignment x(d.size(), 0);
  for_each_state(d, scope_, x, [&](const Assignment& s) { states_.push_back(s); });
  const std::size_t n = states_.size();

  Evaluator pev(p);
  std::vector<double> pv(n);
  for (std::size_t a = 0; a < n; ++a) {
    pv[a] = pev(states_[a]);
    if (!(pv[a] > 0.0)) fail(ErrorKind::ZeroProbability, "p vanishes at x = " + describe(states_[a]));
  }
  r_.assign(d.size(), std::vector<double>(n));
  inv_.assign(d.size(), std::vector<std::size_t>(n));
  for (VarId i = 0; i < d.size(); ++i)
    for (std::size_t a = 0; a < n; ++a) {
      r_[i][a] = pv[index(negate(states_[a], i, d))] / pv[a];
      inv_[i][a] = index(negate_inverse(states_[a], i, d));
    }
  if (n > kMatrixStates) return;

  Evaluator kev(k);
  Eigen::MatrixXd km(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) km(a, b) = k.scale() * kev.paired(states_[a], states_[b]);
  kp_.setZero(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      double v = 0.0;
      for (VarId i = 0; i < d.size(); ++i) {
        const std::size_t ia = inv_[i][a], ib = inv_[i][b];
        v += r_[i][a] * r_[i][b] * km(a, b) - r_[i][a] * km(a, ib) - r_[i][b] * km(ia, b) + km(ia, ib);
      }
      kp_(a, b) = v;
    }
}

double KdsdOracle::operator()(const Circuit& q) const {
  if (q.root_scope() != scope_) fail(ErrorKind::InvalidInput, "q must range over every domain variable");
  const std::size_t n = states_.size();
  Evaluator qev(q);
  Eigen::VectorXd qv(n);
  for (std::size_t a = 0; a < n; ++a) qv[a] = qev(states_[a]);
  const double z = qv.sum();
  if (!(z > 0.0)) fail(ErrorKind::DegenerateEvidence, "q has no mass");
  qv /= z;
  if (kp_.size() > 0) return qv.dot(kp_ * qv);

  // streaming: kernel rows for a and each inverse shift of a
  Evaluator kev(k_);
  const std::size_t dims = r_.size();
  std::vector<std::vector<double>> rows(dims + 1, std::vector<double>(n));
  KahanSum total;
  for (std::size_t a = 0; a < n; ++a) {
    if (qv[a] == 0.0) continue;
    for (std::size_t b = 0; b < n; ++b) rows[dims][b] = k_.scale() * kev.paired(states_[a], states_[b]);
    for (std::size_t i = 0; i < dims; ++i)
      for (std::size_t b = 0; b < n; ++b)
        rows[i][b] = k_.scale() * kev.paired(states_[inv_[i][a]], states_[b]);
    double row = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      double v = 0.0;
      for (std::size_t i = 0; i < dims; ++i) {
        const std::size_t ib = inv_[i][b];
        v += r_[i][a] * r_[i][b] * rows[dims][b] - r_[i][a] * rows[dims][ib] - r_[i][b] * rows[i][b] +
             rows[i][ib];
      }
      row += qv[b] * v;
    }
    total.add(qv[a] * row);
  }
  return total.value();
}

double brute_force_kdsd(const Circuit& q, const Circuit& p, const KernelCircuit& k, std::uint64_t cap) {
  return KdsdOracle(p, k, cap)(q);
}

}  // namespace ek
