#include "ek/inference.hpp"

#include <cmath>

#include "ek/error.hpp"

namespace ek {

template <class Leaf>
double Evaluator::run(Leaf&& leaf) {
  const auto& units = g_->units();
  const int root = g_->root();
  for (int i = 0; i <= root; ++i) {
    const Unit& u = units[i];
    switch (u.kind) {
      case UnitKind::Input:
      case UnitKind::KernelInput:
        values_[i] = leaf(u);
        break;
      case UnitKind::Constant:
        values_[i] = u.params[0];
        break;
      case UnitKind::Sum: {
        KahanSum s;
        for (std::size_t j = 0; j < u.children.size(); ++j) s.add(u.params[j] * values_[u.children[j]]);
        values_[i] = s.value();
        break;
      }
      case UnitKind::Product: {
        double p = 1.0;
        for (int c : u.children) p *= values_[c];
        values_[i] = p;
        break;
      }
    }
  }
  return g_->scale() * values_[root];
}

double Evaluator::operator()(const Assignment& x) {
  g_->domain().check_assigned(x, g_->root_scope());
  return run([&](const Unit& u) {
    if (u.kind != UnitKind::Input) fail(ErrorKind::Malformed, "kernel leaf in a single-argument evaluation");
    return u.params[x[u.var]];
  });
}

double Evaluator::marginal(const Assignment& evidence) {
  g_->domain().check_partial(evidence);
  return run([&](const Unit& u) {
    if (u.kind != UnitKind::Input) fail(ErrorKind::Malformed, "kernel leaf in a single-argument evaluation");
    const int a = evidence[u.var];
    if (a != kMissing) return u.params[a];
    KahanSum s;
    for (double w : u.params) s.add(w);
    return s.value();
  });
}

double Evaluator::paired(const Assignment& x, const Assignment& y) {
  g_->domain().check_assigned(x, g_->root_scope());
  g_->domain().check_assigned(y, g_->root_scope());
  return run([&](const Unit& u) {
    if (u.kind != UnitKind::KernelInput) fail(ErrorKind::Malformed, "distribution leaf in a kernel evaluation");
    const int c = g_->domain().card(u.var);
    return u.params[static_cast<std::size_t>(x[u.var] * c + y[u.var])];
  });
}

double evaluate(const Circuit& c, const Assignment& x) { return Evaluator(c)(x); }

namespace {

void require_smooth_decomposable(const UnitGraph& c, const char* op) {
  if (!c.smooth() || !c.decomposable())
    fail(ErrorKind::StructuralPrecondition, std::string(op) + " needs a smooth and decomposable circuit");
}

}  // namespace

double marginalize(const Circuit& c, const Assignment& evidence) {
  require_smooth_decomposable(c, "marginalize");
  return Evaluator(c).marginal(evidence);
}

double partition_function(const Circuit& c) {
  return marginalize(c, Assignment(c.domain().size(), kMissing));
}

UnitGraph fold_leaves(const UnitGraph& g,
                      const std::function<std::optional<double>(const Unit&)>& observed) {
  struct Rep {
    bool constant;
    double value;  // constant value, or multiplier on `id`
    int id;
  };
  GraphBuilder b(g.domain());
  std::vector<Rep> rep(g.size());
  auto materialize = [&](const Rep& r) {
    return r.constant ? b.add_unit(Unit{UnitKind::Constant, -1, {r.value}, {}}) : r.id;
  };
  for (int i = 0; i <= g.root(); ++i) {
    const Unit& u = g.unit(i);
    switch (u.kind) {
      case UnitKind::Input:
      case UnitKind::KernelInput:
        if (auto v = observed(u))
          rep[i] = {true, *v, -1};
        else
          rep[i] = {false, 1.0, b.add_unit(u)};
        break;
      case UnitKind::Constant:
        rep[i] = {true, u.params[0], -1};
        break;
      case UnitKind::Sum: {
        bool all_const = true;
        for (int c : u.children) all_const = all_const && rep[c].constant;
        if (all_const) {
          KahanSum s;
          for (std::size_t j = 0; j < u.children.size(); ++j) s.add(u.params[j] * rep[u.children[j]].value);
          rep[i] = {true, s.value(), -1};
          break;
        }
        std::vector<int> kids;
        std::vector<double> weights;
        for (std::size_t j = 0; j < u.children.size(); ++j) {
          const Rep& r = rep[u.children[j]];
          if (r.constant) {
            if (u.params[j] * r.value == 0.0) continue;
            kids.push_back(materialize({true, 1.0, -1}));
            weights.push_back(u.params[j] * r.value);
          } else {
            const double w = u.params[j] * r.value;
            if (w == 0.0) continue;
            kids.push_back(r.id);
            weights.push_back(w);
          }
        }
        if (kids.empty())
          rep[i] = {true, 0.0, -1};
        else if (kids.size() == 1)
          rep[i] = {false, weights[0], kids[0]};
        else
          rep[i] = {false, 1.0, b.add_unit(Unit{UnitKind::Sum, -1, std::move(weights), std::move(kids)})};
        break;
      }
      case UnitKind::Product: {
        double mult = 1.0;
        std::vector<int> kids;
        for (int c : u.children) {
          mult *= rep[c].value;
          if (!rep[c].constant) kids.push_back(rep[c].id);
        }
        if (mult == 0.0 || kids.empty())
          rep[i] = {true, mult, -1};
        else if (kids.size() == 1)
          rep[i] = {false, mult, kids[0]};
        else
          rep[i] = {false, mult, b.add_unit(Unit{UnitKind::Product, -1, {}, std::move(kids)})};
        break;
      }
    }
  }
  const Rep& r = rep[g.root()];
  UnitGraph out = r.constant ? b.build(b.add_unit(Unit{UnitKind::Constant, -1, {1.0}, {}}), g.scale() * r.value)
                             : b.build(r.id, g.scale() * r.value);
  if (g.vtree()) {
    Vtree v = g.vtree()->restrict_to(out.root_scope());
    if (!v.empty()) out.set_vtree(std::move(v));
  }
  return out;
}

Circuit clamp(const Circuit& c, const Assignment& evidence) {
  c.domain().check_partial(evidence);
  return Circuit(fold_leaves(c, [&](const Unit& u) -> std::optional<double> {
    if (u.kind != UnitKind::Input) fail(ErrorKind::Malformed, "kernel leaf inside a probabilistic circuit");
    const int a = evidence[u.var];
    if (a == kMissing) return std::nullopt;
    return u.params[a];
  }));
}

Circuit condition(const Circuit& c, const Assignment& evidence) {
  const double z = marginalize(c, evidence);
  if (!(z > 0.0) || !std::isfinite(z))
    fail(ErrorKind::DegenerateEvidence, "evidence has zero probability");
  Circuit out = clamp(c, evidence);
  out.set_scale(out.scale() / z);
  return out;
}

Circuit normalize(const Circuit& c) {
  require_smooth_decomposable(c, "normalize");
  std::vector<double> z(c.size(), 0.0);
  GraphBuilder b(c.domain());
  for (int i = 0; i < c.size(); ++i) {
    Unit u = c.unit(i);
    switch (u.kind) {
      case UnitKind::Input: {
        KahanSum s;
        for (double w : u.params) s.add(w);
        z[i] = s.value();
        for (double& w : u.params) w /= z[i];
        break;
      }
      case UnitKind::KernelInput:
        fail(ErrorKind::Malformed, "kernel leaf inside a probabilistic circuit");
      case UnitKind::Constant:
        z[i] = u.params[0];
        u.params[0] = 1.0;
        break;
      case UnitKind::Sum: {
        KahanSum s;
        for (std::size_t j = 0; j < u.children.size(); ++j) s.add(u.params[j] * z[u.children[j]]);
        z[i] = s.value();
        if (!(z[i] > 0.0)) fail(ErrorKind::Malformed, "sum unit " + std::to_string(i) + " has no positive mass");
        for (std::size_t j = 0; j < u.children.size(); ++j) u.params[j] *= z[u.children[j]] / z[i];
        break;
      }
      case UnitKind::Product: {
        double p = 1.0;
        for (int ch : u.children) p *= z[ch];
        z[i] = p;
        break;
      }
    }
    b.add_unit(std::move(u));
  }
  Circuit out = b.build_circuit(c.root(), 1.0);
  out.set_vtree(c.vtree());
  return out;
}

MarginalTable variable_marginals(const Circuit& c, const Assignment& evidence) {
  require_smooth_decomposable(c, "variable_marginals");
  Evaluator ev(c);
  const double z = ev.marginal(evidence);
  if (!(z > 0.0)) fail(ErrorKind::DegenerateEvidence, "evidence has zero probability");
  const Domain& d = c.domain();
  std::vector<std::vector<double>> out(d.size());
  Assignment e = evidence;
  for (VarId v : c.root_scope().vars()) {
    out[v].assign(d.card(v), 0.0);
    if (evidence[v] != kMissing) {
      out[v][evidence[v]] = 1.0;
      continue;
    }
    for (int a = 0; a < d.card(v); ++a) {
      e[v] = a;
      out[v][a] = ev.marginal(e) / z;
    }
    e[v] = kMissing;
  }
  return out;
}

std::vector<Assignment> sample(const Circuit& c, int n, Rng& rng) {
  const Circuit nc = normalize(c);
  std::vector<Assignment> out;
  out.reserve(n);
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    Assignment x(c.domain().size(), kMissing);
    stack.assign(1, nc.root());
    while (!stack.empty()) {
      const Unit& u = nc.unit(stack.back());
      stack.pop_back();
      switch (u.kind) {
        case UnitKind::Input:
          x[u.var] = categorical(rng, u.params);
          break;
        case UnitKind::Sum:
          stack.push_back(u.children[categorical(rng, u.params)]);
          break;
        case UnitKind::Product:
          for (auto it = u.children.rbegin(); it != u.children.rend(); ++it) stack.push_back(*it);
          break;
        default:
          break;
      }
    }
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace ek
