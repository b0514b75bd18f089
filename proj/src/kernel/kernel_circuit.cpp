#include "ek/kernel_circuit.hpp"

#include <cmath>
#include <Eigen/Eigenvalues>

#include "ek/error.hpp"
#include "ek/inference.hpp"
#include "ek/io.hpp"
#include "ek/structure.hpp"

namespace ek {

double evaluate_kernel(const KernelCircuit& k, const Assignment& x, const Assignment& y) {
  return Evaluator(k).paired(x, y);
}

KernelCircuit build_product_kc(const Domain& d, const Vtree& v,
                               const std::function<double(VarId, int, int)>& leaf) {
  if (v.empty()) fail(ErrorKind::InvalidInput, "empty vtree");
  GraphBuilder b(d);
  std::function<int(int)> rec = [&](int at) -> int {
    const auto& n = v.node(at);
    if (n.var >= 0) {
      const int c = d.card(n.var);
      std::vector<double> t(static_cast<std::size_t>(c * c));
      for (int a = 0; a < c; ++a)
        for (int e = 0; e < c; ++e) t[a * c + e] = leaf(n.var, a, e);
      return b.add_kernel_input(n.var, std::move(t));
    }
    const int l = rec(n.left);
    const int r = rec(n.right);
    return b.add_product({l, r});
  };
  KernelCircuit k(b.build(rec(v.root())));
  k.set_vtree(v);
  return k;
}

KernelCircuit build_hamming_kc(const Domain& d, const Vtree& v, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail(ErrorKind::InvalidInput, "Hamming lambda must be positive");
  const double off = std::exp(-lambda);
  return build_product_kc(d, v, [&](VarId, int a, int b) { return a == b ? 1.0 : off; });
}

KernelCircuit build_rbf_kc(const Domain& d, const Vtree& v, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) fail(ErrorKind::InvalidInput, "RBF gamma must be positive");
  return build_product_kc(d, v, [&](VarId, int a, int b) {
    const double diff = a - b;
    return std::exp(-gamma * diff * diff);
  });
}

KernelCircuit kernel_from_spec(const std::string& spec, const Domain& d, const Vtree& v) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  double param = 0.0;
  if (colon != std::string::npos) {
    try {
      std::size_t used = 0;
      param = std::stod(spec.substr(colon + 1), &used);
      if (used != spec.size() - colon - 1) throw std::invalid_argument(spec);
    } catch (const std::exception&) {
      fail(ErrorKind::Parse, "bad kernel parameter in '" + spec + "'");
    }
  }
  if (name == "hamming") return build_hamming_kc(d, v, colon == std::string::npos ? default_hamming_lambda(d) : param);
  if (name == "rbf") {
    if (colon == std::string::npos) fail(ErrorKind::Parse, "rbf kernel needs a gamma, e.g. rbf:0.5");
    return build_rbf_kc(d, v, param);
  }
  fail(ErrorKind::Parse, "unknown kernel '" + name + "'");
}

Circuit project(const KernelCircuit& k, Side side, const Assignment& x_fixed) {
  const Domain& d = k.domain();
  d.check_assigned(x_fixed, k.root_scope());
  GraphBuilder b(d);
  for (const Unit& u : k.units()) {
    if (u.kind != UnitKind::KernelInput) {
      b.add_unit(u);
      continue;
    }
    const int c = d.card(u.var);
    const int f = x_fixed[u.var];
    std::vector<double> w(c);
    for (int a = 0; a < c; ++a) w[a] = side == Side::Left ? u.params[a * c + f] : u.params[f * c + a];
    b.add_unit(Unit{UnitKind::Input, u.var, std::move(w), {}});
  }
  Circuit out = b.build_circuit(k.root(), k.scale());
  out.set_vtree(k.vtree());
  return out;
}

KernelCircuit permute_kernel(const KernelCircuit& k, VarId i, Side side, bool inverse) {
  const Domain& d = k.domain();
  d.check_var(i);
  GraphBuilder b(d);
  bool touched = false;
  for (const Unit& u : k.units()) {
    if (u.kind != UnitKind::KernelInput || u.var != i) {
      b.add_unit(u);
      continue;
    }
    touched = true;
    const int c = d.card(i);
    const int shift = inverse ? c - 1 : 1;
    Unit p = u;
    for (int a = 0; a < c; ++a)
      for (int e = 0; e < c; ++e) {
        const int sa = side == Side::Left ? (a + shift) % c : a;
        const int se = side == Side::Right ? (e + shift) % c : e;
        p.params[a * c + e] = u.params[sa * c + se];
      }
    b.add_unit(std::move(p));
  }
  if (!touched) fail(ErrorKind::Malformed, "no kernel leaf on variable " + std::to_string(i));
  KernelCircuit out(b.build(k.root(), k.scale()));
  out.set_vtree(k.vtree());
  return out;
}

KernelCircuit restrict_kernel(const KernelCircuit& k, const Assignment& left, const Assignment& right) {
  const Domain& d = k.domain();
  d.check_partial(left);
  d.check_partial(right);
  for (int v = 0; v < d.size(); ++v)
    if ((left[v] == kMissing) != (right[v] == kMissing))
      fail(ErrorKind::InvalidInput, "kernel restriction needs both arguments observed on the same variables");
  return KernelCircuit(fold_leaves(k, [&](const Unit& u) -> std::optional<double> {
    if (u.kind != UnitKind::KernelInput) fail(ErrorKind::Malformed, "distribution leaf inside a kernel circuit");
    if (left[u.var] == kMissing) return std::nullopt;
    return u.params[static_cast<std::size_t>(left[u.var] * d.card(u.var) + right[u.var])];
  }));
}

bool verify_pd(const KernelCircuit& k) {
  for (const Unit& u : k.units()) {
    if (u.kind == UnitKind::Sum) {
      for (double w : u.params)
        if (!(w > 0.0)) return false;
    } else if (u.kind == UnitKind::Constant) {
      if (u.params[0] < 0.0) return false;
    } else if (u.kind == UnitKind::KernelInput) {
      const int c = k.domain().card(u.var);
      Eigen::MatrixXd t(c, c);
      for (int a = 0; a < c; ++a)
        for (int e = 0; e < c; ++e) t(a, e) = u.params[a * c + e];
      if ((t - t.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, t.cwiseAbs().maxCoeff())) return false;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-9) return false;
    }
  }
  return k.scale() > 0.0;
}

bool check_kernel_compatible(const KernelCircuit& k, const UnitGraph& p, const UnitGraph& q) {
  if (!k.smooth() || !k.decomposable()) return false;
  const Assignment zeros(k.domain().size(), 0);
  return check_compatible(project(k, Side::Left, zeros), p) && check_compatible(project(k, Side::Right, zeros), q);
}

KernelCircuit parse_kernel(const std::string& text) { return KernelCircuit(parse_unit_graph(text, true)); }

KernelCircuit load_kernel(const std::string& path) {
  try {
    return parse_kernel(read_text_file(path));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Parse) throw;
    fail(ErrorKind::Parse, path + ": " + e.what());
  }
}

void save_kernel(const KernelCircuit& k, const std::string& path) { write_text_file(path, unit_graph_to_json(k)); }

}  // namespace ek
