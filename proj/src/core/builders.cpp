#include "ek/builders.hpp"

#include <functional>

#include "ek/error.hpp"

namespace ek {

Circuit factorized_circuit(const Domain& d, const Vtree& v, const std::vector<std::vector<double>>& leaf_weights) {
  if (v.empty()) fail(ErrorKind::InvalidInput, "empty vtree");
  GraphBuilder b(d);
  std::function<int(int)> rec = [&](int at) -> int {
    const auto& n = v.node(at);
    if (n.var >= 0) return b.add_input(n.var, leaf_weights.at(n.var));
    const int l = rec(n.left);
    const int r = rec(n.right);
    return b.add_product({l, r});
  };
  Circuit c = b.build_circuit(rec(v.root()));
  c.set_vtree(v);
  return c;
}

Circuit point_mass(const Domain& d, const Vtree& v, const Assignment& x) {
  d.check_assigned(x, v.scope());
  std::vector<std::vector<double>> w(d.size());
  for (VarId i : v.scope().vars()) {
    w[i].assign(d.card(i), 0.0);
    w[i][x[i]] = 1.0;
  }
  return factorized_circuit(d, v, w);
}

Circuit mixture(const std::vector<const Circuit*>& parts, const std::vector<double>& weights) {
  if (parts.empty() || parts.size() != weights.size()) fail(ErrorKind::InvalidInput, "mixture needs one weight per part");
  GraphBuilder b(parts[0]->domain());
  std::vector<int> roots;
  std::vector<double> ws;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Circuit& c = *parts[p];
    if (!(c.domain() == b.domain())) fail(ErrorKind::InvalidInput, "mixture parts need one domain");
    const int offset = b.size();
    for (Unit u : c.units()) {
      for (int& ch : u.children) ch += offset;
      b.add_unit(std::move(u));
    }
    roots.push_back(offset + c.root());
    ws.push_back(weights[p] * c.scale());
  }
  Circuit out = b.build_circuit(b.add_sum(roots, ws));
  out.set_vtree(parts[0]->vtree());
  return out;
}

}  // namespace ek
