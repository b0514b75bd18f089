#include "ek/compile.hpp"

#include <algorithm>
#include <map>

#include "ek/error.hpp"
#include "ek/inference.hpp"

namespace ek {

namespace {

class Compiler {
 public:
  Compiler(const FactorModel& m, const Vtree& v, const CompileOptions& opt)
      : m_(m), v_(v), opt_(opt), b_(m.domain) {
    for (int n = v.root();; n = v.node(n).right) {
      spine_.push_back(n);
      if (v.is_leaf(n)) break;
    }
    // Block decided at each spine step, and the step where each factor
    // becomes fully decided.
    Scope decided;
    std::vector<Scope> upto;
    for (int n : spine_) {
      const Scope block = v.is_leaf(n) ? v.node(n).scope : v.node(v.node(n).left).scope;
      blocks_.push_back(block);
      decided |= block;
      upto.push_back(decided);
    }
    at_step_.resize(spine_.size());
    for (std::size_t f = 0; f < m.factors.size(); ++f) {
      const Scope fs = Scope::of(m.factors[f].vars);
      if (fs.empty()) {
        constant_ *= m.factors[f].table[0];
        continue;
      }
      if (!fs.subset_of(v.scope()))
        fail(ErrorKind::InvalidInput, "factor " + std::to_string(f) + " mentions variables outside the vtree");
      for (std::size_t j = 0; j < spine_.size(); ++j)
        if (fs.subset_of(upto[j])) {
          at_step_[j].push_back(static_cast<int>(f));
          break;
        }
    }
    // Variables decided before step j that later factors still read.
    frontier_.resize(spine_.size());
    for (std::size_t j = 0; j < spine_.size(); ++j) {
      const Scope before = j == 0 ? Scope() : upto[j - 1];
      Scope need;
      for (std::size_t k = j; k < spine_.size(); ++k)
        for (int f : at_step_[k]) need |= Scope::of(m.factors[f].vars);
      frontier_[j] = (need & before).vars();
    }
  }

  Circuit run() {
    Assignment x(m_.domain.size(), kMissing);
    const int root = step(0, x);
    if (root < 0) fail(ErrorKind::InvalidInput, "factor product is zero everywhere");
    Circuit c = b_.build_circuit(root, constant_);
    c.set_vtree(v_);
    return c;
  }

 private:
  double weight(std::size_t j, const Assignment& x) const {
    double w = 1.0;
    for (int f : at_step_[j]) w *= m_.factors[f].table[m_.index(m_.factors[f], x)];
    return w;
  }

  int indicator(int node, const Assignment& x) {
    const auto& n = v_.node(node);
    if (n.var >= 0) {
      const auto key = std::make_pair(n.var, x[n.var]);
      if (auto it = indicators_.find(key); it != indicators_.end()) return it->second;
      std::vector<double> w(m_.domain.card(n.var), 0.0);
      w[x[n.var]] = 1.0;
      return indicators_[key] = b_.add_input(n.var, std::move(w));
    }
    return product(indicator(n.left, x), indicator(n.right, x));
  }

  int product(int a, int b) {
    const auto key = std::make_pair(std::min(a, b), std::max(a, b));
    if (auto it = products_.find(key); it != products_.end()) return it->second;
    return products_[key] = b_.add_product({a, b});
  }

  // Unit for the sub-function at spine step j given the decided part of x,
  // or -1 when it is identically zero.
  int step(std::size_t j, Assignment& x) {
    std::vector<int> key;
    key.reserve(frontier_[j].size() + 1);
    key.push_back(static_cast<int>(j));
    for (VarId v : frontier_[j]) key.push_back(x[v]);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    const int node = spine_[j];
    int result = -1;
    if (v_.is_leaf(node)) {
      const VarId r = v_.node(node).var;
      std::vector<double> w(m_.domain.card(r));
      bool any = false;
      for (int a = 0; a < m_.domain.card(r); ++a) {
        x[r] = a;
        w[a] = weight(j, x);
        any = any || w[a] > 0.0;
      }
      x[r] = kMissing;
      if (any) {
        const auto ikey = std::make_pair(r, w);
        auto it = inputs_.find(ikey);
        result = it != inputs_.end() ? it->second : (inputs_[ikey] = b_.add_input(r, w));
      }
    } else {
      const int left = v_.node(node).left;
      require_states(m_.domain.num_states(blocks_[j]), opt_.block_cap, "vtree block");
      std::vector<int> kids;
      std::vector<double> weights;
      for_each_state(m_.domain, blocks_[j], x, [&](const Assignment& xs) {
        const double w = weight(j, xs);
        if (w == 0.0) return;
        const int sub = step(j + 1, x);
        if (sub < 0) return;
        kids.push_back(product(indicator(left, xs), sub));
        weights.push_back(w);
      });
      for (VarId v : blocks_[j].vars()) x[v] = kMissing;
      if (!kids.empty()) {
        auto skey = std::make_pair(kids, weights);
        auto it = sums_.find(skey);
        result = it != sums_.end() ? it->second : (sums_[skey] = b_.add_sum(kids, weights));
      }
    }
    memo_[key] = result;
    return result;
  }

  const FactorModel& m_;
  const Vtree& v_;
  CompileOptions opt_;
  GraphBuilder b_;
  double constant_ = 1.0;
  std::vector<int> spine_;
  std::vector<Scope> blocks_;
  std::vector<std::vector<int>> at_step_;
  std::vector<std::vector<VarId>> frontier_;
  std::map<std::vector<int>, int> memo_;
  std::map<std::pair<int, int>, int> indicators_;
  std::map<std::pair<int, int>, int> products_;
  std::map<std::pair<VarId, std::vector<double>>, int> inputs_;
  std::map<std::pair<std::vector<int>, std::vector<double>>, int> sums_;
};

}  // namespace

Circuit compile_from_factors(const FactorModel& m, const Vtree& v, const CompileOptions& opt) {
  m.validate();
  if (m.domain.size() > opt.max_vars)
    fail(ErrorKind::ResourceBound, "compilation supports at most " + std::to_string(opt.max_vars) + " variables");
  if (v.empty()) fail(ErrorKind::InvalidInput, "empty vtree");
  for (int i = 0; i < v.num_nodes(); ++i)
    if (v.is_leaf(i)) m.domain.check_var(v.node(i).var);
  Circuit c = Compiler(m, v, opt).run();
  if (!opt.normalize) return c;
  Circuit n = normalize(c);
  n.set_vtree(v);
  return n;
}

}  // namespace ek
