#include "ek/vtree.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <utility>

#include "ek/error.hpp"

namespace ek {

int Vtree::add(Node n) {
  nodes_.push_back(n);
  return static_cast<int>(nodes_.size()) - 1;
}

int Vtree::copy_from(const Vtree& other, int at) {
  const Node& n = other.nodes_[at];
  if (n.var >= 0) return add(n);
  const int l = copy_from(other, n.left);
  const int r = copy_from(other, n.right);
  return add(Node{-1, l, r, n.scope});
}

Vtree Vtree::leaf(VarId v) {
  Vtree t;
  t.root_ = t.add(Node{v, -1, -1, Scope::single(v)});
  return t;
}

Vtree Vtree::join(const Vtree& left, const Vtree& right) {
  if (left.empty()) return right;
  if (right.empty()) return left;
  if (!left.scope().disjoint(right.scope()))
    fail(ErrorKind::InvalidInput, "vtree children must have disjoint variables");
  Vtree t;
  const int l = t.copy_from(left, left.root_);
  const int r = t.copy_from(right, right.root_);
  t.root_ = t.add(Node{-1, l, r, left.scope() | right.scope()});
  return t;
}

Vtree Vtree::left_linear(const std::vector<VarId>& order) {
  if (order.empty()) return {};
  Vtree t;
  int cur = t.add(Node{order[0], -1, -1, Scope::single(order[0])});
  for (std::size_t i = 1; i < order.size(); ++i) {
    const int leaf = t.add(Node{order[i], -1, -1, Scope::single(order[i])});
    cur = t.add(Node{-1, cur, leaf, t.nodes_[cur].scope | Scope::single(order[i])});
  }
  t.root_ = cur;
  return t;
}

Vtree Vtree::right_linear(const std::vector<VarId>& order) {
  if (order.empty()) return {};
  Vtree t;
  const VarId last = order.back();
  int cur = t.add(Node{last, -1, -1, Scope::single(last)});
  for (std::size_t i = order.size() - 1; i-- > 0;) {
    const int leaf = t.add(Node{order[i], -1, -1, Scope::single(order[i])});
    cur = t.add(Node{-1, leaf, cur, t.nodes_[cur].scope | Scope::single(order[i])});
  }
  t.root_ = cur;
  return t;
}

Vtree Vtree::balanced(const std::vector<VarId>& order) {
  if (order.empty()) return {};
  if (order.size() == 1) return leaf(order[0]);
  const auto mid = order.begin() + static_cast<long>(order.size() / 2);
  return join(balanced({order.begin(), mid}), balanced({mid, order.end()}));
}

Vtree Vtree::random(const std::vector<VarId>& vars, Rng& rng) {
  std::vector<VarId> order = vars;
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[uniform_int(rng, i)]);
  std::function<Vtree(std::size_t, std::size_t)> build = [&](std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return leaf(order[lo]);
    const std::size_t cut = lo + 1 + uniform_int(rng, hi - lo - 1);
    return join(build(lo, cut), build(cut, hi));
  };
  if (order.empty()) return {};
  return build(0, order.size());
}

int Vtree::find(Scope s) const {
  for (int i = 0; i < num_nodes(); ++i)
    if (nodes_[i].scope == s) return i;
  return -1;
}

Vtree Vtree::restrict_to(Scope keep) const {
  if (empty()) return {};
  std::function<Vtree(int)> rec = [&](int at) -> Vtree {
    const Node& n = nodes_[at];
    if (!(n.scope & keep).bits()) return {};
    if (n.var >= 0) return leaf(n.var);
    return join(rec(n.left), rec(n.right));
  };
  return rec(root_);
}

namespace {

std::set<std::pair<std::uint64_t, std::uint64_t>> splits(const Vtree& t) {
  std::set<std::pair<std::uint64_t, std::uint64_t>> out;
  for (int i = 0; i < t.num_nodes(); ++i) {
    const auto& n = t.node(i);
    if (n.var >= 0) continue;
    std::uint64_t a = t.node(n.left).scope.bits(), b = t.node(n.right).scope.bits();
    if (a > b) std::swap(a, b);
    out.emplace(a, b);
  }
  return out;
}

}  // namespace

// Equality up to swapping children.
bool Vtree::operator==(const Vtree& o) const {
  if (empty() || o.empty()) return empty() == o.empty();
  return scope() == o.scope() && splits(*this) == splits(o);
}

}  // namespace ek
