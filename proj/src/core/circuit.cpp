#include "ek/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "ek/error.hpp"

namespace ek {

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  v *= 0x9E3779B97F4A7C15ull;
  v ^= v >> 29;
  h ^= v + 0x7F4A7C159E3779B9ull + (h << 6) + (h >> 2);
  return h;
}

std::uint64_t bits_of(double d) {
  std::uint64_t b;
  std::memcpy(&b, &d, sizeof b);
  return b;
}

}  // namespace

UnitGraph::UnitGraph(Domain d, std::vector<Unit> units, int root, double scale)
    : domain_(std::move(d)), units_(std::move(units)), root_(root), scale_(scale) {
  const int n = size();
  if (root_ < 0 || root_ >= n) fail(ErrorKind::Malformed, "root id out of range");
  scopes_.resize(n);
  for (int i = 0; i < n; ++i) {
    const Unit& u = units_[i];
    for (int c : u.children)
      if (c < 0 || c >= i) fail(ErrorKind::Malformed, "unit " + std::to_string(i) + " has a child that is not earlier");
    switch (u.kind) {
      case UnitKind::Input:
      case UnitKind::KernelInput:
        scopes_[i] = Scope::single(u.var);
        break;
      case UnitKind::Constant:
        break;
      case UnitKind::Sum: {
        Scope s = u.children.empty() ? Scope() : scopes_[u.children[0]];
        for (int c : u.children) {
          if (scopes_[c] != s) smooth_ = false;
          s |= scopes_[c];
        }
        scopes_[i] = s;
        break;
      }
      case UnitKind::Product: {
        Scope s;
        for (int c : u.children) {
          if (!s.disjoint(scopes_[c])) decomposable_ = false;
          s |= scopes_[c];
        }
        scopes_[i] = s;
        break;
      }
    }
  }
}

std::uint64_t UnitGraph::structure_hash() const {
  std::uint64_t h = mix(0, static_cast<std::uint64_t>(root_));
  for (const Unit& u : units_) {
    h = mix(h, static_cast<std::uint64_t>(u.kind));
    h = mix(h, static_cast<std::uint64_t>(u.var + 1));
    for (double p : u.params) h = mix(h, bits_of(p));
    for (int c : u.children) h = mix(h, static_cast<std::uint64_t>(c));
    h = mix(h, 0xFFFF);
  }
  return h;
}

int GraphBuilder::add_unit(Unit u) {
  const int id = size();
  Scope s;
  for (int c : u.children) {
    if (c < 0 || c >= id) fail(ErrorKind::Malformed, "child id must refer to an earlier unit");
    s |= scopes_[c];
  }
  if (u.kind == UnitKind::Input || u.kind == UnitKind::KernelInput) s = Scope::single(u.var);
  units_.push_back(std::move(u));
  scopes_.push_back(s);
  return id;
}

int GraphBuilder::add_input(VarId v, std::vector<double> weights) {
  domain_.check_var(v);
  if (static_cast<int>(weights.size()) != domain_.card(v))
    fail(ErrorKind::InvalidInput, "input unit on variable " + std::to_string(v) + " needs " +
                                      std::to_string(domain_.card(v)) + " weights");
  bool positive = false;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) fail(ErrorKind::InvalidInput, "input weights must be finite and nonnegative");
    positive = positive || w > 0.0;
  }
  if (!positive) fail(ErrorKind::InvalidInput, "input unit needs a positive weight");
  return add_unit(Unit{UnitKind::Input, v, std::move(weights), {}});
}

int GraphBuilder::add_kernel_input(VarId v, std::vector<double> table) {
  domain_.check_var(v);
  const auto c = static_cast<std::size_t>(domain_.card(v));
  if (table.size() != c * c)
    fail(ErrorKind::InvalidInput, "kernel table on variable " + std::to_string(v) + " must be " +
                                      std::to_string(c) + "x" + std::to_string(c));
  for (double w : table)
    if (!std::isfinite(w) || w < 0.0) fail(ErrorKind::InvalidInput, "kernel table entries must be finite and nonnegative");
  return add_unit(Unit{UnitKind::KernelInput, v, std::move(table), {}});
}

int GraphBuilder::add_constant(double value) {
  if (!std::isfinite(value)) fail(ErrorKind::InvalidInput, "constant must be finite");
  return add_unit(Unit{UnitKind::Constant, -1, {value}, {}});
}

int GraphBuilder::add_sum(std::vector<int> children, std::vector<double> weights) {
  if (children.empty()) fail(ErrorKind::InvalidInput, "sum unit needs children");
  if (children.size() != weights.size()) fail(ErrorKind::InvalidInput, "sum unit needs one weight per child");
  for (double w : weights)
    if (!std::isfinite(w)) fail(ErrorKind::InvalidInput, "sum weights must be finite");
  return add_unit(Unit{UnitKind::Sum, -1, std::move(weights), std::move(children)});
}

int GraphBuilder::add_product(std::vector<int> children) {
  if (children.empty()) fail(ErrorKind::InvalidInput, "product unit needs children");
  for (int c : children)
    if (c < 0 || c >= size()) fail(ErrorKind::Malformed, "child id must refer to an earlier unit");
  if (children.size() == 1) return children[0];
  // Empty scopes sort last.
  std::stable_sort(children.begin(), children.end(), [&](int a, int b) {
    const auto la = static_cast<unsigned>(scopes_[a].lowest());
    const auto lb = static_cast<unsigned>(scopes_[b].lowest());
    return la < lb;
  });
  int acc = children.back();
  for (std::size_t i = children.size() - 1; i-- > 0;)
    acc = add_unit(Unit{UnitKind::Product, -1, {}, {children[i], acc}});
  return acc;
}

UnitGraph GraphBuilder::build(int root, double scale) const {
  if (root < 0 || root >= size()) fail(ErrorKind::Malformed, "root id out of range");
  std::vector<char> live(units_.size(), 0);
  live[root] = 1;
  for (int i = root; i >= 0; --i)
    if (live[i])
      for (int c : units_[i].children) live[c] = 1;
  std::vector<int> remap(units_.size(), -1);
  std::vector<Unit> out;
  for (int i = 0; i <= root; ++i) {
    if (!live[i]) continue;
    Unit u = units_[i];
    for (int& c : u.children) c = remap[c];
    remap[i] = static_cast<int>(out.size());
    out.push_back(std::move(u));
  }
  return UnitGraph(domain_, std::move(out), remap[root], scale);
}

}  // namespace ek
