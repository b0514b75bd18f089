#include "ek/structure.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "ek/error.hpp"

namespace ek {

const char* to_string(Tristate t) {
  switch (t) {
    case Tristate::False: return "false";
    case Tristate::True: return "true";
    case Tristate::Unknown: return "unknown";
  }
  return "unknown";
}

namespace {

using Split = std::pair<std::uint64_t, std::uint64_t>;
using SplitMap = std::map<std::uint64_t, std::set<Split>>;

// Canonical unordered split per product scope. Children with empty scope
// carry no decomposition and are ignored. Returns false for a product with
// more than two non-empty children.
bool collect_splits(const UnitGraph& c, SplitMap& out) {
  for (int i = 0; i <= c.root(); ++i) {
    const Unit& u = c.unit(i);
    if (u.kind != UnitKind::Product) continue;
    std::vector<std::uint64_t> parts;
    for (int ch : u.children)
      if (!c.scope(ch).empty()) parts.push_back(c.scope(ch).bits());
    if (parts.size() > 2) return false;
    if (parts.size() < 2) continue;
    out[c.scope(i).bits()].insert({std::min(parts[0], parts[1]), std::max(parts[0], parts[1])});
  }
  return true;
}

// Sparse per-variable support masks: only variables whose support is a
// strict subset of their categories are listed.
using Clamp = std::vector<std::pair<VarId, std::uint64_t>>;

std::uint64_t full_mask(int card) { return card >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << card) - 1; }

bool disjoint_support(const Clamp& a, const Clamp& b) {
  for (const auto& [va, ma] : a)
    for (const auto& [vb, mb] : b)
      if (va == vb && (ma & mb) == 0) return true;
  return false;
}

bool structurally_deterministic(const UnitGraph& c) {
  const Domain& d = c.domain();
  std::vector<Clamp> clamp(c.size());
  for (int i = 0; i <= c.root(); ++i) {
    const Unit& u = c.unit(i);
    switch (u.kind) {
      case UnitKind::Input:
      case UnitKind::KernelInput: {
        if (u.kind == UnitKind::KernelInput) break;
        std::uint64_t m = 0;
        for (std::size_t a = 0; a < u.params.size() && a < 64; ++a)
          if (u.params[a] != 0.0) m |= std::uint64_t{1} << a;
        if (m != full_mask(d.card(u.var))) clamp[i].push_back({u.var, m});
        break;
      }
      case UnitKind::Constant:
        break;
      case UnitKind::Product:
        for (int ch : u.children) clamp[i].insert(clamp[i].end(), clamp[ch].begin(), clamp[ch].end());
        std::sort(clamp[i].begin(), clamp[i].end());
        break;
      case UnitKind::Sum: {
        std::vector<int> kids;
        for (std::size_t j = 0; j < u.children.size(); ++j)
          if (u.params[j] != 0.0) kids.push_back(u.children[j]);
        for (std::size_t x = 0; x < kids.size(); ++x)
          for (std::size_t y = x + 1; y < kids.size(); ++y)
            if (!disjoint_support(clamp[kids[x]], clamp[kids[y]])) return false;
        if (kids.empty()) break;
        for (const auto& [v, m] : clamp[kids[0]]) {
          std::uint64_t uni = m;
          bool everywhere = true;
          for (std::size_t x = 1; x < kids.size() && everywhere; ++x) {
            const auto it = std::find_if(clamp[kids[x]].begin(), clamp[kids[x]].end(),
                                         [&](const auto& e) { return e.first == v; });
            if (it == clamp[kids[x]].end())
              everywhere = false;
            else
              uni |= it->second;
          }
          if (everywhere && uni != full_mask(d.card(v))) clamp[i].push_back({v, uni});
        }
        break;
      }
    }
  }
  return true;
}

bool exhaustive_deterministic(const UnitGraph& c) {
  const Domain& d = c.domain();
  std::vector<double> val(c.size());
  Assignment x(d.size(), 0);
  bool ok = true;
  for_each_state(d, c.root_scope(), x, [&](const Assignment& s) {
    if (!ok) return;
    for (int i = 0; i <= c.root() && ok; ++i) {
      const Unit& u = c.unit(i);
      switch (u.kind) {
        case UnitKind::Input: val[i] = u.params[s[u.var]]; break;
        case UnitKind::KernelInput: val[i] = 1.0; break;
        case UnitKind::Constant: val[i] = u.params[0]; break;
        case UnitKind::Product: {
          double p = 1.0;
          for (int ch : u.children) p *= val[ch];
          val[i] = p;
          break;
        }
        case UnitKind::Sum: {
          double t = 0.0;
          int nonzero = 0;
          for (std::size_t j = 0; j < u.children.size(); ++j) {
            const double term = u.params[j] * val[u.children[j]];
            if (term != 0.0) ++nonzero;
            t += term;
          }
          if (nonzero > 1) ok = false;
          val[i] = t;
          break;
        }
      }
    }
  });
  return ok;
}

}  // namespace

Tristate check_deterministic(const UnitGraph& c) {
  if (structurally_deterministic(c)) return Tristate::True;
  if (c.domain().num_states(c.root_scope()) > (std::uint64_t{1} << 20)) return Tristate::Unknown;
  return exhaustive_deterministic(c) ? Tristate::True : Tristate::False;
}

std::optional<Vtree> extract_vtree(const UnitGraph& c) {
  if (!c.smooth() || !c.decomposable()) return std::nullopt;
  const Scope root = c.root_scope();
  if (root.empty()) return std::nullopt;
  SplitMap splits;
  if (!collect_splits(c, splits)) return std::nullopt;
  std::vector<Scope> scopes;
  for (const auto& [s, set] : splits) {
    if (set.size() != 1) return std::nullopt;
    scopes.emplace_back(s);
  }
  for (std::size_t a = 0; a < scopes.size(); ++a)
    for (std::size_t b = a + 1; b < scopes.size(); ++b) {
      const Scope x = scopes[a], y = scopes[b];
      if (!x.disjoint(y) && !x.subset_of(y) && !y.subset_of(x)) return std::nullopt;
    }

  bool ok = true;
  std::function<Vtree(Scope)> build = [&](Scope s) -> Vtree {
    if (!ok) return {};
    if (s.size() == 1) return Vtree::leaf(s.lowest());
    const auto it = splits.find(s.bits());
    if (it != splits.end()) {
      const Scope a(it->second.begin()->first), b(it->second.begin()->second);
      for (Scope t : scopes)
        if (t != s && t.subset_of(s) && !t.subset_of(a) && !t.subset_of(b)) {
          ok = false;
          return {};
        }
      return Vtree::join(build(a), build(b));
    }
    // No product covers s: group the maximal recorded scopes inside it.
    std::vector<Scope> blocks;
    for (Scope t : scopes) {
      if (t == s || !t.subset_of(s)) continue;
      bool maximal = true;
      for (Scope u : scopes)
        if (u != t && u != s && u.subset_of(s) && t.subset_of(u)) maximal = false;
      if (maximal) blocks.push_back(t);
    }
    Scope covered;
    for (Scope t : blocks) covered |= t;
    for (VarId v : (s - covered).vars()) blocks.push_back(Scope::single(v));
    std::sort(blocks.begin(), blocks.end(), [](Scope x, Scope y) { return x.lowest() < y.lowest(); });
    Vtree acc = build(blocks.back());
    for (std::size_t i = blocks.size() - 1; i-- > 0;) acc = Vtree::join(build(blocks[i]), acc);
    return acc;
  };
  Vtree v = build(root);
  if (!ok) return std::nullopt;
  return v;
}

StructureReport check_structural(const UnitGraph& c) {
  StructureReport r;
  r.smooth = c.smooth();
  r.decomposable = c.decomposable();
  r.deterministic = check_deterministic(c);
  if (r.smooth && r.decomposable) r.structured = extract_vtree(c);
  return r;
}

bool check_compatible(const UnitGraph& a, const UnitGraph& b) {
  if (!a.smooth() || !a.decomposable() || !b.smooth() || !b.decomposable()) return false;
  SplitMap sa, sb;
  if (!collect_splits(a, sa) || !collect_splits(b, sb)) return false;
  for (const auto& [scope, set] : sa) {
    const auto it = sb.find(scope);
    if (it == sb.end()) continue;
    std::set<Split> both = set;
    both.insert(it->second.begin(), it->second.end());
    if (both.size() != 1) return false;
  }
  return true;
}

}  // namespace ek
