#include "ek/expected_kernel.hpp"

#include <array>
#include <unordered_map>

#include "ek/error.hpp"
#include "ek/inference.hpp"
#include "ek/structure.hpp"

namespace ek {

namespace {

// Memoized joint descent over N circuits that share their scope structure.
// N = 3: (p, q, k) with kernel leaves in the last circuit. N = 2: (p, f).
template <int N>
class Recursion {
 public:
  using Ids = std::array<int, N>;

  explicit Recursion(std::array<const UnitGraph*, N> g) : g_(g) {
    for (int i = 0; i < N; ++i) {
      if (static_cast<std::int64_t>(g_[i]->size()) >= (std::int64_t{1} << kBits))
        fail(ErrorKind::ResourceBound, "circuit too large for the memo key");
      empty_value_[i].assign(g_[i]->size(), 0.0);
      for (int u = 0; u < g_[i]->size(); ++u) {
        if (!g_[i]->scope(u).empty()) continue;
        const Unit& unit = g_[i]->unit(u);
        double v = unit.kind == UnitKind::Product ? 1.0 : 0.0;
        if (unit.kind == UnitKind::Constant) v = unit.params[0];
        for (std::size_t c = 0; c < unit.children.size(); ++c) {
          if (unit.kind == UnitKind::Sum) v += unit.params[c] * empty_value_[i][unit.children[c]];
          if (unit.kind == UnitKind::Product) v *= empty_value_[i][unit.children[c]];
        }
        empty_value_[i][u] = v;
      }
    }
    memo_.reserve(1024);
  }

  double run() {
    Ids roots;
    for (int i = 0; i < N; ++i) roots[i] = g_[i]->root();
    return rec(roots);
  }

  std::size_t memo_entries() const { return memo_.size(); }

 private:
  static constexpr int kBits = N == 3 ? 21 : 31;

  const Unit& unit(int i, int id) const { return g_[i]->unit(id); }
  Scope scope(int i, int id) const { return g_[i]->scope(id); }

  double rec(const Ids& ids) {
    const Scope s = scope(0, ids[0]);
    for (int i = 1; i < N; ++i)
      if (scope(i, ids[i]) != s)
        fail(ErrorKind::StructuralPrecondition,
             "paired units have different scopes " + to_string(s) + " and " + to_string(scope(i, ids[i])));
    if (s.empty()) {
      double v = 1.0;
      for (int i = 0; i < N; ++i) v *= empty_value_[i][ids[i]];
      return v;
    }
    std::uint64_t key = 0;
    for (int i = 0; i < N; ++i) key = (key << kBits) | static_cast<std::uint64_t>(ids[i]);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const double v = compute(ids);
    memo_.emplace(key, v);
    return v;
  }

  double compute(const Ids& ids) {
    bool any_sum = false;
    for (int i = 0; i < N; ++i) any_sum = any_sum || unit(i, ids[i]).kind == UnitKind::Sum;
    if (any_sum) return expand_sums(ids);

    // A product with a single non-empty child is that child times constants.
    Ids next = ids;
    double factor = 1.0;
    bool peeled = false;
    for (int i = 0; i < N; ++i) {
      while (unit(i, next[i]).kind == UnitKind::Product) {
        int live = -1, count = 0;
        for (int c : unit(i, next[i]).children)
          if (!scope(i, c).empty()) {
            live = c;
            ++count;
          }
        if (count != 1) break;
        for (int c : unit(i, next[i]).children)
          if (c != live) factor *= empty_value_[i][c];
        next[i] = live;
        peeled = true;
      }
    }
    if (peeled) return factor * rec(next);

    bool all_products = true, all_leaves = true;
    for (int i = 0; i < N; ++i) {
      all_products = all_products && unit(i, ids[i]).kind == UnitKind::Product;
      all_leaves = all_leaves && unit(i, ids[i]).is_leaf();
    }
    if (all_products) return split_products(ids);
    if (all_leaves) return leaves(ids);
    fail(ErrorKind::Malformed, "an input unit is paired with a product unit");
  }

  double expand_sums(const Ids& ids) {
    std::array<std::vector<std::pair<int, double>>, N> options;
    for (int i = 0; i < N; ++i) {
      const Unit& u = unit(i, ids[i]);
      if (u.kind == UnitKind::Sum) {
        for (std::size_t c = 0; c < u.children.size(); ++c)
          if (u.params[c] != 0.0) options[i].push_back({u.children[c], u.params[c]});
      } else {
        options[i].push_back({ids[i], 1.0});
      }
      if (options[i].empty()) return 0.0;
    }
    KahanSum total;
    std::array<std::size_t, N> pos{};
    while (true) {
      Ids child;
      double w = 1.0;
      for (int i = 0; i < N; ++i) {
        child[i] = options[i][pos[i]].first;
        w *= options[i][pos[i]].second;
      }
      total.add(w * rec(child));
      int i = N - 1;
      for (; i >= 0; --i) {
        if (++pos[i] < options[i].size()) break;
        pos[i] = 0;
      }
      if (i < 0) break;
    }
    return total.value();
  }

  double split_products(const Ids& ids) {
    double factor = 1.0;
    std::array<std::vector<int>, N> parts;
    for (int i = 0; i < N; ++i)
      for (int c : unit(i, ids[i]).children) {
        if (scope(i, c).empty())
          factor *= empty_value_[i][c];
        else
          parts[i].push_back(c);
      }
    for (int i = 1; i < N; ++i)
      if (parts[i].size() != parts[0].size())
        fail(ErrorKind::StructuralPrecondition, "product units decompose " + to_string(scope(0, ids[0])) + " differently");
    double v = factor;
    for (int c0 : parts[0]) {
      Ids child;
      child[0] = c0;
      const Scope s = scope(0, c0);
      for (int i = 1; i < N; ++i) {
        child[i] = -1;
        for (int c : parts[i])
          if (scope(i, c) == s) child[i] = c;
        if (child[i] < 0)
          fail(ErrorKind::StructuralPrecondition, "product units decompose " + to_string(scope(0, ids[0])) + " differently");
      }
      v *= rec(child);
      if (v == 0.0) return 0.0;
    }
    return v;
  }

  double leaves(const Ids& ids) {
    const Unit& a = unit(0, ids[0]);
    const Unit& b = unit(1, ids[1]);
    if (a.kind != UnitKind::Input || b.kind != UnitKind::Input)
      fail(ErrorKind::Malformed, "expected distribution leaves in the first two circuits");
    const int card = static_cast<int>(a.params.size());
    KahanSum s;
    if constexpr (N == 3) {
      const Unit& t = unit(2, ids[2]);
      if (t.kind != UnitKind::KernelInput) fail(ErrorKind::Malformed, "expected a kernel leaf");
      for (int x = 0; x < card; ++x) {
        if (a.params[x] == 0.0) continue;
        KahanSum row;
        for (int y = 0; y < card; ++y) row.add(b.params[y] * t.params[x * card + y]);
        s.add(a.params[x] * row.value());
      }
    } else {
      for (int x = 0; x < card; ++x) s.add(a.params[x] * b.params[x]);
    }
    return s.value();
  }

  std::array<const UnitGraph*, N> g_;
  std::array<std::vector<double>, N> empty_value_;
  std::unordered_map<std::uint64_t, double> memo_;
};

double normalizer(const Circuit& c) {
  const double z = partition_function(c);
  if (!(z > 0.0)) fail(ErrorKind::InvalidInput, "circuit has no positive mass");
  return z;
}

}  // namespace

ExpectedKernelResult expected_kernel_stats(const Circuit& p, const Circuit& q, const KernelCircuit& k,
                                           bool validate) {
  if (!(p.domain() == q.domain()) || !(p.domain() == k.domain()))
    fail(ErrorKind::InvalidInput, "circuits are over different domains");
  if (validate) {
    if (!check_compatible(p, q)) fail(ErrorKind::StructuralPrecondition, "p and q are not compatible");
    if (!check_kernel_compatible(k, p, q))
      fail(ErrorKind::StructuralPrecondition, "kernel circuit is not kernel-compatible with p and q");
  }
  Recursion<3> r({&p, &q, &k});
  const double raw = r.run() * p.scale() * q.scale() * k.scale();
  return {raw / (normalizer(p) * normalizer(q)), r.memo_entries()};
}

double expected_kernel(const Circuit& p, const Circuit& q, const KernelCircuit& k) {
  return expected_kernel_stats(p, q, k).value;
}

double expected_product(const Circuit& p, const Circuit& f) {
  if (!(p.domain() == f.domain())) fail(ErrorKind::InvalidInput, "circuits are over different domains");
  if (!check_compatible(p, f)) fail(ErrorKind::StructuralPrecondition, "circuits are not compatible");
  Recursion<2> r({&p, &f});
  return r.run() * p.scale() * f.scale() / normalizer(p);
}

double singly_expected_kernel(const Circuit& p, const KernelCircuit& k, const Assignment& x_fixed, Side side) {
  return expected_product(p, project(k, side, x_fixed));
}

double mmd2(const Circuit& p, const Circuit& q, const KernelCircuit& k) {
  return expected_kernel(p, p, k) + expected_kernel(q, q, k) - 2.0 * expected_kernel(p, q, k);
}

double brute_force_expected_kernel(const Circuit& p, const Circuit& q, const KernelCircuit& k, std::uint64_t cap) {
  const Scope s = p.root_scope();
  if (q.root_scope() != s || k.root_scope() != s)
    fail(ErrorKind::StructuralPrecondition, "circuits range over different variables");
  const Domain& d = p.domain();
  require_states(d.num_states(s), cap, "expected-kernel enumeration");
  std::vector<Assignment> states;
  std::vector<double> pv, qv;
  Evaluator ep(p), eq(q), ek(k);
  Assignment x(d.size(), 0);
  for_each_state(d, s, x, [&](const Assignment& st) {
    states.push_back(st);
    pv.push_back(ep(st));
    qv.push_back(eq(st));
  });
  KahanSum total, zp, zq;
  for (std::size_t i = 0; i < states.size(); ++i) {
    zp.add(pv[i]);
    zq.add(qv[i]);
    if (pv[i] == 0.0) continue;
    KahanSum row;
    for (std::size_t j = 0; j < states.size(); ++j)
      if (qv[j] != 0.0) row.add(qv[j] * ek.paired(states[i], states[j]));
    total.add(pv[i] * row.value());
  }
  return total.value() / (zp.value() * zq.value());
}

}  // namespace ek
