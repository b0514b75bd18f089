#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ek/domain.hpp"
#include "ek/vtree.hpp"

namespace ek {

enum class UnitKind { Input, KernelInput, Constant, Sum, Product };

struct Unit {
  UnitKind kind = UnitKind::Constant;
  VarId var = -1;
  // Input: per-category weights. KernelInput: row-major card x card table
  // indexed [left][right]. Constant: {value}. Sum: child weights.
  std::vector<double> params;
  std::vector<int> children;

  bool is_leaf() const {
    return kind == UnitKind::Input || kind == UnitKind::KernelInput ||
           kind == UnitKind::Constant;
  }
  bool operator==(const Unit&) const = default;
};

// Topologically ordered DAG shared by probabilistic and kernel circuits.
// The encoded function is scale() * f_root.
class UnitGraph {
 public:
  const Domain& domain() const { return domain_; }
  int size() const { return static_cast<int>(units_.size()); }
  const Unit& unit(int i) const { return units_[i]; }
  const std::vector<Unit>& units() const { return units_; }
  int root() const { return root_; }
  double scale() const { return scale_; }
  Scope scope(int i) const { return scopes_[i]; }
  Scope root_scope() const { return scopes_[root_]; }
  bool smooth() const { return smooth_; }
  bool decomposable() const { return decomposable_; }
  const std::optional<Vtree>& vtree() const { return vtree_; }
  void set_vtree(std::optional<Vtree> v) { vtree_ = std::move(v); }
  void set_scale(double s) { scale_ = s; }

  // Same units, root and scale.
  bool same_function_graph(const UnitGraph& o) const {
    return root_ == o.root_ && scale_ == o.scale_ && units_ == o.units_;
  }
  bool same_structure(const UnitGraph& o) const {
    return root_ == o.root_ && units_ == o.units_;
  }
  std::uint64_t structure_hash() const;

 protected:
  UnitGraph() = default;
  UnitGraph(Domain d, std::vector<Unit> units, int root, double scale);

 private:
  Domain domain_;
  std::vector<Unit> units_;
  int root_ = -1;
  double scale_ = 1.0;
  std::vector<Scope> scopes_;
  bool smooth_ = true;
  bool decomposable_ = true;
  std::optional<Vtree> vtree_;

  friend class GraphBuilder;
};

class Circuit : public UnitGraph {
 public:
  Circuit() = default;
  explicit Circuit(UnitGraph g) : UnitGraph(std::move(g)) {}
};

// Incremental construction. Products are binarized on insertion: children
// are ordered by smallest scope variable and folded to the right; a
// single-child product aliases its child. build() keeps only units
// reachable from the root, renumbered in insertion order.
class GraphBuilder {
 public:
  explicit GraphBuilder(Domain d) : domain_(std::move(d)) {}

  int add_input(VarId v, std::vector<double> weights);
  int add_kernel_input(VarId v, std::vector<double> table);
  int add_constant(double value);
  int add_sum(std::vector<int> children, std::vector<double> weights);
  int add_product(std::vector<int> children);
  // Raw insertion, no validation beyond child ordering.
  int add_unit(Unit u);

  int size() const { return static_cast<int>(units_.size()); }
  Scope scope(int id) const { return scopes_[id]; }
  const Domain& domain() const { return domain_; }

  UnitGraph build(int root, double scale = 1.0) const;
  Circuit build_circuit(int root, double scale = 1.0) const {
    return Circuit(build(root, scale));
  }

 private:
  Domain domain_;
  std::vector<Unit> units_;
  std::vector<Scope> scopes_;
};

// Compensated summation.
class KahanSum {
 public:
  void add(double v) {
    const double y = v - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

}  // namespace ek
