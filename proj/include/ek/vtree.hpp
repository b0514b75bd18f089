#pragma once

#include <vector>

#include "ek/domain.hpp"
#include "ek/rng.hpp"

namespace ek {

// Binary tree whose leaves partition a variable set.
class Vtree {
 public:
  struct Node {
    VarId var = -1;  // leaf label, -1 for internal nodes
    int left = -1;
    int right = -1;
    Scope scope;
  };

  Vtree() = default;

  static Vtree leaf(VarId v);
  static Vtree join(const Vtree& left, const Vtree& right);
  // ((v0, v1), v2), ...
  static Vtree left_linear(const std::vector<VarId>& order);
  // v0, (v1, (v2, ...))
  static Vtree right_linear(const std::vector<VarId>& order);
  static Vtree balanced(const std::vector<VarId>& order);
  static Vtree random(const std::vector<VarId>& vars, Rng& rng);

  bool empty() const { return nodes_.empty(); }
  int root() const { return root_; }
  const Node& node(int i) const { return nodes_[i]; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  bool is_leaf(int i) const { return nodes_[i].var >= 0; }
  Scope scope() const { return empty() ? Scope() : nodes_[root_].scope; }

  // Internal node whose scope is exactly `s`, or -1.
  int find(Scope s) const;
  // Drops leaves outside `keep` and splices out nodes left with one child.
  Vtree restrict_to(Scope keep) const;

  bool operator==(const Vtree& o) const;

 private:
  int add(Node n);
  int copy_from(const Vtree& other, int at);

  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace ek
