#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace ek {

using VarId = int;
// Partial assignments mark unobserved coordinates with kMissing.
using Assignment = std::vector<int>;
inline constexpr int kMissing = -1;
inline constexpr int kMaxVars = 64;

// Variable-id set over 0..63.
class Scope {
 public:
  constexpr Scope() = default;
  constexpr explicit Scope(std::uint64_t bits) : bits_(bits) {}

  static Scope single(VarId v) { return Scope(std::uint64_t{1} << v); }
  static Scope first(int n) {
    return Scope(n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1);
  }
  static Scope of(const std::vector<VarId>& vars);

  bool contains(VarId v) const { return (bits_ >> v) & 1u; }
  bool empty() const { return bits_ == 0; }
  int size() const { return std::popcount(bits_); }
  VarId lowest() const { return bits_ ? std::countr_zero(bits_) : -1; }
  std::uint64_t bits() const { return bits_; }
  std::vector<VarId> vars() const;

  bool subset_of(Scope o) const { return (bits_ & ~o.bits_) == 0; }
  bool disjoint(Scope o) const { return (bits_ & o.bits_) == 0; }

  Scope operator|(Scope o) const { return Scope(bits_ | o.bits_); }
  Scope operator&(Scope o) const { return Scope(bits_ & o.bits_); }
  Scope operator-(Scope o) const { return Scope(bits_ & ~o.bits_); }
  Scope& operator|=(Scope o) {
    bits_ |= o.bits_;
    return *this;
  }

  auto operator<=>(const Scope&) const = default;

 private:
  std::uint64_t bits_ = 0;
};

std::string to_string(Scope s);

class Domain {
 public:
  Domain() = default;
  explicit Domain(std::vector<int> cards);

  int size() const { return static_cast<int>(cards_.size()); }
  int card(VarId v) const { return cards_[v]; }
  const std::vector<int>& cards() const { return cards_; }
  Scope all() const { return Scope::first(size()); }

  // Number of joint states of the scope, saturating at UINT64_MAX.
  std::uint64_t num_states(Scope s) const;

  void check_var(VarId v) const;
  // Every variable in `s` must carry a valid category.
  void check_assigned(const Assignment& x, Scope s) const;
  // Entries are either kMissing or valid categories.
  void check_partial(const Assignment& x) const;
  Scope observed(const Assignment& x) const;

  bool operator==(const Domain&) const = default;

 private:
  std::vector<int> cards_;
};

// Enumeration cap, EK_MAX_STATES or 2^20.
std::uint64_t max_states();
void require_states(std::uint64_t n, std::uint64_t cap, const std::string& what);

// Calls f(x) for every joint state of `s`, odometer order with the lowest
// variable varying fastest. Coordinates outside `s` are left untouched.
template <class F>
void for_each_state(const Domain& d, Scope s, Assignment& x, F&& f) {
  const std::vector<VarId> vars = s.vars();
  for (VarId v : vars) x[v] = 0;
  while (true) {
    f(static_cast<const Assignment&>(x));
    std::size_t k = 0;
    for (; k < vars.size(); ++k) {
      if (++x[vars[k]] < d.card(vars[k])) break;
      x[vars[k]] = 0;
    }
    if (k == vars.size()) return;
  }
}

}  // namespace ek
