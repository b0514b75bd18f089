#include "ek/domain.hpp"

#include <cstdlib>
#include <limits>

#include "ek/error.hpp"

namespace ek {

Scope Scope::of(const std::vector<VarId>& vars) {
  Scope s;
  for (VarId v : vars) {
    if (v < 0 || v >= kMaxVars) fail(ErrorKind::InvalidInput, "variable id out of range");
    s |= single(v);
  }
  return s;
}

std::vector<VarId> Scope::vars() const {
  std::vector<VarId> out;
  out.reserve(size());
  for (std::uint64_t b = bits_; b; b &= b - 1) out.push_back(std::countr_zero(b));
  return out;
}

std::string to_string(Scope s) {
  std::string out = "{";
  bool first = true;
  for (VarId v : s.vars()) {
    if (!first) out += ",";
    out += std::to_string(v);
    first = false;
  }
  return out + "}";
}

Domain::Domain(std::vector<int> cards) : cards_(std::move(cards)) {
  if (cards_.empty()) fail(ErrorKind::InvalidInput, "domain needs at least one variable");
  if (cards_.size() > kMaxVars) fail(ErrorKind::ResourceBound, "at most 64 variables supported");
  for (int c : cards_)
    if (c < 2) fail(ErrorKind::InvalidInput, "variable cardinality must be >= 2");
}

std::uint64_t Domain::num_states(Scope s) const {
  std::uint64_t n = 1;
  for (VarId v : s.vars()) {
    const auto c = static_cast<std::uint64_t>(cards_[v]);
    if (n > std::numeric_limits<std::uint64_t>::max() / c) return std::numeric_limits<std::uint64_t>::max();
    n *= c;
  }
  return n;
}

void Domain::check_var(VarId v) const {
  if (v < 0 || v >= size())
    fail(ErrorKind::InvalidInput, "variable " + std::to_string(v) + " not in domain");
}

void Domain::check_assigned(const Assignment& x, Scope s) const {
  if (static_cast<int>(x.size()) != size())
    fail(ErrorKind::InvalidInput, "assignment has " + std::to_string(x.size()) +
                                      " entries, domain has " + std::to_string(size()));
  for (VarId v : s.vars())
    if (x[v] < 0 || x[v] >= cards_[v])
      fail(ErrorKind::InvalidInput, "value " + std::to_string(x[v]) + " out of range for variable " +
                                        std::to_string(v));
}

void Domain::check_partial(const Assignment& x) const {
  if (static_cast<int>(x.size()) != size())
    fail(ErrorKind::InvalidInput, "assignment has " + std::to_string(x.size()) +
                                      " entries, domain has " + std::to_string(size()));
  for (int v = 0; v < size(); ++v)
    if (x[v] != kMissing && (x[v] < 0 || x[v] >= cards_[v]))
      fail(ErrorKind::InvalidInput, "value " + std::to_string(x[v]) + " out of range for variable " +
                                        std::to_string(v));
}

Scope Domain::observed(const Assignment& x) const {
  Scope s;
  for (int v = 0; v < static_cast<int>(x.size()); ++v)
    if (x[v] != kMissing) s |= Scope::single(v);
  return s;
}

std::uint64_t max_states() {
  if (const char* env = std::getenv("EK_MAX_STATES")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return std::uint64_t{1} << 20;
}

void require_states(std::uint64_t n, std::uint64_t cap, const std::string& what) {
  if (n > cap)
    fail(ErrorKind::ResourceBound, what + ": " + (n == UINT64_MAX ? std::string("too many") : std::to_string(n)) +
                                       " states exceed the cap of " + std::to_string(cap));
}

}  // namespace ek
