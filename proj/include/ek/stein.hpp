#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "ek/circuit.hpp"
#include "ek/kernel_circuit.hpp"
#include "ek/parallel.hpp"

namespace ek {

// Cyclic successor on coordinate i (category index order) and its inverse.
Assignment negate(Assignment x, VarId i, const Domain& d);
Assignment negate_inverse(Assignment x, VarId i, const Domain& d);

// s_i(x) = 1 - p(negate(x, i)) / p(x).
std::vector<double> score(const Circuit& p, const Assignment& x);

// Stein kernel k_p summed over all coordinates. With r_i(y) = p(negate(y,i))/p(y)
// and ~ the inverse shift on coordinate i:
//   r_i(x) r_i(y) k(x,y) - r_i(x) k(x,~y) - r_i(y) k(~x,y) + k(~x,~y).
// This equals the trace form s(x)^T k s(y) - s(x)^T D_y k - D_x k^T s(y) + tr D_x D_y k
// with D the inverse-shift difference; for binary coordinates ~ is the shift itself.
double stein_kernel(const Circuit& p, const KernelCircuit& k, const Assignment& x, const Assignment& y);
// The single-coordinate summand.
double stein_kernel_term(const Circuit& p, const KernelCircuit& k, const Assignment& x, const Assignment& y, VarId i);

Eigen::MatrixXd gram_matrix(const Circuit& p, const KernelCircuit& k, const std::vector<Assignment>& samples,
                            unsigned workers = default_workers());

struct CollapsedSample {
  Assignment x_s;  // kMissing outside the sampled set
  std::shared_ptr<const Circuit> conditional;
  double weight = 0.0;
};

// k_{p,s}(x_s, y_s), the Stein kernel averaged over p(X_c | x_s) x p(X_c | y_s),
// evaluated through expected kernels of conditionals. Terms for coordinates
// outside s have zero conditional mean and are skipped. Conditionals,
// restricted kernels and expected-kernel values are interned, so repeated
// calls with shared conditioning are cheap.
class ConditionalStein {
 public:
  ConditionalStein(const Circuit& p, const KernelCircuit& k, Scope s);

  Scope sampled() const { return s_; }
  // Normalized p(X_c | x_s); throws ZeroProbability when p(x_s) = 0.
  std::shared_ptr<const Circuit> conditional(const Assignment& x_s);
  // Registers an existing conditional for x_s instead of recomputing it.
  void adopt(const Assignment& x_s, std::shared_ptr<const Circuit> conditional);
  double operator()(const Assignment& x_s, const Assignment& y_s);
  // Entries (i, j) computed once for i <= j; expected kernels for distinct
  // (conditional, conditional, kernel) triples run on `workers` threads.
  Eigen::MatrixXd gram(const std::vector<Assignment>& xs, unsigned workers = default_workers());

  std::size_t distinct_conditionals() const { return circuits_.size(); }
  std::size_t distinct_kernels() const { return kernels_.size(); }
  std::size_t cached_expectations() const { return m_cache_.size(); }

 private:
  struct CondEntry {
    double mass = 0.0;
    int circuit = -1;  // interned index, -1 when mass is zero
    std::shared_ptr<const Circuit> normalized;
  };
  struct KernelEntry {
    int kernel = -1;
    double scale = 0.0;
  };
  struct Term {
    double coef;
    int a, b, kernel;
  };
  using Triple = std::tuple<int, int, int>;

  Assignment key(const Assignment& x) const;
  const CondEntry& cond(const Assignment& x_s);
  int intern_circuit(const Circuit& c);
  const KernelEntry& restricted(const Assignment& left, const Assignment& right);
  // Appends the expansion of k_{p,s}(x_s, y_s).
  void expand(const Assignment& x_s, const Assignment& y_s, std::vector<Term>& out);
  double evaluate_terms(const std::vector<Term>& terms) const;
  double m_value(const Triple& t);

  const Circuit* p_;
  const KernelCircuit* k_;
  Scope s_;
  std::map<Assignment, CondEntry> cond_;
  std::vector<std::shared_ptr<const Circuit>> circuits_;
  std::unordered_multimap<std::uint64_t, int> circuit_index_;
  std::map<std::pair<Assignment, Assignment>, KernelEntry> restricted_;
  std::vector<KernelCircuit> kernels_;
  std::unordered_multimap<std::uint64_t, int> kernel_index_;
  std::map<Triple, double> m_cache_;
};

double conditional_stein_kernel(const Circuit& p, const KernelCircuit& k, const Assignment& x_s,
                                const Assignment& y_s, Scope s);

Eigen::MatrixXd gram_matrix_collapsed(const Circuit& p, const KernelCircuit& k,
                                      const std::vector<CollapsedSample>& samples, Scope s,
                                      unsigned workers = default_workers());

// Enumerates E_{x,x'~q}[k_p(x,x')]. Up to kMatrixStates states the Stein-kernel
// matrix is built once, so one oracle serves many q cheaply; larger domains
// stream kernel rows on every call.
class KdsdOracle {
 public:
  KdsdOracle(const Circuit& p, const KernelCircuit& k, std::uint64_t cap = std::uint64_t{1} << 16);
  double operator()(const Circuit& q) const;

 private:
  static constexpr std::size_t kMatrixStates = 4096;

  KernelCircuit k_;
  Scope scope_;
  std::vector<Assignment> states_;
  std::vector<std::vector<double>> r_;
  std::vector<std::vector<std::size_t>> inv_;
  Eigen::MatrixXd kp_;
};

double brute_force_kdsd(const Circuit& q, const Circuit& p, const KernelCircuit& k,
                        std::uint64_t cap = std::uint64_t{1} << 16);

}  // namespace ek
