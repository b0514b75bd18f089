#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ek/circuit.hpp"
#include "ek/kernel_circuit.hpp"
#include "ek/rng.hpp"
#include "ek/structure.hpp"

namespace ek {

// f(x) = sum_i duals[i] * k(support[i], x) + bias.
struct SvrModel {
  std::vector<Assignment> support;
  std::vector<double> duals;
  double bias = 0.0;
  KernelCircuit kernel;
};

// Observed values with kMissing on the hidden coordinates.
struct MissingnessMask {
  Assignment x_s;
  Scope observed;
  Scope hidden;

  static MissingnessMask from_partial(const Domain& d, Assignment x_s);
};

double svr_predict(const SvrModel& m, const Assignment& x);

// b + sum_i w_i E[k(x^(i), (x_s, X_c))] with X_c ~ p(X_c | x_s). With
// nothing hidden this is svr_predict.
double expected_prediction(const SvrModel& m, const Circuit& p, const MissingnessMask& mask);

// Lower median of each column's category indices.
std::vector<int> column_medians(const std::vector<Assignment>& data, const Domain& d);
Assignment impute_median(const std::vector<int>& medians, const MissingnessMask& mask);

// argmax_{x_c} p(x_c | x_s). Deterministic circuits use a max-product pass
// (ties: first child, smallest category); otherwise hidden states are
// enumerated, keeping the first maximum in odometer order.
class MapImputer {
 public:
  explicit MapImputer(const Circuit& p);
  Assignment operator()(const MissingnessMask& mask) const;
  bool exact_circuit_map() const { return max_product_; }

 private:
  Assignment max_product(const Assignment& x_s) const;
  Assignment exhaustive(const Assignment& x_s) const;

  const Circuit* p_;
  bool max_product_ = false;
};

Assignment impute_map(const Circuit& p, const MissingnessMask& mask);

// Each coordinate hidden independently with probability pi.
MissingnessMask mcar_mask(const Assignment& x, double pi, Rng& rng);
MissingnessMask mcar_mask(const Assignment& x, double pi, std::uint64_t seed);

// Kernel ridge regression: (K + lambda I) w = y - mean(y), bias = mean(y).
// `condition` receives the 2-norm condition number of K + lambda I.
SvrModel fit_kernel_regressor(const std::vector<Assignment>& xs, const std::vector<double>& ys,
                              const KernelCircuit& k, double lambda, double* condition = nullptr);

// ---- files ----

struct Dataset {
  std::vector<std::string> features;
  std::vector<Assignment> x;
  std::vector<double> y;
};

// Feature columns hold category indices; the `target` column is y.
Dataset parse_dataset_csv(const std::string& text);
Dataset load_dataset_csv(const std::string& path);
std::string dataset_to_csv(const Dataset& d);

std::string svr_model_to_json(const SvrModel& m);
SvrModel parse_svr_model(const std::string& text);
SvrModel load_svr_model(const std::string& path);

// Features drawn from p; y = sum_j beta_j x_j + gamma sum_j x_j x_{j+1} + noise * N(0,1)
// with beta_j ~ U(-1, 1) and gamma ~ U(-0.5, 0.5) drawn first.
Dataset make_synthetic_regression(const Circuit& p, int n, double noise, Rng& rng);

}  // namespace ek
