#include "ek/svr.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "ek/error.hpp"
#include "ek/expected_kernel.hpp"
#include "ek/inference.hpp"
#include "ek/io.hpp"

namespace ek {

using json = nlohmann::json;

MissingnessMask MissingnessMask::from_partial(const Domain& d, Assignment x_s) {
  if (static_cast<int>(x_s.size()) != d.size()) fail(ErrorKind::InvalidInput, "mask has the wrong length");
  d.check_partial(x_s);
  MissingnessMask m;
  m.observed = d.observed(x_s);
  m.hidden = d.all() - m.observed;
  m.x_s = std::move(x_s);
  return m;
}

double svr_predict(const SvrModel& m, const Assignment& x) {
  const Domain& d = m.kernel.domain();
  d.check_assigned(x, d.all());
  if (m.duals.size() != m.support.size()) fail(ErrorKind::InvalidInput, "dual count does not match support size");
  Evaluator ev(m.kernel);
  double f = m.bias;
  for (std::size_t i = 0; i < m.support.size(); ++i) f += m.duals[i] * m.kernel.scale() * ev.paired(m.support[i], x);
  return f;
}

double expected_prediction(const SvrModel& m, const Circuit& p, const MissingnessMask& mask) {
  const Domain& d = m.kernel.domain();
  if (!(p.domain() == d)) fail(ErrorKind::InvalidInput, "feature circuit and kernel use different domains");
  if (mask.hidden.empty()) return svr_predict(m, mask.x_s);
  if (m.duals.size() != m.support.size()) fail(ErrorKind::InvalidInput, "dual count does not match support size");
  const Circuit pc = condition(p, mask.x_s);
  double f = m.bias;
  for (std::size_t i = 0; i < m.support.size(); ++i) {
    if (m.duals[i] == 0.0) continue;
    // k(x^(i), x) as a function of x, observed coordinates folded into the scale
    const Circuit fi = clamp(project(m.kernel, Side::Right, m.support[i]), mask.x_s);
    f += m.duals[i] * expected_product(pc, fi);
  }
  return f;
}

std::vector<int> column_medians(const std::vector<Assignment>& data, const Domain& d) {
  if (data.empty()) fail(ErrorKind::InvalidInput, "no training rows for medians");
  std::vector<int> med(d.size());
  std::vector<int> col(data.size());
  for (VarId v = 0; v < d.size(); ++v) {
    for (std::size_t r = 0; r < data.size(); ++r) {
      d.check_assigned(data[r], d.all());
      col[r] = data[r][v];
    }
    auto mid = col.begin() + (col.size() - 1) / 2;
    std::nth_element(col.begin(), mid, col.end());
    med[v] = *mid;
  }
  return med;
}

Assignment impute_median(const std::vector<int>& medians, const MissingnessMask& mask) {
  if (medians.size() != mask.x_s.size()) fail(ErrorKind::InvalidInput, "median vector has the wrong length");
  Assignment x = mask.x_s;
  for (std::size_t v = 0; v < x.size(); ++v)
    if (x[v] == kMissing) x[v] = medians[v];
  return x;
}

MapImputer::MapImputer(const Circuit& p) : p_(&p) {
  max_product_ = p.smooth() && p.decomposable() && check_deterministic(p) == Tristate::True;
}

Assignment MapImputer::operator()(const MissingnessMask& mask) const {
  if (static_cast<int>(mask.x_s.size()) != p_->domain().size())
    fail(ErrorKind::InvalidInput, "mask has the wrong length");
  if (mask.hidden.empty()) return mask.x_s;
  return max_product_ ? max_product(mask.x_s) : exhaustive(mask.x_s);
}

Assignment MapImputer::max_product(const Assignment& x_s) const {
  const Circuit& p = *p_;
  std::vector<double> val(p.size());
  std::vector<int> choice(p.size(), -1);
  for (int i = 0; i < p.size(); ++i) {
    const Unit& u = p.unit(i);
    switch (u.kind) {
      case UnitKind::Input: {
        const int a = x_s[u.var];
        if (a != kMissing) {
          val[i] = u.params[a];
          choice[i] = a;
          break;
        }
        choice[i] = 0;
        for (int c = 1; c < static_cast<int>(u.params.size()); ++c)
          if (u.params[c] > u.params[choice[i]]) choice[i] = c;
        val[i] = u.params[choice[i]];
        break;
      }
      case UnitKind::Constant:
        val[i] = u.params[0];
        break;
      case UnitKind::Sum:
        choice[i] = 0;
        val[i] = u.params[0] * val[u.children[0]];
        for (std::size_t c = 1; c < u.children.size(); ++c) {
          const double v = u.params[c] * val[u.children[c]];
          if (v > val[i]) {
            val[i] = v;
            choice[i] = static_cast<int>(c);
          }
        }
        break;
      case UnitKind::Product:
        val[i] = 1.0;
        for (int c : u.children) val[i] *= val[c];
        break;
      case UnitKind::KernelInput:
        fail(ErrorKind::Malformed, "kernel leaf inside a probabilistic circuit");
    }
  }
  if (!(val[p.root()] > 0.0)) fail(ErrorKind::DegenerateEvidence, "evidence has zero probability");
  Assignment x = x_s;
  std::vector<int> stack{p.root()};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    const Unit& u = p.unit(i);
    if (u.kind == UnitKind::Input && x[u.var] == kMissing) x[u.var] = choice[i];
    if (u.kind == UnitKind::Sum) stack.push_back(u.children[choice[i]]);
    if (u.kind == UnitKind::Product)
      for (int c : u.children) stack.push_back(c);
  }
  for (int& a : x)
    if (a == kMissing) a = 0;
  return x;
}

Assignment MapImputer::exhaustive(const Assignment& x_s) const {
  const Domain& d = p_->domain();
  const Scope hidden = d.all() - d.observed(x_s);
  require_states(d.num_states(hidden), max_states(), "exhaustive MAP");
  Evaluator ev(*p_);
  Assignment x = x_s, best;
  double best_v = 0.0;
  for_each_state(d, hidden, x, [&](const Assignment& s) {
    const double v = ev(s);
    if (v > best_v) {
      best_v = v;
      best = s;
    }
  });
  if (best.empty()) fail(ErrorKind::DegenerateEvidence, "evidence has zero probability");
  return best;
}

Assignment impute_map(const Circuit& p, const MissingnessMask& mask) { return MapImputer(p)(mask); }

MissingnessMask mcar_mask(const Assignment& x, double pi, Rng& rng) {
  if (!(pi >= 0.0 && pi < 1.0)) fail(ErrorKind::InvalidInput, "missing probability must lie in [0, 1)");
  MissingnessMask m;
  m.x_s = x;
  for (std::size_t v = 0; v < x.size(); ++v) {
    if (bernoulli(rng, pi)) {
      m.x_s[v] = kMissing;
      m.hidden = m.hidden | Scope::single(static_cast<VarId>(v));
    } else {
      m.observed = m.observed | Scope::single(static_cast<VarId>(v));
    }
  }
  return m;
}

MissingnessMask mcar_mask(const Assignment& x, double pi, std::uint64_t seed) {
  Rng rng(seed);
  return mcar_mask(x, pi, rng);
}

SvrModel fit_kernel_regressor(const std::vector<Assignment>& xs, const std::vector<double>& ys,
                              const KernelCircuit& k, double lambda, double* condition) {
  if (xs.empty() || xs.size() != ys.size()) fail(ErrorKind::InvalidInput, "need matching, nonempty training data");
  if (!(lambda > 0.0)) fail(ErrorKind::InvalidInput, "ridge parameter must be positive");
  const Domain& d = k.domain();
  for (const auto& x : xs) d.check_assigned(x, d.all());
  const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
  Evaluator ev(k);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) a(i, j) = a(j, i) = k.scale() * ev.paired(xs[i], xs[j]);
  a.diagonal().array() += lambda;
  double mean = 0.0;
  for (double y : ys) mean += y;
  mean /= static_cast<double>(n);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) rhs[i] = ys[i] - mean;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success) fail(ErrorKind::InvalidInput, "ridge system is singular");
  const Eigen::VectorXd w = ldlt.solve(rhs);
  if (condition) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    *condition = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
  }
  return SvrModel{xs, std::vector<double>(w.data(), w.data() + n), mean, k};
}

// ---- files ----

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Dataset parse_dataset_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Parse, "empty CSV");
  const auto header = split_csv(line);
  int target = -1;
  Dataset ds;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "target") {
      if (target >= 0) fail(ErrorKind::Parse, "duplicate target column");
      target = static_cast<int>(c);
    } else {
      ds.features.push_back(header[c]);
    }
  }
  if (target < 0) fail(ErrorKind::Parse, "CSV has no target column");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      fail(ErrorKind::Parse, "line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                                 " cells, found " + std::to_string(cells.size()));
    Assignment x;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::size_t used = 0;
      try {
        if (static_cast<int>(c) == target) {
          ds.y.push_back(std::stod(cells[c], &used));
        } else {
          const int v = std::stoi(cells[c], &used);
          if (v < 0) throw std::invalid_argument("negative");
          x.push_back(v);
        }
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cells[c].size())
        fail(ErrorKind::Parse, "line " + std::to_string(lineno) + ": bad value '" + cells[c] + "' in column " +
                                   header[c]);
    }
    ds.x.push_back(std::move(x));
  }
  return ds;
}

Dataset load_dataset_csv(const std::string& path) {
  try {
    return parse_dataset_csv(read_text_file(path));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Parse) throw;
    fail(ErrorKind::Parse, path + ": " + e.what());
  }
}

std::string dataset_to_csv(const Dataset& d) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& f : d.features) out << f << ",";
  out << "target\n";
  for (std::size_t r = 0; r < d.x.size(); ++r) {
    for (int v : d.x[r]) out << v << ",";
    out << d.y[r] << "\n";
  }
  return out.str();
}

std::string svr_model_to_json(const SvrModel& m) {
  json j;
  j["support"] = m.support;
  j["duals"] = m.duals;
  j["bias"] = m.bias;
  j["kernel"] = json::parse(unit_graph_to_json(m.kernel));
  return j.dump();
}

SvrModel parse_svr_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Parse, e.what());
  }
  try {
    SvrModel m{j.at("support").get<std::vector<Assignment>>(), j.at("duals").get<std::vector<double>>(),
               j.at("bias").get<double>(), parse_kernel(j.at("kernel").dump())};
    if (m.support.size() != m.duals.size()) fail(ErrorKind::Parse, "dual count does not match support size");
    for (const auto& x : m.support) m.kernel.domain().check_assigned(x, m.kernel.domain().all());
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ResourceBound) throw;
    fail(ErrorKind::Parse, e.what());
  }
}

SvrModel load_svr_model(const std::string& path) {
  try {
    return parse_svr_model(read_text_file(path));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Parse) throw;
    fail(ErrorKind::Parse, path + ": " + e.what());
  }
}

Dataset make_synthetic_regression(const Circuit& p, int n, double noise, Rng& rng) {
  const int dim = p.domain().size();
  std::vector<double> beta(dim);
  for (double& b : beta) b = uniform(rng, -1.0, 1.0);
  const double gamma = uniform(rng, -0.5, 0.5);
  Dataset ds;
  for (int v = 0; v < dim; ++v) ds.features.push_back("var_" + std::to_string(v));
  ds.x = sample(p, n, rng);
  for (const auto& x : ds.x) {
    double y = 0.0;
    for (int v = 0; v < dim; ++v) y += beta[v] * x[v];
    for (int v = 0; v + 1 < dim; ++v) y += gamma * x[v] * x[v + 1];
    ds.y.push_back(y + noise * normal(rng));
  }
  return ds;
}

}  // namespace ek
