#include "ek/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

#include "ek/compile.hpp"
#include "ek/expected_kernel.hpp"
#include "ek/experiments.hpp"
#include "ek/inference.hpp"
#include "ek/io.hpp"
#include "ek/kernel_circuit.hpp"
#include "ek/models.hpp"
#include "ek/structure.hpp"
#include "ek/svr.hpp"

namespace ek::cli {

namespace {

// Shortest text that parses back to the same double.
std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

const char* yes(bool b) { return b ? "true" : "false"; }

Vtree vtree_of(const Circuit& p) {
  if (p.vtree() && !p.vtree()->empty()) return *p.vtree();
  if (auto v = extract_vtree(p)) return *v;
  fail(ErrorKind::StructuralPrecondition, "circuit is not structured-decomposable; no vtree for the kernel");
}

struct CheckArgs {
  std::vector<std::string> circuits;
  std::string kernel;
};

void cmd_check(const CheckArgs& a, std::ostream& out) {
  std::vector<Circuit> cs;
  for (const auto& path : a.circuits) {
    cs.push_back(load_circuit(path));
    const Circuit& c = cs.back();
    const StructureReport r = check_structural(c);
    out << path << ": units=" << c.size() << " vars=" << c.domain().size() << " smooth=" << yes(r.smooth)
        << " decomposable=" << yes(r.decomposable) << " deterministic=" << to_string(r.deterministic)
        << " structured=" << yes(r.structured.has_value()) << "\n";
  }
  if (cs.size() == 2) out << "compatible=" << yes(check_compatible(cs[0], cs[1])) << "\n";
  if (!a.kernel.empty()) {
    const KernelCircuit k = load_kernel(a.kernel);
    out << "kernel pd=" << yes(verify_pd(k));
    out << " kernel_compatible=" << yes(check_kernel_compatible(k, cs.front(), cs.back())) << "\n";
  }
}

struct ExpectedArgs {
  std::string p, q, k;
  bool oracle = false;
};

void cmd_expected(const ExpectedArgs& a, std::ostream& out) {
  const Circuit p = load_circuit(a.p), q = load_circuit(a.q);
  const KernelCircuit k = load_kernel(a.k);
  const ExpectedKernelResult r = expected_kernel_stats(p, q, k);
  out << "expected_kernel=" << num(r.value) << "\n";
  out << "memo_entries=" << r.memo_entries << "\n";
  out << "memo_bound=" << static_cast<std::uint64_t>(p.size()) * q.size() * k.size() << "\n";
  if (a.oracle) {
    const double o = brute_force_expected_kernel(p, q, k, max_states());
    out << "oracle=" << num(o) << "\n";
    out << "abs_diff=" << num(std::abs(o - r.value)) << "\n";
  }
}

void cmd_mmd(const ExpectedArgs& a, std::ostream& out) {
  const Circuit p = load_circuit(a.p), q = load_circuit(a.q);
  out << "mmd2=" << num(mmd2(p, q, load_kernel(a.k))) << "\n";
}

struct CbbisArgs {
  std::string model;
  bool bn = false;
  double eps = 1e-4;
  double collapse = 0.5;
  std::vector<int> ns{20, 50, 100};
  std::uint64_t seed = 0;
  int seeds = 1;
  std::string kernel = "hamming";
  bool baselines = false;
  int burn_in = 20;
  int thin = 1;
};

void cmd_cbbis(const CbbisArgs& a, std::ostream& out, std::ostream& err) {
  const FactorModel m = a.bn ? load_bayes_net(a.model, a.eps, &err) : load_factor_model(a.model);
  if (m.domain.size() > 24) fail(ErrorKind::ResourceBound, "cbbis supports at most 24 variables");
  const Circuit p = compile_target(m);
  const KernelCircuit k = kernel_from_spec(a.kernel, p.domain(), vtree_of(p));
  MarginalSettings s;
  s.collapse = 1.0 - a.collapse;
  s.burn_in = a.burn_in;
  s.thin = a.thin;
  s.baselines = a.baselines;
  out << "method,N,seed,avg_hellinger,wall_ms\n";
  for (int i = 0; i < a.seeds; ++i)
    for (int n : a.ns)
      for (const MarginalRow& r : run_marginal_experiment(p, k, n, a.seed + i, s))
        out << r.method << "," << r.n << "," << r.seed << "," << num(r.avg_hellinger) << ","
            << num(std::round(r.wall_ms * 1000.0) / 1000.0) << "\n";
}

struct SvrArgs {
  std::string train, pc, test;
  std::vector<double> pis{0.0, 0.1, 0.3, 0.5, 0.7, 0.9};
  int trials = 5;
  std::uint64_t seed = 0;
  double lambda = 0.1;
  double test_frac = 0.3;
  std::string kernel = "hamming";
};

void check_rows(const Dataset& ds, const Domain& d, const std::string& path) {
  if (static_cast<int>(ds.features.size()) != d.size())
    fail(ErrorKind::Parse, path + ": " + std::to_string(ds.features.size()) + " feature columns but the circuit has " +
                               std::to_string(d.size()) + " variables");
  for (std::size_t r = 0; r < ds.x.size(); ++r)
    for (int v = 0; v < d.size(); ++v)
      if (ds.x[r][v] >= d.card(v))
        fail(ErrorKind::Parse, path + ":" + std::to_string(r + 2) + ": category " + std::to_string(ds.x[r][v]) +
                                   " out of range for column " + ds.features[v]);
}

void cmd_svr(const SvrArgs& a, std::ostream& out) {
  const Circuit p = load_circuit(a.pc);
  Dataset train = load_dataset_csv(a.train);
  check_rows(train, p.domain(), a.train);
  Rng rng(a.seed);
  Dataset test;
  if (!a.test.empty()) {
    test = load_dataset_csv(a.test);
    check_rows(test, p.domain(), a.test);
  } else {
    if (!(a.test_frac > 0.0 && a.test_frac < 1.0)) fail(ErrorKind::InvalidInput, "--test-frac must be in (0, 1)");
    const std::size_t n = train.x.size();
    const auto n_test = static_cast<std::size_t>(std::ceil(a.test_frac * static_cast<double>(n)));
    if (n_test == 0 || n_test >= n) fail(ErrorKind::InvalidInput, "too few rows to split off a test set");
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j = uniform_int(rng, i + 1);
      std::swap(train.x[i], train.x[j]);
      std::swap(train.y[i], train.y[j]);
    }
    test.features = train.features;
    test.x.assign(train.x.end() - n_test, train.x.end());
    test.y.assign(train.y.end() - n_test, train.y.end());
    train.x.resize(n - n_test);
    train.y.resize(n - n_test);
  }
  const KernelCircuit k = kernel_from_spec(a.kernel, p.domain(), vtree_of(p));
  out << "method,pi,trial,rmse\n";
  for (const SvrRow& r : run_svr_experiment(train, test, p, k, a.lambda, a.pis, a.trials, rng()))
    out << r.method << "," << num(r.pi) << "," << r.trial << "," << num(r.rmse) << "\n";
}

struct CompileArgs {
  std::string model, out;
  bool bn = false;
  double eps = 1e-4;
};

struct SampleArgs {
  std::string circuit, out;
  int n = 100;
  std::uint64_t seed = 0;
};

void cmd_sample(const SampleArgs& a, std::ostream& out) {
  const Circuit p = load_circuit(a.circuit);
  Rng rng(a.seed);
  std::ostringstream os;
  for (int v = 0; v < p.domain().size(); ++v) os << (v ? "," : "") << "var_" << v;
  os << "\n";
  for (const auto& x : sample(p, a.n, rng)) {
    for (std::size_t v = 0; v < x.size(); ++v) os << (v ? "," : "") << x[v];
    os << "\n";
  }
  if (a.out.empty())
    out << os.str();
  else
    write_text_file(a.out, os.str());
}

struct SvrDataArgs {
  std::string circuit, out;
  int n = 200;
  std::uint64_t seed = 0;
  double noise = 0.1;
};

struct IsingArgs {
  int rows = 4, cols = 4;
  std::uint64_t seed = 0;
  std::string out;
};

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty())
    out << text;
  else
    write_text_file(path, text);
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return 2;
    case ErrorKind::StructuralPrecondition: return 3;
    case ErrorKind::ResourceBound: return 4;
    default: return 1;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact expected kernels over probabilistic circuits", "ek"};
  app.require_subcommand(1);

  CheckArgs check;
  auto* c_check = app.add_subcommand("check", "structural report, compatibility and kernel checks");
  c_check->add_option("circuits", check.circuits, "one or two circuit files")->required()->expected(1, 2);
  c_check->add_option("--kernel", check.kernel, "kernel circuit file");

  ExpectedArgs ek_args;
  auto* c_ek = app.add_subcommand("expected-kernel", "E_{p,q}[k] by the memoized recursion");
  c_ek->add_option("p", ek_args.p)->required();
  c_ek->add_option("q", ek_args.q)->required();
  c_ek->add_option("k", ek_args.k)->required();
  c_ek->add_flag("--oracle", ek_args.oracle, "also enumerate all state pairs");

  ExpectedArgs mmd_args;
  auto* c_mmd = app.add_subcommand("mmd", "squared MMD between two circuits");
  c_mmd->add_option("p", mmd_args.p)->required();
  c_mmd->add_option("q", mmd_args.q)->required();
  c_mmd->add_option("k", mmd_args.k)->required();

  CbbisArgs cb;
  auto* c_cb = app.add_subcommand("cbbis", "marginal estimation table (Hellinger per method and N)");
  c_cb->add_option("model", cb.model, "factor model JSON")->required();
  c_cb->add_flag("--bn", cb.bn, "model is a Bayesian network (CPTs are renormalized and smoothed)");
  c_cb->add_option("--eps", cb.eps, "CPT smoothing for --bn")->capture_default_str();
  c_cb->add_option("--collapse", cb.collapse, "fraction of variables kept sampled; 1 reproduces BBIS")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  c_cb->add_option("--n", cb.ns, "sample sizes")->delimiter(',')->capture_default_str();
  c_cb->add_option("--seed", cb.seed)->capture_default_str();
  c_cb->add_option("--seeds", cb.seeds, "run seeds seed..seed+seeds-1")->capture_default_str()->check(CLI::PositiveNumber);
  c_cb->add_option("--kernel", cb.kernel, "hamming[:lambda] or rbf:gamma")->capture_default_str();
  c_cb->add_flag("--baselines", cb.baselines, "also run gibbs, bbis and cgs");
  c_cb->add_option("--burn-in", cb.burn_in)->capture_default_str()->check(CLI::NonNegativeNumber);
  c_cb->add_option("--thin", cb.thin)->capture_default_str()->check(CLI::PositiveNumber);

  SvrArgs sv;
  auto* c_sv = app.add_subcommand("svr-missing", "regression under missing features (RMSE per method and pi)");
  c_sv->add_option("train", sv.train, "CSV with category columns and a target column")->required();
  c_sv->add_option("pc", sv.pc, "feature circuit")->required();
  c_sv->add_option("--test", sv.test, "test CSV; default splits the training file");
  c_sv->add_option("--test-frac", sv.test_frac)->capture_default_str();
  c_sv->add_option("--pi", sv.pis, "missingness probabilities")->delimiter(',')->capture_default_str();
  c_sv->add_option("--trials", sv.trials)->capture_default_str()->check(CLI::PositiveNumber);
  c_sv->add_option("--seed", sv.seed)->capture_default_str();
  c_sv->add_option("--lambda", sv.lambda, "ridge penalty")->capture_default_str();
  c_sv->add_option("--kernel", sv.kernel)->capture_default_str();

  CompileArgs co;
  auto* c_co = app.add_subcommand("compile", "compile a factor model into a circuit");
  c_co->add_option("model", co.model)->required();
  c_co->add_flag("--bn", co.bn);
  c_co->add_option("--eps", co.eps)->capture_default_str();
  c_co->add_option("--out", co.out, "output file; stdout when absent");

  SampleArgs sa;
  auto* c_sa = app.add_subcommand("sample", "exact samples from a circuit as CSV");
  c_sa->add_option("circuit", sa.circuit)->required();
  c_sa->add_option("--n", sa.n)->capture_default_str()->check(CLI::PositiveNumber);
  c_sa->add_option("--seed", sa.seed)->capture_default_str();
  c_sa->add_option("--out", sa.out);

  SvrDataArgs sd;
  auto* c_sd = app.add_subcommand("make-svr-data", "synthetic regression data with features drawn from a circuit");
  c_sd->add_option("circuit", sd.circuit)->required();
  c_sd->add_option("--n", sd.n)->capture_default_str()->check(CLI::PositiveNumber);
  c_sd->add_option("--seed", sd.seed)->capture_default_str();
  c_sd->add_option("--noise", sd.noise)->capture_default_str();
  c_sd->add_option("--out", sd.out);

  IsingArgs is;
  auto* c_is = app.add_subcommand("make-ising", "random Ising grid as a factor model");
  c_is->add_option("--rows", is.rows)->capture_default_str();
  c_is->add_option("--cols", is.cols)->capture_default_str();
  c_is->add_option("--seed", is.seed)->capture_default_str();
  c_is->add_option("--out", is.out);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_check->parsed()) cmd_check(check, out);
    if (c_ek->parsed()) cmd_expected(ek_args, out);
    if (c_mmd->parsed()) cmd_mmd(mmd_args, out);
    if (c_cb->parsed()) cmd_cbbis(cb, out, err);
    if (c_sv->parsed()) cmd_svr(sv, out);
    if (c_co->parsed()) {
      const FactorModel m = co.bn ? load_bayes_net(co.model, co.eps, &err) : load_factor_model(co.model);
      emit(unit_graph_to_json(compile_target(m)), co.out, out);
    }
    if (c_sa->parsed()) cmd_sample(sa, out);
    if (c_sd->parsed()) {
      Rng rng(sd.seed);
      emit(dataset_to_csv(make_synthetic_regression(load_circuit(sd.circuit), sd.n, sd.noise, rng)), sd.out, out);
    }
    if (c_is->parsed()) emit(factor_model_to_json(build_ising(is.rows, is.cols, is.seed)), is.out, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace ek::cli
