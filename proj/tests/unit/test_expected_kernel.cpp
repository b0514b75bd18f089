#include <doctest.h>

#include <cmath>

#include "ek/builders.hpp"
#include "ek/error.hpp"
#include "ek/expected_kernel.hpp"
#include "ek/inference.hpp"
#include "generators.hpp"

using namespace ek;
using namespace ek::testing;

namespace {

KernelCircuit kronecker(const Domain& d) {
  return build_product_kc(d, Vtree::right_linear(iota_vars(d.size())),
                          [](VarId, int a, int b) { return a == b ? 1.0 : 0.0; });
}

Circuit bernoulli_circuit(double p1) {
  GraphBuilder b(Domain({2}));
  return b.build_circuit(b.add_input(0, {1.0 - p1, p1}));
}

}  // namespace

TEST_CASE("closed-form small cases") {
  const Domain one({2});
  const KernelCircuit delta = kronecker(one);
  CHECK(std::abs(expected_kernel(bernoulli_circuit(0.8), bernoulli_circuit(0.3), delta) - 0.38) <= 1e-15);
  CHECK(std::abs(brute_force_expected_kernel(bernoulli_circuit(0.8), bernoulli_circuit(0.3), delta) - 0.38) <= 1e-15);
  CHECK(mmd2(bernoulli_circuit(0.0), bernoulli_circuit(1.0), delta) == 2.0);

  const Domain d({2, 2, 2});
  const Vtree v = Vtree::balanced({0, 1, 2});
  const Circuit pm = point_mass(d, v, {1, 0, 1});
  CHECK(expected_kernel(pm, pm, build_hamming_kc(d, v, 0.4)) == 1.0);

  const Domain two({2, 2});
  const Circuit uni = factorized_circuit(two, Vtree::right_linear({0, 1}), {{1, 1}, {1, 1}});
  CHECK(std::abs(brute_force_expected_kernel(uni, uni, kronecker(two)) - 0.25) <= 1e-15);
  CHECK(std::abs(expected_kernel(uni, uni, kronecker(two)) - 0.25) <= 1e-15);
}

TEST_CASE("input paired with a sum distributes over the sum") {
  GraphBuilder b(Domain({3}));
  const int a = b.add_input(0, {0.2, 0.3, 0.5});
  const int c = b.add_input(0, {0.6, 0.1, 0.3});
  const Circuit q = b.build_circuit(b.add_sum({a, c}, {0.25, 0.75}));
  GraphBuilder pb(Domain({3}));
  const Circuit p = pb.build_circuit(pb.add_input(0, {0.1, 0.1, 0.8}));
  const KernelCircuit k = build_rbf_kc(Domain({3}), Vtree::leaf(0), 0.3);
  CHECK(std::abs(expected_kernel(p, q, k) - brute_force_expected_kernel(p, q, k)) <= 1e-15);
  CHECK(std::abs(expected_kernel(q, p, k) - brute_force_expected_kernel(q, p, k)) <= 1e-15);
}

TEST_CASE("agrees with enumeration on random compatible instances") {
  Rng rng(101);
  for (int rep = 0; rep < 12; ++rep) {
    const int n = 4 + static_cast<int>(uniform_int(rng, 7));
    std::vector<int> cards(n, 2);
    if (rep % 3 == 0) cards[uniform_int(rng, n)] = 3;
    const Domain d(cards);
    const Vtree v = Vtree::random(iota_vars(n), rng);
    const Circuit p = random_structured_pc(d, v, rng), q = random_structured_pc(d, v, rng);
    const KernelCircuit k = random_kernel(d, v, rng);
    const ExpectedKernelResult r = expected_kernel_stats(p, q, k);
    const double want = brute_force_expected_kernel(p, q, k);
    CHECK(std::abs(r.value - want) <= 1e-9 * std::abs(want));
    CHECK(r.memo_entries <= static_cast<std::size_t>(p.size()) * q.size() * k.size());
  }
}

TEST_CASE("singly expected kernel") {
  const Domain one({2});
  GraphBuilder b(one);
  const Circuit uni = b.build_circuit(b.add_input(0, {0.5, 0.5}));
  const KernelCircuit h = build_hamming_kc(one, Vtree::leaf(0), 1.0);
  CHECK(std::abs(singly_expected_kernel(uni, h, {1}, Side::Left) - (1 + std::exp(-1.0)) / 2) <= 1e-15);
  CHECK(std::abs(singly_expected_kernel(uni, h, {1}, Side::Left) - 0.68394) <= 1e-5);

  Rng rng(7);
  const Domain d({2, 3, 2, 2, 2});
  const Vtree v = Vtree::random(iota_vars(5), rng);
  const Circuit p = random_structured_pc(d, v, rng);
  const KernelCircuit k = random_kernel(d, v, rng);
  for (int rep = 0; rep < 20; ++rep) {
    const Assignment xf = random_assignment(d, rng);
    const Circuit pm = point_mass(d, v, xf);
    CHECK(std::abs(singly_expected_kernel(p, k, xf, Side::Left) - expected_kernel(p, pm, k)) <= 1e-12);
    CHECK(std::abs(singly_expected_kernel(p, k, xf, Side::Right) - expected_kernel(pm, p, k)) <= 1e-12);
    CHECK(std::abs(singly_expected_kernel(pm, k, xf, Side::Left) - evaluate_kernel(k, xf, xf)) <= 1e-12);
  }
}

TEST_CASE("MMD properties") {
  Rng rng(55);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 3 + static_cast<int>(uniform_int(rng, 6));
    const Domain d(std::vector<int>(n, 2));
    const Vtree v = Vtree::random(iota_vars(n), rng);
    const Circuit p = random_structured_pc(d, v, rng), q = random_structured_pc(d, v, rng);
    const KernelCircuit k = random_kernel(d, v, rng);
    REQUIRE(verify_pd(k));
    CHECK(std::abs(mmd2(p, p, k)) <= 1e-10);
    CHECK(mmd2(p, q, k) >= -1e-9);
    CHECK(std::abs(mmd2(p, q, k) - mmd2(q, p, k)) <= 1e-12);
  }
}

TEST_CASE("bilinearity in the first argument") {
  Rng rng(77);
  const Domain d(std::vector<int>(6, 2));
  const Vtree v = Vtree::random(iota_vars(6), rng);
  PcShape s;
  s.normalized = true;
  const Circuit p1 = random_structured_pc(d, v, rng, s), p2 = random_structured_pc(d, v, rng, s);
  const Circuit q = random_structured_pc(d, v, rng);
  const KernelCircuit k = random_kernel(d, v, rng);
  const double alpha = 0.3;
  const Circuit mix = mixture({&p1, &p2}, {alpha, 1 - alpha});
  const double lhs = expected_kernel(mix, q, k);
  const double rhs = alpha * expected_kernel(p1, q, k) + (1 - alpha) * expected_kernel(p2, q, k);
  CHECK(std::abs(lhs - rhs) <= 1e-10);
}

TEST_CASE("incompatible inputs are rejected") {
  const Domain d({2, 2, 2});
  const auto w = std::vector<std::vector<double>>{{0.5, 0.5}, {0.2, 0.8}, {0.6, 0.4}};
  const Circuit a = factorized_circuit(d, Vtree::right_linear({0, 1, 2}), w);
  const Circuit b = factorized_circuit(d, Vtree::left_linear({0, 1, 2}), w);
  const KernelCircuit k = build_hamming_kc(d, Vtree::right_linear({0, 1, 2}), 1.0);
  try {
    expected_kernel(a, b, k);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::StructuralPrecondition);
  }
  try {
    expected_kernel_stats(a, b, k, false);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::StructuralPrecondition);
  }
  const Domain big(std::vector<int>(17, 2));
  const Vtree vb = Vtree::right_linear(iota_vars(17));
  const Circuit u = factorized_circuit(big, vb, std::vector<std::vector<double>>(17, {1, 1}));
  try {
    brute_force_expected_kernel(u, u, build_hamming_kc(big, vb, 1.0));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ResourceBound);
  }
}
