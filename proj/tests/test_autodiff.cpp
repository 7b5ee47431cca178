#include "mvgrl/tape.hpp"

#include "helpers.hpp"
#include "mvgrl/gradcheck.hpp"
#include "mvgrl/graph.hpp"

#include <doctest.h>

#include <cmath>

using namespace mvgrl;
using namespace mvgrl::ad;

namespace {

// Draw entries away from the PReLU kink (|x| >= 1e-3).
Matrix kink_safe_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      Real v = rng.normal();
      if (std::abs(v) < 1e-3) v = v < 0 ? v - 1e-3 : v + 1e-3;
      m(r, c) = v;
    }
  }
  return m;
}

Matrix scalar(Real v) { return Matrix::Constant(1, 1, v); }

// Reduce any node to a well-behaved scalar for gradient checking.
NodeId to_scalar(Tape& tape, NodeId x) {
  return tape.sum_rows(tape.transpose(tape.sum_rows(tape.sigmoid(x))));
}

}  // namespace

TEST_SUITE_BEGIN("autodiff");

TEST_CASE("forward: matmul with identity returns the input") {
  Tape tape;
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  const NodeId a = tape.input(m);
  const NodeId out = tape.matmul(a, tape.constant(Matrix::Identity(2, 2)));
  tape.forward();
  CHECK(tape.value(out) == m);
}

TEST_CASE("forward: prelu applies the negative slope") {
  Tape tape;
  Matrix x(1, 2);
  x << -1.0, 2.0;
  const NodeId out = tape.prelu(tape.input(x), tape.scalar_input(0.25));
  tape.forward();
  CHECK(tape.value(out)(0, 0) == doctest::Approx(-0.25));
  CHECK(tape.value(out)(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("forward: spmm by a row-stochastic matrix preserves constants") {
  Tape tape;
  const auto view = std::make_shared<SparseMatrix>(normalize_adjacency(test::path_graph(2)));
  const NodeId out = tape.spmm(view, tape.constant(Matrix::Ones(2, 1)));
  tape.forward();
  CHECK(tape.value(out)(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(tape.value(out)(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("forward is deterministic for a fixed tape") {
  Rng rng(3);
  Tape tape;
  const NodeId a = tape.input(test::random_matrix(4, 4, rng), true);
  const NodeId loss = to_scalar(tape, tape.matmul(a, tape.constant(test::random_matrix(4, 3, rng))));
  tape.forward();
  const Real v1 = tape.scalar_value(loss);
  Tape tape2;  // identical rebuild
  Rng rng2(3);
  const NodeId a2 = tape2.input(test::random_matrix(4, 4, rng2), true);
  const NodeId loss2 =
      to_scalar(tape2, tape2.matmul(a2, tape2.constant(test::random_matrix(4, 3, rng2))));
  tape2.forward();
  CHECK(v1 == tape2.scalar_value(loss2));
}

TEST_CASE("backward: sum_rows of a scalar has unit gradient") {
  Tape tape;
  const NodeId x = tape.input(scalar(3.0), true);
  const NodeId loss = tape.sum_rows(x);
  tape.backward(loss);
  CHECK(tape.grad(x)(0, 0) == 1.0);
}

TEST_CASE("backward: sigmoid at 0 has gradient 0.25") {
  Tape tape;
  const NodeId x = tape.input(scalar(0.0), true);
  tape.backward(tape.sigmoid(x));
  CHECK(tape.grad(x)(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("backward: prelu adjoints on the negative branch") {
  Tape tape;
  const NodeId x = tape.input(scalar(-2.0), true);
  const NodeId slope = tape.scalar_input(0.3, true);
  tape.backward(tape.prelu(x, slope));
  CHECK(tape.grad(slope)(0, 0) == doctest::Approx(-2.0));
  CHECK(tape.grad(x)(0, 0) == doctest::Approx(0.3));
}

TEST_CASE("backward: untouched parameters get zero gradients") {
  Tape tape;
  const NodeId used = tape.input(scalar(1.0), true);
  const NodeId unused = tape.input(Matrix::Ones(2, 2), true);
  tape.backward(tape.sigmoid(used));
  CHECK(tape.grad(unused) == Matrix::Zero(2, 2));
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  const NodeId x = tape.input(Matrix::Ones(2, 2), true);
  CHECK_THROWS_WITH_AS(tape.backward(x), doctest::Contains("scalar"), ValidationError);
}

TEST_CASE("shape mismatches name the op") {
  Tape tape;
  const NodeId a = tape.input(Matrix::Ones(2, 3));
  const NodeId b = tape.input(Matrix::Ones(2, 3));
  CHECK_THROWS_WITH_AS(tape.matmul(a, b), doctest::Contains("matmul"), ValidationError);
  CHECK_THROWS_WITH_AS(tape.add(a, tape.input(Matrix::Ones(3, 2))), doctest::Contains("add"),
                       ValidationError);
}

TEST_CASE("backward is linear: grad of a sum equals sum of grads") {
  Rng rng(17);
  const Matrix x0 = kink_safe_matrix(3, 3, rng);

  auto build = [&x0](int which) {
    // which: 0 -> f, 1 -> g, 2 -> f + g
    Tape tape;
    const NodeId x = tape.input(x0, true);
    const NodeId f = tape.sum_rows(tape.transpose(tape.sum_rows(tape.sigmoid(x))));
    const NodeId g = tape.sum_rows(tape.transpose(tape.sum_rows(tape.softplus(x))));
    const NodeId loss = which == 0 ? f : which == 1 ? g : tape.add(f, g);
    tape.backward(loss);
    return Matrix(tape.grad(x));
  };
  const Matrix sum_of_grads = build(0) + build(1);
  const Matrix grad_of_sum = build(2);
  CHECK((sum_of_grads - grad_of_sum).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("finite differences: linear loss is exact to 1e-10") {
  Rng rng(19);
  Tape tape;
  const NodeId w = tape.input(test::random_matrix(1, 6, rng), true);
  const NodeId x = tape.constant(test::random_matrix(6, 1, rng));
  const NodeId loss = tape.matmul(w, x);
  CHECK(tape.finite_difference_check(loss, 1e-5, 42) <= 1e-10);
}

TEST_CASE("finite differences: every op kind stays under 1e-5 over 100 seeds") {
  for (const auto& report : op_gradient_sweep(/*seed=*/1, /*trials=*/100)) {
    INFO(report.op);
    CHECK(report.max_rel_error <= 1e-5);
  }
}

TEST_CASE("finite differences hold through a deep composite graph") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = Rng::derived(seed, {0xadadadu});
    const int n = 2 + rng.uniform_int(7);
    const int d = 2 + rng.uniform_int(7);
    const int k = 2 + rng.uniform_int(7);

    Tape tape;
    const NodeId x = tape.input(kink_safe_matrix(n, d, rng), true);
    const NodeId w = tape.input(kink_safe_matrix(d, k, rng), true);
    const NodeId bias = tape.input(kink_safe_matrix(1, k, rng), true);
    const NodeId slope = tape.input(scalar(0.25 + rng.uniform() * 0.5), true);

    const auto view = std::make_shared<SparseMatrix>(
        normalize_adjacency(test::random_connected_graph(n, rng)));

    const NodeId pr =
        tape.prelu(tape.add_bias_row(tape.spmm(view, tape.matmul(x, w)), bias), slope);
    const NodeId nm = tape.row_l2_normalize(pr);
    std::vector<int> gather(n);
    for (int i = 0; i < n; ++i) gather[i] = rng.uniform_int(n);
    const NodeId cat =
        tape.concat_cols({tape.row_gather(nm, gather), tape.scale(nm, -0.5)});
    const NodeId lse = tape.log_sum_exp_rows(tape.add(cat, cat));  // n x 1
    const NodeId loss = tape.sum_rows(lse);                        // 1 x 1
    // A deep chain accumulates FD round-off; 1e-4 still catches any wrong
    // adjoint (those show up at 1e-1 scale), the per-op sweep enforces 1e-5.
    CHECK(tape.finite_difference_check(loss, 1e-5, seed, 4) <= 1e-4);
  }
}

TEST_CASE("set_input invalidates downstream values") {
  Tape tape;
  const NodeId x = tape.input(scalar(1.0), true);
  const NodeId y = tape.sigmoid(x);
  tape.forward();
  const Real before = tape.scalar_value(y);
  tape.set_input(x, scalar(4.0));
  tape.forward();
  CHECK(tape.scalar_value(y) != before);
}

TEST_SUITE_END();
