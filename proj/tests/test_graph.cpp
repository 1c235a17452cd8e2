#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "locband/batcheval.hpp"
#include "locband/graph.hpp"

using namespace locband;
using namespace locband::ad;

TEST_CASE("square value and input derivative") {
  Graph g(1, 0);
  const NodeId f = g.square(g.input(0));
  const double x[] = {3.0};
  CHECK(eval(g, f, {}, x) == doctest::Approx(9.0).epsilon(1e-14));
  const auto b = eval_with_gradients(g, f, {}, x);
  CHECK(b.value == doctest::Approx(9.0).epsilon(1e-14));
  CHECK(b.dinputs[0] == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("softplus at zero: value ln2/beta, slope one half") {
  Graph g(1, 0);
  const NodeId f = g.softplus(g.input(0), 100.0);
  const double x[] = {0.0};
  const auto b = eval_with_gradients(g, f, {}, x);
  CHECK(b.value == doctest::Approx(std::log(2.0) / 100.0).epsilon(1e-14));
  CHECK(b.dinputs[0] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("mixed derivative: d/dtheta of df/dx for f = theta*x is 1") {
  Graph g(1, 1);
  const NodeId f = g.mul(g.param(0), g.input(0));
  const NodeId fx = g.d_input(f, 0);
  const double th[] = {0.37};
  for (double xv : {-2.0, 0.0, 5.5}) {
    const double x[] = {xv};
    const auto b = eval_with_gradients(g, fx, th, x);
    CHECK(b.dparams[0] == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("kink conventions: relu'(0)=0, step/sign derivatives vanish") {
  Graph g(1, 0);
  const double x[] = {0.0};
  CHECK(eval_with_gradients(g, g.relu(g.input(0)), {}, x).dinputs[0] == 0.0);
  CHECK(eval_with_gradients(g, g.step(g.input(0)), {}, x).dinputs[0] == 0.0);
  CHECK(eval_with_gradients(g, g.sign(g.input(0)), {}, x).dinputs[0] == 0.0);
  CHECK(eval_with_gradients(g, g.abs(g.input(0)), {}, x).dinputs[0] == 0.0);
}

TEST_CASE("gradcheck: smooth graph within 1e-5 at eps 1e-6") {
  Graph g(2, 2);
  // f = sin(x0*theta0) * exp(-x1) + softplus(theta1 + x0, 3)
  const NodeId f =
      g.add(g.mul(g.sin(g.mul(g.input(0), g.param(0))),
                  g.exp(g.neg(g.input(1)))),
            g.softplus(g.add(g.param(1), g.input(0)), 3.0));
  const double th[] = {0.7, -0.2};
  const double x[] = {0.9, 0.4};
  CHECK(gradcheck(g, f, th, x, 1e-6) <= 1e-5);
}

TEST_CASE("gradcheck: linear graph is exact") {
  Graph g(1, 2);
  const NodeId f = g.add(g.mul(g.param(0), g.input(0)), g.param(1));
  const double th[] = {1.3, -0.4};
  const double x[] = {2.0};
  CHECK(gradcheck(g, f, th, x, 1e-4) <= 1e-10);
}

TEST_CASE("gradcheck: softplus beta=100 away from the kink") {
  Graph g(1, 1);
  const NodeId f = g.softplus(g.mul(g.param(0), g.input(0)), 100.0);
  const double th[] = {1.0};
  const double x[] = {0.3};
  CHECK(gradcheck(g, f, th, x, 1e-6) <= 1e-5);
}

TEST_CASE("d_input is memoized and composes with d_param") {
  Graph g(1, 1);
  const NodeId f = g.mul(g.param(0), g.square(g.input(0)));
  const NodeId fx1 = g.d_input(f, 0);
  const NodeId fx2 = g.d_input(f, 0);
  CHECK(fx1 == fx2);
  const double th[] = {2.0};
  const double x[] = {3.0};
  // df/dx = 2*theta*x = 12; d/dtheta of that = 2x = 6
  const auto b = eval_with_gradients(g, fx1, th, x);
  CHECK(b.value == doctest::Approx(12.0).epsilon(1e-14));
  CHECK(b.dparams[0] == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("non-finite intermediates are reported") {
  Graph g(1, 0);
  const NodeId f = g.log(g.input(0));
  const double x[] = {-1.0};
  CHECK_THROWS_AS((void)eval(g, f, {}, x), NumericsError);
}

TEST_CASE("batch evaluator matches the scalar route") {
  Graph g(1, 2);
  const NodeId f = g.add(g.mul(g.param(0), g.sin(g.input(0))),
                         g.softplus(g.mul(g.param(1), g.input(0)), 7.0));
  BatchEvaluator be(g, f, {f});
  const double th[] = {0.8, -1.1};

  const int n = 301;  // forces several partially filled chunks
  Vector pts(n), w(n);
  for (int i = 0; i < n; ++i) {
    pts[i] = -2.0 + 4.0 * i / (n - 1);
    w[i] = 0.5 + 0.01 * i;
  }
  const auto r = be.accumulate(th, pts, w, true);

  double sum = 0.0;
  Vector dth(2, 0.0);
  for (int i = 0; i < n; ++i) {
    const double x[] = {pts[i]};
    const auto b = eval_with_gradients(g, f, th, x);
    sum += w[i] * b.value;
    dth[0] += w[i] * b.dparams[0];
    dth[1] += w[i] * b.dparams[1];
  }
  CHECK(r.weighted_sum == doctest::Approx(sum).epsilon(1e-12));
  CHECK(r.tracked_sums[0] == doctest::Approx(sum).epsilon(1e-12));
  CHECK(r.dparams[0] == doctest::Approx(dth[0]).epsilon(1e-12));
  CHECK(r.dparams[1] == doctest::Approx(dth[1]).epsilon(1e-12));

  // per-point sampling agrees with eval
  Vector buf(n);
  const NodeId outs[] = {f};
  be.sample(th, pts, outs, buf.data());
  for (int i : {0, 57, n - 1}) {
    const double x[] = {pts[i]};
    CHECK(buf[i] == doctest::Approx(eval(g, f, th, x)).epsilon(1e-14));
  }
}

TEST_CASE("batch accumulation is bitwise deterministic") {
  Graph g(1, 1);
  const NodeId f = g.exp(g.mul(g.param(0), g.sin(g.input(0))));
  BatchEvaluator be(g, f);
  const double th[] = {0.9};
  const int n = 777;
  Vector pts(n), w(n, 1e-3);
  for (int i = 0; i < n; ++i) pts[i] = 0.01 * i;
  const auto a = be.accumulate(th, pts, w, true);
  const auto b = be.accumulate(th, pts, w, true);
  CHECK(a.weighted_sum == b.weighted_sum);
  CHECK(a.dparams[0] == b.dparams[0]);
}
