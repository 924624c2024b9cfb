#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bptsan/diffcore/ops.hpp"
#include "bptsan/diffcore/tape.hpp"
#include "bptsan/errors.hpp"
#include "support.hpp"

using namespace bptsan;
using namespace bptsan::diff;
using testing_support::contract;
using testing_support::max_relative_error;
using testing_support::random_tensor;

namespace {

constexpr double kFdTolerance = 1e-4;

}  // namespace

TEST(Tape, SquareHasDerivativeSix) {
  Tape t;
  Var x = t.input(Tensor::scalar(3.0));
  t.backward(square(x));
  EXPECT_EQ(t.grad(x)[0], 6.0);
}

TEST(Tape, ConstantFunctionHasZeroGradient) {
  Tape t;
  Var x = t.input(Tensor::scalar(1.7));
  Var y = add(scale(x, 0.0), t.constant(Tensor::scalar(4.0)));
  t.backward(y);
  EXPECT_EQ(t.grad(x)[0], 0.0);
}

TEST(Tape, NonScalarSeedIsRejected) {
  Tape t;
  Var x = t.input(Tensor::vector({1.0, 2.0}));
  EXPECT_THROW(t.backward(square(x)), ContractError);
}

TEST(Tape, ForeignVarIsRejected) {
  Tape a, b;
  Var x = a.input(Tensor::scalar(1.0));
  Var y = b.input(Tensor::scalar(1.0));
  EXPECT_THROW(add(x, y), ContractError);
}

TEST(Tape, RepeatedBackwardIsBitIdentical) {
  Rng rng(5);
  Tape t;
  Var x = t.input(random_tensor(4, 3, rng));
  Var w = t.input(random_tensor(2, 3, rng));
  Var loss = sum(tanh(linear(x, w)));
  t.backward(loss);
  const Tensor gx = t.grad(x), gw = t.grad(w);
  t.backward(loss);
  EXPECT_EQ(gx.data, t.grad(x).data);
  EXPECT_EQ(gw.data, t.grad(w).data);
}

TEST(Tape, ParameterLeafAccumulatesIntoParameterGrad) {
  Parameter p("p", Tensor::vector({1.0, -2.0}));
  {
    Tape t;
    t.backward(sum(square(t.param(p))));
  }
  EXPECT_EQ(p.grad.data, (std::vector<double>{2.0, -4.0}));
  {
    Tape t;
    t.backward(sum(square(t.param(p))));
  }
  EXPECT_EQ(p.grad.data, (std::vector<double>{4.0, -8.0}));
  p.zero_grad();
  {
    Tape t;
    Var frozen = t.param(p, false);
    t.backward(add(sum(square(frozen)), sum(t.input(Tensor::scalar(0.0)))));
  }
  EXPECT_EQ(p.grad.data, (std::vector<double>{0.0, 0.0}));
}

TEST(FiniteDifferences, SumReluAffineMatchesTightly) {
  Rng rng(11);
  const Tensor a = random_tensor(5, 4, rng), b = random_tensor(1, 5, rng), x = random_tensor(3, 4, rng);
  auto f = [](Tape&, const std::vector<Var>& v) { return sum(relu(linear(v[2], v[0], v[1]))); };
  EXPECT_LT(max_relative_error(f, {a, b, x}), 1e-6);
}

struct OpCase {
  const char* name;
  testing_support::ScalarFn fn;
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
};

TEST(FiniteDifferences, EveryRealValuedOpMatches) {
  const std::vector<OpCase> cases = {
      {"add", [](Tape& t, const std::vector<Var>& v) { return contract(t, add(v[0], v[1])); }, {{3, 4}, {3, 4}}},
      {"sub", [](Tape& t, const std::vector<Var>& v) { return contract(t, sub(v[0], v[1])); }, {{3, 4}, {3, 4}}},
      {"mul", [](Tape& t, const std::vector<Var>& v) { return contract(t, mul(v[0], v[1])); }, {{3, 4}, {3, 4}}},
      {"affine", [](Tape& t, const std::vector<Var>& v) { return contract(t, affine(v[0], -1.5, 0.25)); }, {{2, 5}}},
      {"scale", [](Tape& t, const std::vector<Var>& v) { return contract(t, scale(v[0], 3.0)); }, {{2, 5}}},
      {"divide", [](Tape& t, const std::vector<Var>& v) { return contract(t, divide(v[0], 7.0)); }, {{2, 5}}},
      {"relu", [](Tape& t, const std::vector<Var>& v) { return contract(t, relu(v[0])); }, {{4, 4}}},
      {"tanh", [](Tape& t, const std::vector<Var>& v) { return contract(t, tanh(v[0])); }, {{4, 4}}},
      {"exp", [](Tape& t, const std::vector<Var>& v) { return contract(t, exp(v[0])); }, {{4, 4}}},
      {"square", [](Tape& t, const std::vector<Var>& v) { return contract(t, square(v[0])); }, {{4, 4}}},
      {"softplus", [](Tape& t, const std::vector<Var>& v) { return contract(t, softplus(v[0])); }, {{4, 4}}},
      {"clamp", [](Tape& t, const std::vector<Var>& v) { return contract(t, clamp(v[0], -3.0, 3.0)); }, {{4, 4}}},
      {"minimum", [](Tape& t, const std::vector<Var>& v) { return contract(t, minimum(v[0], v[1])); }, {{3, 3}, {3, 3}}},
      {"linear", [](Tape& t, const std::vector<Var>& v) { return contract(t, linear(v[0], v[1])); }, {{3, 4}, {5, 4}}},
      {"linear_bias",
       [](Tape& t, const std::vector<Var>& v) { return contract(t, linear(v[0], v[1], v[2])); },
       {{3, 4}, {5, 4}, {1, 5}}},
      {"add_row", [](Tape& t, const std::vector<Var>& v) { return contract(t, add_row(v[0], v[1])); }, {{3, 4}, {1, 4}}},
      {"broadcast_rows", [](Tape& t, const std::vector<Var>& v) { return contract(t, broadcast_rows(v[0], 3)); }, {{1, 4}}},
      {"concat_cols",
       [](Tape& t, const std::vector<Var>& v) { return contract(t, concat_cols(v[0], v[1])); },
       {{3, 2}, {3, 4}}},
      {"sum", [](Tape&, const std::vector<Var>& v) { return sum(square(v[0])); }, {{3, 4}}},
      {"mean", [](Tape&, const std::vector<Var>& v) { return mean(tanh(v[0])); }, {{3, 4}}},
      {"row_sum", [](Tape& t, const std::vector<Var>& v) { return contract(t, row_sum(v[0])); }, {{3, 4}}},
      {"maxout",
       [](Tape& t, const std::vector<Var>& v) { return contract(t, maxout(std::span<const Var>(v.data(), 3))); },
       {{2, 5}, {2, 5}, {2, 5}}},
      {"maxout_rows", [](Tape& t, const std::vector<Var>& v) { return contract(t, maxout_rows(v[0])); }, {{3, 6}}},
  };
  Rng rng(2024);
  for (const auto& c : cases) {
    std::vector<Tensor> inputs;
    for (auto [r, k] : c.shapes) inputs.push_back(random_tensor(r, k, rng));
    EXPECT_LT(max_relative_error(c.fn, inputs), kFdTolerance) << c.name;
  }
}

TEST(SpikeStep, ForwardAndWindowExamples) {
  const SurrogateConfig cfg{0.5, 0.5};
  Tape t;
  Var v = t.input(Tensor::vector({0.6, 1.2, 0.5}));
  Var o = spike_step(v, cfg);
  EXPECT_EQ(o.value().data, (std::vector<double>{1.0, 1.0, 0.0}));
  t.backward(sum(o));
  EXPECT_EQ(t.grad(v).data, (std::vector<double>{1.0, 0.0, 1.0}));
}

TEST(SpikeStep, BackwardIsUpstreamTimesWindowExactly) {
  const SurrogateConfig cfg{0.5, 0.5};
  Rng rng(3);
  Tape t;
  const Tensor v0 = random_tensor(6, 7, rng);
  Var v = t.input(v0);
  Var o = spike_step(v, cfg);
  Tensor up = v0.zeros_like();
  for (double& g : up.data) g = rng.uniform(-3.0, 3.0);
  t.backward(sum(mul(o, t.constant(up))));
  const Tensor g = t.grad(v);
  for (std::size_t i = 0; i < v0.size(); ++i) {
    const double z = std::abs(v0[i] - 0.5) < 0.5 ? 1.0 : 0.0;
    EXPECT_EQ(g[i], up[i] * z) << i;
    EXPECT_EQ(o.value()[i], v0[i] > 0.5 ? 1.0 : 0.0);
  }
}

TEST(Maxout, Examples) {
  Tape t;
  Var bv = t.input(Tensor::matrix(2, 1, {0.2, -0.1}));
  EXPECT_EQ(maxout_rows(bv).value()[0], 0.2);

  Var single = t.input(Tensor::matrix(1, 3, {0.4, -1.0, 2.5}));
  EXPECT_EQ(maxout_rows(single).value().data, (std::vector<double>{0.4, -1.0, 2.5}));
}

TEST(Maxout, TieRoutesGradientToLowestBranch) {
  Tape t;
  Var a = t.input(Tensor::vector({0.3}));
  Var b = t.input(Tensor::vector({0.3}));
  std::vector<Var> branches{a, b};
  Var y = maxout(branches);
  EXPECT_EQ(y.value()[0], 0.3);
  t.backward(sum(y));
  EXPECT_EQ(t.grad(a)[0], 1.0);
  EXPECT_EQ(t.grad(b)[0], 0.0);

  Tape t2;
  Var rows = t2.input(Tensor::matrix(2, 1, {0.3, 0.3}));
  t2.backward(sum(maxout_rows(rows)));
  EXPECT_EQ(t2.grad(rows).data, (std::vector<double>{1.0, 0.0}));
}

TEST(Maxout, RoutedGradientsSumToUpstream) {
  Rng rng(17);
  Tape t;
  const Tensor x = random_tensor(4, 9, rng);
  Var bv = t.input(x);
  Var y = maxout_rows(bv);
  Tensor up = y.value().zeros_like();
  for (double& g : up.data) g = rng.uniform(-1.0, 1.0);
  t.backward(sum(mul(y, t.constant(up))));
  const Tensor g = t.grad(bv);
  for (std::size_t i = 0; i < 9; ++i) {
    double total = 0.0;
    int nonzero = 0;
    for (std::size_t m = 0; m < 4; ++m) {
      total += g.at(m, i);
      nonzero += g.at(m, i) != 0.0;
    }
    EXPECT_EQ(total, up[i]);
    EXPECT_LE(nonzero, 1);
  }
}

TEST(StraightThrough, ThresholdAndBernoulliPassGradientUnchanged) {
  Tape t;
  Var x = t.input(Tensor::vector({0.2, 1.7}));
  Var s = threshold_straight_through(x, 1.0);
  EXPECT_EQ(s.value().data, (std::vector<double>{0.0, 1.0}));
  Var p = t.input(Tensor::vector({0.25, 0.75}));
  Var b = bernoulli_straight_through(p, Tensor::vector({0.5, 0.5}));
  EXPECT_EQ(b.value().data, (std::vector<double>{0.0, 1.0}));
  t.backward(add(sum(scale(s, 2.0)), sum(scale(b, 3.0))));
  EXPECT_EQ(t.grad(x).data, (std::vector<double>{2.0, 2.0}));
  EXPECT_EQ(t.grad(p).data, (std::vector<double>{3.0, 3.0}));
}

TEST(Tensor, ShapeAndDataLengthMustAgree) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5, 0.0)), ContractError);
  Tensor m = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m.at(1, 2), 6.0);
}
