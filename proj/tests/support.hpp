#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "bptsan/diffcore/ops.hpp"
#include "bptsan/diffcore/tape.hpp"
#include "bptsan/random.hpp"

namespace testing_support {

using bptsan::Rng;
using bptsan::Tensor;
using bptsan::diff::Tape;
using bptsan::diff::Var;

/// Builds a scalar from tracked inputs on a fresh tape.
using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

inline Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Tensor t = Tensor::matrix(rows, cols);
  for (double& x : t.data) x = rng.uniform(lo, hi);
  return t;
}

inline double evaluate(const ScalarFn& f, const std::vector<Tensor>& inputs) {
  Tape t;
  std::vector<Var> vars;
  for (const Tensor& x : inputs) vars.push_back(t.input(x));
  return f(t, vars).value()[0];
}

/// Largest relative disagreement between tape gradients and central finite
/// differences, |a - n| / max(|a|, |n|, 1e-6), over every input entry.
inline double max_relative_error(const ScalarFn& f, const std::vector<Tensor>& inputs, double h = 1e-5) {
  Tape t;
  std::vector<Var> vars;
  for (const Tensor& x : inputs) vars.push_back(t.input(x));
  t.backward(f(t, vars));
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor analytic = t.grad(vars[k]);
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      std::vector<Tensor> plus = inputs, minus = inputs;
      plus[k][i] += h;
      minus[k][i] -= h;
      const double numeric = (evaluate(f, plus) - evaluate(f, minus)) / (2.0 * h);
      const double a = analytic[i];
      worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6}));
    }
  }
  return worst;
}

/// Contracts a tensor-valued result with fixed random weights, so every
/// output element receives a distinct upstream gradient.
inline Var contract(Tape& t, Var y, std::uint64_t seed = 99) {
  Rng rng(seed);
  Tensor w = y.value().zeros_like();
  for (double& x : w.data) x = rng.uniform(-1.0, 1.0);
  return bptsan::diff::sum(bptsan::diff::mul(y, t.constant(w)));
}

}  // namespace testing_support
