#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bptsan/diffcore/tape.hpp"
#include "bptsan/diffcore/tensor.hpp"
#include "bptsan/errors.hpp"

namespace bptsan::diff {

/// Firing threshold and gradient window of the rectangular spike surrogate.
struct SurrogateConfig {
  double threshold = 0.5;
  double window = 0.5;

  void validate() const {
    if (!std::isfinite(threshold)) throw ConfigError("surrogate threshold must be finite");
    if (!(window > 0.0) || !std::isfinite(window)) throw ConfigError("surrogate window must be > 0");
  }

  /// Local pseudo-derivative z(v).
  double pseudo_grad(double v) const { return std::abs(v - threshold) < window ? 1.0 : 0.0; }
};

namespace detail {

inline void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value()))
    throw ContractError(std::string(op) + ": shape mismatch");
}

inline void accumulate(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
}

/// Elementwise map whose derivative is expressed through input and output.
template <class F, class D>
Var unary(Var x, F f, D df) {
  Tape& t = *x.tape();
  Tensor y = x.value().zeros_like();
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i]);
  const std::size_t xi = x.id();
  return t.record(std::move(y), {x}, [xi, df](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_buffer(self);
    const Tensor& in = tp.value(xi);
    const Tensor& out = tp.value(self);
    Tensor& gx = tp.grad_buffer(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(in[i], out[i]);
  });
}

}  // namespace detail

inline Var add(Var a, Var b) {
  detail::require_same_shape(a, b, "add");
  Tensor y = a.value();
  detail::accumulate(y, b.value());
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape()->record(std::move(y), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(ai)) detail::accumulate(t.grad_buffer(ai), g);
    if (t.requires_grad(bi)) detail::accumulate(t.grad_buffer(bi), g);
  });
}

inline Var sub(Var a, Var b) {
  detail::require_same_shape(a, b, "sub");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape()->record(std::move(y), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(ai)) detail::accumulate(t.grad_buffer(ai), g);
    if (t.requires_grad(bi)) {
      Tensor& gb = t.grad_buffer(bi);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

/// Elementwise (Hadamard) product.
inline Var mul(Var a, Var b) {
  detail::require_same_shape(a, b, "mul");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape()->record(std::move(y), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(ai)) {
      const Tensor& bv = t.value(bi);
      Tensor& ga = t.grad_buffer(ai);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(bi)) {
      const Tensor& av = t.value(ai);
      Tensor& gb = t.grad_buffer(bi);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

/// scale * x + shift
inline Var affine(Var x, double scale, double shift) {
  return detail::unary(x, [scale, shift](double v) { return scale * v + shift; },
                       [scale](double, double) { return scale; });
}

inline Var scale(Var x, double factor) {
  return detail::unary(x, [factor](double v) { return factor * v; },
                       [factor](double, double) { return factor; });
}

/// x / divisor, kept separate from scale() so that e.g. 3/5 is exactly 0.6.
inline Var divide(Var x, double divisor) {
  return detail::unary(x, [divisor](double v) { return v / divisor; },
                       [divisor](double, double) { return 1.0 / divisor; });
}

inline Var relu(Var x) {
  return detail::unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
                       [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

inline Var tanh(Var x) {
  return detail::unary(x, [](double v) { return std::tanh(v); },
                       [](double, double y) { return 1.0 - y * y; });
}

inline Var exp(Var x) {
  return detail::unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

inline Var square(Var x) {
  return detail::unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

/// log(1 + e^x), evaluated without overflow.
inline Var softplus(Var x) {
  return detail::unary(
      x, [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
      [](double v, double) { return 1.0 / (1.0 + std::exp(-v)); });
}

/// Clamp with zero gradient outside [low, high].
inline Var clamp(Var x, double low, double high) {
  return detail::unary(x, [low, high](double v) { return std::clamp(v, low, high); },
                       [low, high](double v, double) { return (v >= low && v <= high) ? 1.0 : 0.0; });
}

/// Heaviside spike o = 1[v > threshold]; backward multiplies the upstream
/// gradient by the rectangular window z(v) = 1[|v - threshold| < window].
inline Var spike_step(Var v, const SurrogateConfig& cfg) {
  return detail::unary(v, [th = cfg.threshold](double x) { return x > th ? 1.0 : 0.0; },
                       [cfg](double x, double) { return cfg.pseudo_grad(x); });
}

/// Heaviside 1[x > threshold] with an identity (straight-through) backward.
inline Var threshold_straight_through(Var x, double threshold) {
  return detail::unary(x, [threshold](double v) { return v > threshold ? 1.0 : 0.0; },
                       [](double, double) { return 1.0; });
}

/// Bernoulli sample 1[u < p] for given uniforms u in [0, 1), with an identity
/// (straight-through) backward to p.
inline Var bernoulli_straight_through(Var p, const Tensor& uniforms) {
  if (p.value().size() != uniforms.size()) throw ContractError("bernoulli: shape mismatch");
  Tensor y = p.value().zeros_like();
  const Tensor& pv = p.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = uniforms[i] < pv[i] ? 1.0 : 0.0;
  const std::size_t pi = p.id();
  return p.tape()->record(std::move(y), {p}, [pi](Tape& t, std::size_t self) {
    detail::accumulate(t.grad_buffer(pi), t.grad_buffer(self));
  });
}

/// Elementwise minimum; ties send the gradient to the first argument.
inline Var minimum(Var a, Var b) {
  detail::require_same_shape(a, b, "minimum");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::min(y[i], bv[i]);
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape()->record(std::move(y), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    const Tensor& av = t.value(ai);
    const Tensor& bv = t.value(bi);
    const bool ga_on = t.requires_grad(ai), gb_on = t.requires_grad(bi);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (av[i] <= bv[i]) {
        if (ga_on) t.grad_buffer(ai)[i] += g[i];
      } else if (gb_on) {
        t.grad_buffer(bi)[i] += g[i];
      }
    }
  });
}

/// Elementwise maximum across equally shaped branch tensors. The gradient of
/// each output element goes entirely to the winning branch; ties go to the
/// lowest branch index.
inline Var maxout(std::span<const Var> branches) {
  if (branches.empty()) throw ContractError("maxout: at least one branch required");
  for (const Var& b : branches) detail::require_same_shape(branches.front(), b, "maxout");
  const std::size_t n = branches.front().value().size();
  Tensor y = branches.front().value();
  auto winner = std::make_shared<std::vector<std::uint32_t>>(n, 0u);
  for (std::size_t m = 1; m < branches.size(); ++m) {
    const Tensor& bv = branches[m].value();
    for (std::size_t i = 0; i < n; ++i) {
      if (bv[i] > y[i]) {
        y[i] = bv[i];
        (*winner)[i] = static_cast<std::uint32_t>(m);
      }
    }
  }
  std::vector<std::size_t> ids;
  ids.reserve(branches.size());
  for (const Var& b : branches) ids.push_back(b.id());
  std::vector<Var> parents(branches.begin(), branches.end());
  return branches.front().tape()->record(
      std::move(y), parents, [ids, winner](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        for (std::size_t i = 0; i < g.size(); ++i) {
          const std::size_t src = ids[(*winner)[i]];
          if (t.requires_grad(src)) t.grad_buffer(src)[i] += g[i];
        }
      });
}

/// Maxout over the rows of a [d x n] tensor, returning shape {n}.
inline Var maxout_rows(Var branch_values) {
  const Tensor& bv = branch_values.value();
  const std::size_t d = bv.rows(), n = bv.cols();
  if (d == 0) throw ContractError("maxout_rows: at least one branch required");
  Tensor y({n}, 0.0);
  auto winner = std::make_shared<std::vector<std::uint32_t>>(n, 0u);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = bv.at(0, i);
    for (std::size_t m = 1; m < d; ++m) {
      if (bv.at(m, i) > y[i]) {
        y[i] = bv.at(m, i);
        (*winner)[i] = static_cast<std::uint32_t>(m);
      }
    }
  }
  const std::size_t src = branch_values.id();
  return branch_values.tape()->record(std::move(y), {branch_values}, [src, winner, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    Tensor& gs = t.grad_buffer(src);
    for (std::size_t i = 0; i < n; ++i) gs[(*winner)[i] * n + i] += g[i];
  });
}

/// y = x * W^T for x [B x in], W [out x in] -> [B x out].
inline Var linear(Var x, Var w) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (xv.cols() != wv.cols()) throw ContractError("linear: input width does not match weight columns");
  Tensor y = Tensor::matrix(xv.rows(), wv.rows());
  y.mat().noalias() = xv.mat() * wv.mat().transpose();
  const std::size_t xi = x.id(), wi = w.id();
  return x.tape()->record(std::move(y), {x, w}, [xi, wi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(xi)) t.grad_buffer(xi).mat().noalias() += g.mat() * t.value(wi).mat();
    if (t.requires_grad(wi)) t.grad_buffer(wi).mat().noalias() += g.mat().transpose() * t.value(xi).mat();
  });
}

/// Adds a row vector b ({n} or [1 x n]) to every row of y [B x n].
inline Var add_row(Var y, Var b) {
  const Tensor& yv = y.value();
  const Tensor& bv = b.value();
  if (bv.size() != yv.cols()) throw ContractError("add_row: bias length does not match columns");
  Tensor out = yv;
  const std::size_t cols = yv.cols();
  for (std::size_t r = 0; r < yv.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) += bv[c];
  const std::size_t yi = y.id(), bi = b.id();
  return y.tape()->record(std::move(out), {y, b}, [yi, bi, cols](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(yi)) detail::accumulate(t.grad_buffer(yi), g);
    if (t.requires_grad(bi)) {
      Tensor& gb = t.grad_buffer(bi);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) gb[c] += g.at(r, c);
    }
  });
}

/// Affine layer x * W^T + b.
inline Var linear(Var x, Var w, Var b) { return add_row(linear(x, w), b); }

/// Repeats a row vector ({n} or [1 x n]) into [rows x n].
inline Var broadcast_rows(Var v, std::size_t rows) {
  const Tensor& vv = v.value();
  const std::size_t n = vv.size();
  Tensor out = Tensor::matrix(rows, n);
  for (std::size_t r = 0; r < rows; ++r) std::copy(vv.data.begin(), vv.data.end(), out.data.begin() + r * n);
  const std::size_t vi = v.id();
  return v.tape()->record(std::move(out), {v}, [vi, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    Tensor& gv = t.grad_buffer(vi);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < n; ++c) gv[c] += g.at(r, c);
  });
}

/// [B x p] ++ [B x q] -> [B x (p + q)]
inline Var concat_cols(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() != bv.rows()) throw ContractError("concat_cols: row mismatch");
  const std::size_t rows = av.rows(), p = av.cols(), q = bv.cols();
  Tensor out = Tensor::matrix(rows, p + q);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < p; ++c) out.at(r, c) = av.at(r, c);
    for (std::size_t c = 0; c < q; ++c) out.at(r, p + c) = bv.at(r, c);
  }
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape()->record(std::move(out), {a, b}, [ai, bi, p, q](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    const std::size_t rows = g.rows();
    if (t.requires_grad(ai)) {
      Tensor& ga = t.grad_buffer(ai);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < p; ++c) ga.at(r, c) += g.at(r, c);
    }
    if (t.requires_grad(bi)) {
      Tensor& gb = t.grad_buffer(bi);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < q; ++c) gb.at(r, c) += g.at(r, p + c);
    }
  });
}

/// Sum of all elements -> scalar.
inline Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data) s += v;
  const std::size_t xi = x.id();
  return x.tape()->record(Tensor::scalar(s), {x}, [xi](Tape& t, std::size_t self) {
    const double g = t.grad_buffer(self)[0];
    Tensor& gx = t.grad_buffer(xi);
    for (double& v : gx.data) v += g;
  });
}

/// Mean of all elements -> scalar.
inline Var mean(Var x) { return divide(sum(x), static_cast<double>(x.value().size())); }

/// Per-row sum: [B x n] -> [B x 1].
inline Var row_sum(Var x) {
  const Tensor& xv = x.value();
  Tensor out = Tensor::matrix(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < xv.cols(); ++c) s += xv.at(r, c);
    out[r] = s;
  }
  const std::size_t xi = x.id();
  return x.tape()->record(std::move(out), {x}, [xi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    Tensor& gx = t.grad_buffer(xi);
    const std::size_t cols = gx.cols();
    for (std::size_t r = 0; r < gx.rows(); ++r)
      for (std::size_t c = 0; c < cols; ++c) gx.at(r, c) += g[r];
  });
}

}  // namespace bptsan::diff
