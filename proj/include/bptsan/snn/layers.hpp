#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bptsan/diffcore/ops.hpp"
#include "bptsan/diffcore/tape.hpp"
#include "bptsan/errors.hpp"
#include "bptsan/random.hpp"

namespace bptsan::snn {

using diff::Tape;
using diff::Var;

/// Current-based LIF constants.
struct LifConfig {
  double current_decay = 0.5;
  double potential_decay = 0.75;
  double threshold = 0.5;
  double rest = 0.0;
  double surrogate_window = 0.5;

  void validate() const {
    if (!(current_decay >= 0.0 && current_decay <= 1.0)) throw ConfigError("snn.d_c must lie in [0, 1]");
    if (!(potential_decay >= 0.0 && potential_decay <= 1.0)) throw ConfigError("snn.d_v must lie in [0, 1]");
    if (!std::isfinite(threshold)) throw ConfigError("snn.v_th must be finite");
    if (!std::isfinite(rest)) throw ConfigError("snn.rest must be finite");
    if (!(surrogate_window > 0.0) || !std::isfinite(surrogate_window)) throw ConfigError("snn.w must be > 0");
  }

  diff::SurrogateConfig surrogate() const { return {threshold, surrogate_window}; }
};

/// Per-layer neuron state at one timestep (batched rows).
struct LifState {
  Var current;
  Var potential;
  Var spike;
};

/// Zero state for `batch` rows of `width` neurons.
inline LifState lif_zero_state(Tape& tape, std::size_t batch, std::size_t width) {
  Var z = tape.constant(Tensor::matrix(batch, width));
  return {z, z, z};
}

/// One LIF update:
///   c <- d_c * c_prev + inter
///   v <- d_v * v_prev * (1 - o_prev) + c + intra   (hard reset to rest = 0)
///   o <- 1[v > v_th]                                 (rectangular surrogate)
/// With rest != 0 the reset value is rest * o_prev before the decay.
inline LifState lif_step(const LifState& prev, Var inter, std::optional<Var> intra, const LifConfig& cfg) {
  Var current = diff::add(diff::scale(prev.current, cfg.current_decay), inter);
  Var kept = diff::mul(prev.potential, diff::affine(prev.spike, -1.0, 1.0));
  if (cfg.rest != 0.0) kept = diff::add(kept, diff::scale(prev.spike, cfg.rest));
  Var potential = diff::add(diff::scale(kept, cfg.potential_decay), current);
  if (intra) potential = diff::add(potential, *intra);
  Var spike = diff::spike_step(potential, cfg.surrogate());
  return {current, potential, spike};
}

/// Exclusive assignment of every (output neuron, input) pair to one of d
/// dendritic branches. Entries are 0-based branch indices.
struct BranchMask {
  std::uint64_t seed = 0;
  std::size_t n_in = 0;
  std::size_t n_out = 0;
  std::size_t branches = 1;
  std::vector<std::uint32_t> assignment;  // [n_out x n_in]

  std::uint32_t branch_of(std::size_t out, std::size_t in) const { return assignment[out * n_in + in]; }

  /// 0/1 indicator of branch m as an [n_out x n_in] tensor.
  Tensor indicator(std::size_t m) const {
    Tensor t = Tensor::matrix(n_out, n_in);
    for (std::size_t i = 0; i < assignment.size(); ++i) t[i] = assignment[i] == m ? 1.0 : 0.0;
    return t;
  }

  /// Input indices of branch m of neuron `out`, ascending.
  std::vector<std::size_t> branch_inputs(std::size_t out, std::size_t m) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n_in; ++i)
      if (branch_of(out, i) == m) idx.push_back(i);
    return idx;
  }

  friend bool operator==(const BranchMask&, const BranchMask&) = default;
};

/// For each output neuron in order, a Fisher-Yates permutation of the inputs
/// drawn from one stream seeded with `seed` is cut into d contiguous chunks;
/// chunk m becomes branch m. When d does not divide n_in the first
/// (n_in mod d) chunks hold one extra input.
inline BranchMask build_mask(std::uint64_t seed, std::size_t n_in, std::size_t n_out, std::size_t d) {
  if (d < 1 || d > n_in)
    throw ConfigError("branch count d=" + std::to_string(d) + " must satisfy 1 <= d <= n_in=" + std::to_string(n_in));
  BranchMask mask{seed, n_in, n_out, d, std::vector<std::uint32_t>(n_in * n_out, 0)};
  if (d == 1) return mask;
  Rng rng(seed);
  std::vector<std::size_t> perm(n_in);
  const std::size_t base = n_in / d, extra = n_in % d;
  for (std::size_t j = 0; j < n_out; ++j) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n_in - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
    std::size_t pos = 0;
    for (std::size_t m = 0; m < d; ++m) {
      const std::size_t len = base + (m < extra ? 1 : 0);
      for (std::size_t c = 0; c < len; ++c) mask.assignment[j * n_in + perm[pos++]] = static_cast<std::uint32_t>(m);
    }
  }
  return mask;
}

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation.
inline Tensor fan_in_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  Tensor t = Tensor::matrix(rows, cols);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& x : t.data) x = rng.uniform(-bound, bound);
  return t;
}

/// Inter-layer connection: either a plain weighted sum or dendritic branches
/// with maxout. Both hold exactly n_out x n_in weights.
class InterConnection {
 public:
  InterConnection() = default;

  static InterConnection dense(std::string name, Tensor weight) {
    InterConnection c;
    c.weight_ = Parameter(std::move(name), std::move(weight));
    return c;
  }

  static InterConnection dendritic(std::string name, Tensor weight, std::uint64_t mask_seed, std::size_t branches) {
    InterConnection c;
    const std::size_t n_out = weight.rows(), n_in = weight.cols();
    c.weight_ = Parameter(std::move(name), std::move(weight));
    c.mask_ = build_mask(mask_seed, n_in, n_out, branches);
    c.cache_indicators();
    return c;
  }

  bool is_dendritic() const { return mask_.has_value(); }
  std::size_t n_in() const { return weight_.value.cols(); }
  std::size_t n_out() const { return weight_.value.rows(); }
  std::size_t branches() const { return mask_ ? mask_->branches : 1; }
  const std::optional<BranchMask>& mask() const { return mask_; }
  Parameter& weight() { return weight_; }
  const Parameter& weight() const { return weight_; }

  /// Rebuilds the mask from a stored seed (checkpoint restore).
  void rebuild_mask(std::uint64_t seed) {
    if (!mask_) throw ContractError("rebuild_mask on a dense connection");
    mask_ = build_mask(seed, n_in(), n_out(), mask_->branches);
    cache_indicators();
  }

  /// Weight views valid for one forward pass: the weight itself (dense) or
  /// W masked to each branch (dendritic).
  struct Bound {
    std::vector<Var> weights;
    bool dendritic = false;
  };

  Bound bind(Tape& tape, bool trainable = true) {
    Var w = tape.param(weight_, trainable);
    Bound b;
    if (!mask_ || mask_->branches == 1) {
      b.weights.push_back(w);
      b.dendritic = mask_.has_value();
      return b;
    }
    b.dendritic = true;
    for (const auto& ind : indicators_) b.weights.push_back(masked(w, ind));
    return b;
  }

  /// Presynaptic spikes [B x n_in] -> input current [B x n_out].
  static Var apply(const Bound& bound, Var spikes) {
    if (bound.weights.size() == 1) return diff::linear(spikes, bound.weights.front());
    std::vector<Var> branch_sums;
    branch_sums.reserve(bound.weights.size());
    for (const Var& w : bound.weights) branch_sums.push_back(diff::linear(spikes, w));
    return diff::maxout(branch_sums);
  }

 private:
  void cache_indicators() {
    indicators_.clear();
    if (mask_->branches > 1)
      for (std::size_t m = 0; m < mask_->branches; ++m)
        indicators_.push_back(std::make_shared<const Tensor>(mask_->indicator(m)));
  }

  /// W (.) M without copying the indicator onto the tape.
  static Var masked(Var w, std::shared_ptr<const Tensor> indicator) {
    Tensor out = w.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= (*indicator)[i];
    const std::size_t wi = w.id();
    return w.tape()->record(std::move(out), {w}, [wi, indicator](Tape& t, std::size_t self) {
      const Tensor& g = t.grad_buffer(self);
      Tensor& gw = t.grad_buffer(wi);
      for (std::size_t i = 0; i < g.size(); ++i) gw[i] += g[i] * (*indicator)[i];
    });
  }

  Parameter weight_;
  std::optional<BranchMask> mask_;
  std::vector<std::shared_ptr<const Tensor>> indicators_;
};

/// Neighbour offsets on the ring, in weight-column order: -r..-1, +1..+r.
inline std::vector<long> ring_offsets(std::size_t radius) {
  std::vector<long> off;
  for (long k = -static_cast<long>(radius); k <= static_cast<long>(radius); ++k)
    if (k != 0) off.push_back(k);
  return off;
}

/// Lateral term: out[b, j] = sum_k W[j, k] * spikes[b, (j + offset_k) mod n].
inline Var ring_lateral(Var spikes, Var weight, std::size_t radius) {
  const Tensor& s = spikes.value();
  const Tensor& w = weight.value();
  const std::size_t n = s.cols(), batch = s.rows();
  const std::vector<long> off = ring_offsets(radius);
  const std::size_t k_n = off.size();
  if (w.rows() != n || w.cols() != k_n) throw ContractError("ring_lateral: weight shape must be [n x 2r]");
  // nb[j * k_n + k]: column of neuron j's k-th neighbour
  auto nb = std::make_shared<std::vector<std::size_t>>(n * k_n);
  const long ln = static_cast<long>(n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < k_n; ++k)
      (*nb)[j * k_n + k] = static_cast<std::size_t>(((static_cast<long>(j) + off[k]) % ln + ln) % ln);
  Tensor out = Tensor::matrix(batch, n);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* srow = s.data.data() + b * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* wrow = w.data.data() + j * k_n;
      const std::size_t* idx = nb->data() + j * k_n;
      double acc = 0.0;
      for (std::size_t k = 0; k < k_n; ++k) acc += wrow[k] * srow[idx[k]];
      out.data[b * n + j] = acc;
    }
  }
  const std::size_t si = spikes.id(), wi = weight.id();
  return spikes.tape()->record(std::move(out), {spikes, weight}, [si, wi, k_n, nb](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    const Tensor& s = t.value(si);
    const Tensor& w = t.value(wi);
    const std::size_t n = g.cols();
    Tensor* gs = t.requires_grad(si) ? &t.grad_buffer(si) : nullptr;
    Tensor* gw = t.requires_grad(wi) ? &t.grad_buffer(wi) : nullptr;
    for (std::size_t b = 0; b < g.rows(); ++b)
      for (std::size_t j = 0; j < n; ++j) {
        const double gj = g.data[b * n + j];
        if (gj == 0.0) continue;
        const std::size_t* idx = nb->data() + j * k_n;
        for (std::size_t k = 0; k < k_n; ++k) {
          if (gw) gw->data[j * k_n + k] += gj * s.data[b * n + idx[k]];
          if (gs) gs->data[b * n + idx[k]] += gj * w.data[j * k_n + k];
        }
      }
  });
}

/// Intra-layer lateral interaction among the 2r ring neighbours of each
/// neuron (self excluded), fed by the layer's own spikes of the previous step.
class LateralConnection {
 public:
  LateralConnection() = default;

  LateralConnection(std::string name, std::size_t width, std::size_t radius)
      : radius_(radius), weight_(std::move(name), Tensor::matrix(width, 2 * radius)) {
    if (radius == 0) throw ConfigError("snn.lateral_radius must be >= 1");
    if (2 * radius >= width)
      throw ConfigError("snn.lateral_radius=" + std::to_string(radius) + " too large for layer width " +
                        std::to_string(width));
  }

  std::size_t radius() const { return radius_; }
  std::size_t width() const { return weight_.value.rows(); }
  Parameter& weight() { return weight_; }
  const Parameter& weight() const { return weight_; }

  Var apply(Var bound_weight, Var prev_spikes) const { return ring_lateral(prev_spikes, bound_weight, radius_); }

 private:
  std::size_t radius_ = 0;
  Parameter weight_;
};

}  // namespace bptsan::snn
