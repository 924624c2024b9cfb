#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bptsan/diffcore/ops.hpp"
#include "bptsan/diffcore/tape.hpp"
#include "bptsan/errors.hpp"
#include "bptsan/random.hpp"

namespace bptsan::encoding {

using diff::Tape;
using diff::Var;

enum class SpikeCoding { poisson, deterministic };

/// Binary spike raster of shape [steps x width].
struct SpikeTrain {
  std::size_t steps = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bits;

  SpikeTrain() = default;
  SpikeTrain(std::size_t t, std::size_t w) : steps(t), width(w), bits(t * w, 0) {}

  std::uint8_t at(std::size_t step, std::size_t k) const { return bits[step * width + k]; }
  void set(std::size_t step, std::size_t k, bool on) { bits[step * width + k] = on ? 1 : 0; }

  std::size_t count(std::size_t k) const {
    std::size_t c = 0;
    for (std::size_t t = 0; t < steps; ++t) c += at(t, k);
    return c;
  }

  std::size_t total() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
  }

  /// Builds a train from one timestep-major [steps x width] 0/1 tensor.
  static SpikeTrain from_tensor(const Tensor& t) {
    SpikeTrain s(t.rows(), t.cols());
    for (std::size_t i = 0; i < t.size(); ++i) s.bits[i] = t[i] > 0.5 ? 1 : 0;
    return s;
  }
};

/// Gaussian receptive fields: J neurons per state dimension, each with a mean
/// and a standard deviation (both trainable unless frozen).
class PopulationEncoder {
 public:
  PopulationEncoder() = default;

  PopulationEncoder(std::size_t n_state, std::size_t pop_size, Tensor means, Tensor stds, bool trainable = true)
      : n_state_(n_state),
        pop_size_(pop_size),
        mean_("encoder.mean", std::move(means)),
        stddev_("encoder.std", std::move(stds)),
        trainable_(trainable) {
    if (pop_size_ == 0) throw ConfigError("population size must be >= 1");
    if (mean_.value.size() != n_state_ * pop_size_ || stddev_.value.size() != n_state_ * pop_size_)
      throw ConfigError("population encoder parameter shape mismatch");
    for (double s : stddev_.value.data)
      if (!(s > 0.0)) throw ConfigError("population encoder stds must be > 0");
  }

  /// Means evenly spaced over [low_i, high_i]; every std equals the spacing
  /// (range width / (J - 1)), or the range width itself when J = 1.
  static PopulationEncoder evenly_spaced(std::span<const double> low, std::span<const double> high,
                                         std::size_t pop_size, bool trainable = true) {
    if (low.size() != high.size()) throw ConfigError("encoder range bounds differ in length");
    const std::size_t n = low.size();
    Tensor means = Tensor::matrix(n, pop_size);
    Tensor stds = Tensor::matrix(n, pop_size);
    for (std::size_t i = 0; i < n; ++i) {
      const double width = high[i] - low[i];
      if (!(width > 0.0)) throw ConfigError("encoder range must satisfy low < high");
      const double spacing = pop_size > 1 ? width / static_cast<double>(pop_size - 1) : width;
      for (std::size_t j = 0; j < pop_size; ++j) {
        means.at(i, j) = pop_size > 1 ? low[i] + spacing * static_cast<double>(j) : 0.5 * (low[i] + high[i]);
        stds.at(i, j) = spacing;
      }
    }
    return PopulationEncoder(n, pop_size, std::move(means), std::move(stds), trainable);
  }

  std::size_t state_dim() const { return n_state_; }
  std::size_t pop_size() const { return pop_size_; }
  std::size_t width() const { return n_state_ * pop_size_; }
  bool trainable() const { return trainable_; }

  Parameter& mean() { return mean_; }
  Parameter& stddev() { return stddev_; }
  const Parameter& mean() const { return mean_; }
  const Parameter& stddev() const { return stddev_; }

  /// Stimulation strengths A[i*J + j] = exp(-(s_i - mu_ij)^2 / (2 sigma_ij^2)).
  std::vector<double> encode(std::span<const double> state) const {
    check_state(state);
    std::vector<double> out(width());
    for (std::size_t i = 0; i < n_state_; ++i) {
      for (std::size_t j = 0; j < pop_size_; ++j) {
        const std::size_t k = i * pop_size_ + j;
        const double diff = state[i] - mean_.value[k];
        const double sigma = stddev_.value[k];
        out[k] = std::exp(-(diff * diff) / (2.0 * sigma * sigma));
      }
    }
    return out;
  }

  /// Batched, differentiable form: states [B x N] -> strengths [B x N*J].
  Var encode(Tape& tape, const Tensor& states) {
    if (states.cols() != n_state_) throw ConfigError("state width does not match encoder");
    for (double v : states.data)
      if (!std::isfinite(v)) throw InputError("non-finite state passed to encoder");
    Var mu = tape.param(mean_, trainable_);
    Var sigma = tape.param(stddev_, trainable_);
    const std::size_t batch = states.rows(), width_ = width(), pop = pop_size_;
    Tensor out = Tensor::matrix(batch, width_);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t k = 0; k < width_; ++k) {
        const double diff = states.at(b, k / pop) - mu.value()[k];
        const double s = sigma.value()[k];
        out.at(b, k) = std::exp(-(diff * diff) / (2.0 * s * s));
      }
    }
    Var x = tape.constant(states);
    const std::size_t xi = x.id(), mi = mu.id(), si = sigma.id();
    return tape.record(std::move(out), {x, mu, sigma}, [xi, mi, si, pop](Tape& t, std::size_t self) {
      const Tensor& g = t.grad_buffer(self);
      const Tensor& a = t.value(self);
      const Tensor& s = t.value(xi);
      const Tensor& m = t.value(mi);
      const Tensor& sd = t.value(si);
      Tensor& gm = t.grad_buffer(mi);
      Tensor& gs = t.grad_buffer(si);
      const std::size_t w = a.cols();
      for (std::size_t b = 0; b < a.rows(); ++b) {
        for (std::size_t k = 0; k < w; ++k) {
          const double diff = s.at(b, k / pop) - m[k];
          const double sig = sd[k];
          const double ga = g.at(b, k) * a.at(b, k);
          gm[k] += ga * diff / (sig * sig);
          gs[k] += ga * diff * diff / (sig * sig * sig);
        }
      }
    });
  }

  /// Keeps every std strictly positive after an optimizer step.
  void enforce_constraints(double min_std = 1e-3) {
    for (double& s : stddev_.value.data) s = std::max(s, min_std);
  }

 private:
  void check_state(std::span<const double> state) const {
    if (state.size() != n_state_) throw ConfigError("state width does not match encoder");
    for (double v : state)
      if (!std::isfinite(v)) throw InputError("non-finite state passed to encoder");
  }

  std::size_t n_state_ = 0;
  std::size_t pop_size_ = 0;
  Parameter mean_;
  Parameter stddev_;
  bool trainable_ = true;
};

/// Independent Bernoulli(A_k) draw for every neuron and timestep. Strengths
/// are clipped to [0, 1]; draws are consumed timestep-major.
inline SpikeTrain poisson_encode(std::span<const double> strength, std::size_t steps, Rng& rng) {
  SpikeTrain out(steps, strength.size());
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t k = 0; k < strength.size(); ++k) {
      const double p = std::clamp(strength[k], 0.0, 1.0);
      out.set(t, k, rng.uniform() < p);
    }
  }
  return out;
}

/// Pseudo-potential encoder. Each step adds A_k to v'_k; a spike is emitted
/// when v'_k > 1 and v'_k is lowered by 1. After step tau the potential
/// equals tau*A_k minus the spikes emitted so far, which is how it is
/// evaluated here (one rounding per step instead of an accumulating sum).
inline SpikeTrain deterministic_encode(std::span<const double> strength, std::size_t steps) {
  SpikeTrain out(steps, strength.size());
  for (std::size_t k = 0; k < strength.size(); ++k) {
    double emitted = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      const double potential = static_cast<double>(t + 1) * strength[k] - emitted;
      if (potential > 1.0) {
        out.set(t, k, true);
        emitted += 1.0;
      }
    }
  }
  return out;
}

/// Per-timestep spike generator used inside the differentiable actor. Holds
/// the running state of the deterministic coder for one forward pass.
class SpikeGenerator {
 public:
  SpikeGenerator(SpikeCoding coding, Var strengths, Rng* rng) : coding_(coding), strengths_(strengths), rng_(rng) {
    if (coding_ == SpikeCoding::poisson && rng_ == nullptr)
      throw ContractError("Poisson coding requires a random stream");
  }

  /// Spikes for timestep tau (1-based), shape equal to the strengths.
  Var next(std::size_t tau) {
    if (coding_ == SpikeCoding::poisson) {
      Tensor u = strengths_.value().zeros_like();
      for (double& x : u.data) x = rng_->uniform();
      return diff::bernoulli_straight_through(strengths_, u);
    }
    Var potential = diff::scale(strengths_, static_cast<double>(tau));
    if (emitted_.valid()) potential = diff::sub(potential, emitted_);
    Var spikes = diff::threshold_straight_through(potential, 1.0);
    emitted_ = emitted_.valid() ? diff::add(emitted_, spikes) : spikes;
    return spikes;
  }

 private:
  SpikeCoding coding_;
  Var strengths_;
  Rng* rng_;
  Var emitted_;
};

/// Rate decoder: per action dimension m, a weighted sum of the J output
/// firing rates plus a bias gives the pre-squash value raw_m; the action is
/// mid_m + half_range_m * tanh(raw_m).
class ActionDecoder {
 public:
  ActionDecoder() = default;

  ActionDecoder(std::size_t n_action, std::size_t pop_size, std::vector<double> low, std::vector<double> high)
      : n_action_(n_action),
        pop_size_(pop_size),
        weight_("decoder.weight", Tensor::matrix(n_action, pop_size)),
        bias_("decoder.bias", Tensor({n_action}, 0.0)),
        low_(std::move(low)),
        high_(std::move(high)) {
    if (low_.size() != n_action_ || high_.size() != n_action_) throw ConfigError("action bounds length mismatch");
    for (std::size_t m = 0; m < n_action_; ++m)
      if (!std::isfinite(low_[m]) || !std::isfinite(high_[m]) || !(low_[m] < high_[m]))
        throw ConfigError("action bounds must be finite with low < high");
  }

  std::size_t action_dim() const { return n_action_; }
  std::size_t pop_size() const { return pop_size_; }
  std::size_t width() const { return n_action_ * pop_size_; }
  const std::vector<double>& low() const { return low_; }
  const std::vector<double>& high() const { return high_; }
  double midpoint(std::size_t m) const { return 0.5 * (low_[m] + high_[m]); }
  double half_range(std::size_t m) const { return 0.5 * (high_[m] - low_[m]); }

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  const Parameter& weight() const { return weight_; }
  const Parameter& bias() const { return bias_; }

  /// Maps a real value into [low_m, high_m] through tanh.
  double squash(std::size_t m, double raw) const {
    return std::clamp(midpoint(m) + half_range(m) * std::tanh(raw), low_[m], high_[m]);
  }

  /// Plain decode of a recorded output spike train.
  std::vector<double> decode(const SpikeTrain& spikes) const {
    if (spikes.width != width()) throw ConfigError("output spike width does not match decoder");
    std::vector<double> action(n_action_);
    for (std::size_t m = 0; m < n_action_; ++m) {
      double raw = 0.0;
      for (std::size_t j = 0; j < pop_size_; ++j) {
        const double rate = static_cast<double>(spikes.count(m * pop_size_ + j)) / static_cast<double>(spikes.steps);
        raw += weight_.value.at(m, j) * rate;
      }
      raw += bias_.value[m];
      action[m] = squash(m, raw);
    }
    return action;
  }

  /// rates [B x M*J] -> raw pre-squash values [B x M].
  Var raw(Tape& tape, Var rates, bool trainable = true) {
    if (rates.value().cols() != width()) throw ConfigError("output spike width does not match decoder");
    Var w = tape.param(weight_, trainable);
    Var b = tape.param(bias_, trainable);
    const std::size_t batch = rates.value().rows(), pop = pop_size_, na = n_action_;
    Tensor out = Tensor::matrix(batch, na);
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t m = 0; m < na; ++m) {
        double acc = 0.0;
        for (std::size_t j = 0; j < pop; ++j) acc += w.value().at(m, j) * rates.value().at(r, m * pop + j);
        out.at(r, m) = acc + b.value()[m];
      }
    }
    const std::size_t ri = rates.id(), wi = w.id(), bi = b.id();
    return tape.record(std::move(out), {rates, w, b}, [ri, wi, bi, pop, na](Tape& t, std::size_t self) {
      const Tensor& g = t.grad_buffer(self);
      const Tensor& x = t.value(ri);
      const Tensor& wv = t.value(wi);
      const bool gx_on = t.requires_grad(ri), gw_on = t.requires_grad(wi), gb_on = t.requires_grad(bi);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t m = 0; m < na; ++m) {
          const double gr = g.at(r, m);
          if (gb_on) t.grad_buffer(bi)[m] += gr;
          for (std::size_t j = 0; j < pop; ++j) {
            if (gw_on) t.grad_buffer(wi).at(m, j) += gr * x.at(r, m * pop + j);
            if (gx_on) t.grad_buffer(ri).at(r, m * pop + j) += gr * wv.at(m, j);
          }
        }
      }
    });
  }

  /// raw [B x M] -> actions [B x M] within bounds.
  Var squash(Var raw) const { return squash_into_bounds(raw, low_, high_); }

  static Var squash_into_bounds(Var raw, const std::vector<double>& low, const std::vector<double>& high) {
    Var th = diff::tanh(raw);
    const std::size_t na = low.size();
    Tensor out = th.value();
    for (std::size_t r = 0; r < out.rows(); ++r)
      for (std::size_t m = 0; m < na; ++m) {
        const double mid = 0.5 * (low[m] + high[m]), half = 0.5 * (high[m] - low[m]);
        out.at(r, m) = std::clamp(mid + half * th.value().at(r, m), low[m], high[m]);
      }
    const std::size_t ti = th.id();
    std::vector<double> halves(na);
    for (std::size_t m = 0; m < na; ++m) halves[m] = 0.5 * (high[m] - low[m]);
    return th.tape()->record(std::move(out), {th}, [ti, halves](Tape& t, std::size_t self) {
      const Tensor& g = t.grad_buffer(self);
      Tensor& gt = t.grad_buffer(ti);
      const std::size_t na = halves.size();
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t m = 0; m < na; ++m) gt.at(r, m) += g.at(r, m) * halves[m];
    });
  }

 private:
  std::size_t n_action_ = 0;
  std::size_t pop_size_ = 0;
  Parameter weight_;
  Parameter bias_;
  std::vector<double> low_;
  std::vector<double> high_;
};

}  // namespace bptsan::encoding
