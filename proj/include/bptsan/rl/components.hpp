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
#include "bptsan/snn/layers.hpp"

namespace bptsan::rl {

using diff::Tape;
using diff::Var;

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
};

/// Column-stacked minibatch; every tensor has one row per transition.
struct Batch {
  Tensor states, actions, rewards, next_states, dones;
  std::size_t size() const { return states.rows(); }
};

/// Fixed-capacity ring of transitions with uniform sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim)
      : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim) {
    if (capacity == 0) throw ConfigError("rl.buffer_capacity must be >= 1");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  std::size_t cursor() const { return cursor_; }
  std::size_t state_dim() const { return state_dim_; }
  std::size_t action_dim() const { return action_dim_; }

  void push(const Transition& t) {
    if (t.state.size() != state_dim_ || t.next_state.size() != state_dim_ || t.action.size() != action_dim_)
      throw ContractError("ReplayBuffer::push: transition dimensions do not match");
    if (!std::isfinite(t.reward)) throw InputError("ReplayBuffer::push: non-finite reward");
    if (size_ < capacity_) {
      grow_one();
    }
    write(cursor_, t);
    cursor_ = (cursor_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
  }

  /// Transition at a storage slot (0 <= slot < size()).
  Transition at(std::size_t slot) const {
    if (slot >= size_) throw ContractError("ReplayBuffer::at: slot not occupied");
    Transition t;
    t.state.assign(states_.begin() + slot * state_dim_, states_.begin() + (slot + 1) * state_dim_);
    t.action.assign(actions_.begin() + slot * action_dim_, actions_.begin() + (slot + 1) * action_dim_);
    t.reward = rewards_[slot];
    t.next_state.assign(next_states_.begin() + slot * state_dim_, next_states_.begin() + (slot + 1) * state_dim_);
    t.done = dones_[slot] != 0.0;
    return t;
  }

  /// Uniform sample with replacement over occupied slots.
  Batch sample(std::size_t batch_size, Rng& rng) const {
    if (size_ == 0) throw ContractError("ReplayBuffer::sample: buffer is empty");
    if (batch_size == 0) throw ContractError("ReplayBuffer::sample: batch size must be >= 1");
    std::vector<std::size_t> idx(batch_size);
    for (auto& i : idx) i = static_cast<std::size_t>(rng.index(size_));
    return gather(idx);
  }

  Batch gather(std::span<const std::size_t> idx) const {
    const std::size_t n = idx.size();
    Batch b{Tensor::matrix(n, state_dim_), Tensor::matrix(n, action_dim_), Tensor::matrix(n, 1),
            Tensor::matrix(n, state_dim_), Tensor::matrix(n, 1)};
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t s = idx[r];
      std::copy_n(states_.begin() + s * state_dim_, state_dim_, b.states.data.begin() + r * state_dim_);
      std::copy_n(actions_.begin() + s * action_dim_, action_dim_, b.actions.data.begin() + r * action_dim_);
      b.rewards[r] = rewards_[s];
      std::copy_n(next_states_.begin() + s * state_dim_, state_dim_, b.next_states.data.begin() + r * state_dim_);
      b.dones[r] = dones_[s];
    }
    return b;
  }

  /// Raw columns for checkpointing: states, actions, rewards, next_states, dones.
  std::vector<std::vector<double>> columns() const { return {states_, actions_, rewards_, next_states_, dones_}; }

  void restore(std::vector<std::vector<double>> cols, std::size_t size, std::size_t cursor) {
    if (cols.size() != 5 || size > capacity_ || cursor >= capacity_ || cols[2].size() != size ||
        cols[0].size() != size * state_dim_ || cols[1].size() != size * action_dim_ ||
        cols[3].size() != size * state_dim_ || cols[4].size() != size)
      throw CheckpointError("replay buffer columns are inconsistent");
    states_ = std::move(cols[0]);
    actions_ = std::move(cols[1]);
    rewards_ = std::move(cols[2]);
    next_states_ = std::move(cols[3]);
    dones_ = std::move(cols[4]);
    size_ = size;
    cursor_ = cursor;
  }

 private:
  void grow_one() {
    states_.resize(states_.size() + state_dim_);
    actions_.resize(actions_.size() + action_dim_);
    rewards_.push_back(0.0);
    next_states_.resize(next_states_.size() + state_dim_);
    dones_.push_back(0.0);
  }

  void write(std::size_t slot, const Transition& t) {
    std::copy(t.state.begin(), t.state.end(), states_.begin() + slot * state_dim_);
    std::copy(t.action.begin(), t.action.end(), actions_.begin() + slot * action_dim_);
    rewards_[slot] = t.reward;
    std::copy(t.next_state.begin(), t.next_state.end(), next_states_.begin() + slot * state_dim_);
    dones_[slot] = t.done ? 1.0 : 0.0;
  }

  std::size_t capacity_;
  std::size_t state_dim_;
  std::size_t action_dim_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;
  std::vector<double> states_, actions_, rewards_, next_states_, dones_;
};

/// Q(s, a): ReLU MLP over the concatenated state and action.
class CriticMlp {
 public:
  CriticMlp() = default;

  CriticMlp(std::string name, std::size_t state_dim, std::size_t action_dim, const std::vector<std::size_t>& hidden,
            Rng& init)
      : state_dim_(state_dim), action_dim_(action_dim) {
    std::vector<std::size_t> widths{state_dim + action_dim};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(1);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      Tensor w = snn::fan_in_uniform(widths[l + 1], widths[l], widths[l], init);
      Tensor b = snn::fan_in_uniform(1, widths[l + 1], widths[l], init);
      b.shape = {widths[l + 1]};
      const std::string prefix = name + ".l" + std::to_string(l);
      layers_.push_back({Parameter(prefix + ".weight", std::move(w)), Parameter(prefix + ".bias", std::move(b))});
    }
  }

  std::size_t state_dim() const { return state_dim_; }
  std::size_t action_dim() const { return action_dim_; }

  /// [B x N], [B x M] -> [B x 1]
  Var forward(Tape& tape, Var states, Var actions, bool trainable = true) {
    if (states.cols() != state_dim_ || actions.cols() != action_dim_)
      throw ContractError("CriticMlp::forward: input width mismatch");
    Var x = diff::concat_cols(states, actions);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      x = diff::linear(x, tape.param(layers_[l].weight, trainable), tape.param(layers_[l].bias, trainable));
      if (l + 1 < layers_.size()) x = diff::relu(x);
    }
    return x;
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    for (auto& l : layers_) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
    return out;
  }

 private:
  struct Layer {
    Parameter weight;
    Parameter bias;
  };
  std::size_t state_dim_ = 0;
  std::size_t action_dim_ = 0;
  std::vector<Layer> layers_;
};

/// Adaptive moment estimation over a fixed parameter list.
class Adam {
 public:
  struct Options {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam() = default;
  Adam(std::vector<Parameter*> params, Options opt) : params_(std::move(params)), opt_(opt) {
    for (Parameter* p : params_) {
      m_.push_back(p->value.zeros_like());
      v_.push_back(p->value.zeros_like());
    }
  }

  void zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Parameter& p = *params_[k];
      Tensor& m = m_[k];
      Tensor& v = v_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        m[i] = opt_.beta1 * m[i] + (1.0 - opt_.beta1) * g;
        v[i] = opt_.beta2 * v[i] + (1.0 - opt_.beta2) * g * g;
        p.value[i] -= opt_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + opt_.eps);
      }
    }
  }

  std::uint64_t steps() const { return t_; }
  std::uint64_t& step_counter() { return t_; }
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  const std::vector<Parameter*>& params() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  Options opt_;
  std::vector<Tensor> m_, v_;
  std::uint64_t t_ = 0;
};

/// target <- (1 - rate) * target + rate * online, parameter by parameter.
inline void polyak_update(const std::vector<Parameter*>& target, const std::vector<Parameter*>& online, double rate) {
  if (target.size() != online.size()) throw ContractError("polyak_update: parameter lists differ");
  for (std::size_t k = 0; k < target.size(); ++k) {
    Tensor& t = target[k]->value;
    const Tensor& o = online[k]->value;
    if (t.size() != o.size()) throw ContractError("polyak_update: parameter shapes differ");
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = (1.0 - rate) * t[i] + rate * o[i];
  }
}

/// Bellman target r + gamma * (1 - done) * next_value, elementwise over rows.
inline Tensor bellman_target(const Tensor& rewards, const Tensor& dones, const Tensor& next_value, double gamma) {
  Tensor y = rewards;
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = dones[i] != 0.0 ? rewards[i] : rewards[i] + gamma * next_value[i];
  return y;
}

}  // namespace bptsan::rl
