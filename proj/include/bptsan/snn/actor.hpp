#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bptsan/diffcore/ops.hpp"
#include "bptsan/encoding/encoding.hpp"
#include "bptsan/errors.hpp"
#include "bptsan/random.hpp"
#include "bptsan/snn/layers.hpp"

namespace bptsan::snn {

/// Actor families compared in the ablation matrix.
enum class Variant { aan, san, bpt_san, bpt_san_no_ndt, bpt_san_no_li };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::aan: return "aan";
    case Variant::san: return "san";
    case Variant::bpt_san: return "bpt-san";
    case Variant::bpt_san_no_ndt: return "bpt-san-no-ndt";
    case Variant::bpt_san_no_li: return "bpt-san-no-li";
  }
  return "?";
}

inline std::optional<Variant> parse_variant(std::string_view s) {
  for (Variant v : {Variant::aan, Variant::san, Variant::bpt_san, Variant::bpt_san_no_ndt, Variant::bpt_san_no_li})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

inline bool uses_dendrites(Variant v) { return v == Variant::bpt_san || v == Variant::bpt_san_no_li; }
inline bool uses_lateral(Variant v) { return v == Variant::bpt_san || v == Variant::bpt_san_no_ndt; }

struct ActorConfig {
  Variant variant = Variant::bpt_san;
  std::vector<std::size_t> hidden{256, 256};
  std::size_t time_window = 5;
  std::size_t branches = 2;
  std::size_t lateral_radius = 2;
  bool output_topology = true;  // dendrites/lateral also on the output layer
  LifConfig lif;
  encoding::SpikeCoding coding = encoding::SpikeCoding::deterministic;
  std::size_t pop_size = 10;
  bool encoder_trainable = true;

  void validate() const {
    if (hidden.empty()) throw ConfigError("snn.hidden must list at least one layer");
    for (std::size_t h : hidden)
      if (h == 0) throw ConfigError("snn.hidden entries must be >= 1");
    if (time_window == 0) throw ConfigError("snn.time_window must be >= 1");
    if (branches == 0) throw ConfigError("snn.d must be >= 1");
    if (pop_size == 0) throw ConfigError("encoder.pop_size must be >= 1");
    lif.validate();
  }
};

/// Dimensions and bounds the actor is built for.
struct ActorShape {
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  std::vector<double> state_low, state_high;    // expected observation range (encoder init)
  std::vector<double> action_low, action_high;
};

/// Optional per-layer spike record of one forward pass (batch row 0).
struct ForwardTrace {
  encoding::SpikeTrain input;
  std::vector<encoding::SpikeTrain> layers;  // hidden layers then output layer
};

/// Policy network. For spiking variants: population encoder -> spike
/// generator -> stacked LIF layers -> rate decoder. For the artificial
/// variant (aan): ReLU MLP of the same hidden sizes. Both expose the same
/// pre-squash output, which the agents turn into bounded actions.
class ActorNetwork {
 public:
  ActorNetwork() = default;

  ActorNetwork(const ActorConfig& cfg, const ActorShape& shape, std::uint64_t init_seed, std::uint64_t mask_seed)
      : cfg_(cfg), shape_(shape) {
    cfg_.validate();
    if (shape.state_dim == 0 || shape.action_dim == 0) throw ConfigError("actor needs state_dim, action_dim >= 1");
    if (shape.action_low.size() != shape.action_dim || shape.action_high.size() != shape.action_dim)
      throw ConfigError("action bounds length mismatch");
    Rng init(init_seed);
    if (cfg_.variant == Variant::aan) {
      build_mlp(init);
    } else {
      build_spiking(init, mask_seed);
    }
  }

  const ActorConfig& config() const { return cfg_; }
  const ActorShape& shape() const { return shape_; }
  Variant variant() const { return cfg_.variant; }
  bool spiking() const { return cfg_.variant != Variant::aan; }
  bool needs_rng() const { return spiking() && cfg_.coding == encoding::SpikeCoding::poisson; }

  /// Pre-squash output [B x M] for a batch of states [B x N]. `rng` supplies
  /// Poisson draws and may be null under deterministic coding. With
  /// trainable = false the parameters enter the tape as constants.
  Var forward_raw(Tape& tape, const Tensor& states, Rng* rng, bool trainable = true, ForwardTrace* trace = nullptr) {
    if (states.cols() != shape_.state_dim)
      throw ConfigError("state width " + std::to_string(states.cols()) + " does not match actor input " +
                        std::to_string(shape_.state_dim));
    if (!spiking()) return forward_mlp(tape, states, trainable);
    return forward_spiking(tape, states, rng, trainable, trace);
  }

  /// Bounded actions from pre-squash values.
  Var squash(Var raw) const {
    return encoding::ActionDecoder::squash_into_bounds(raw, shape_.action_low, shape_.action_high);
  }

  /// Single-state deterministic action (no exploration).
  std::vector<double> act(std::span<const double> state, Rng* rng, ForwardTrace* trace = nullptr) {
    Tape tape;
    Tensor s = Tensor::matrix(1, state.size(), std::vector<double>(state.begin(), state.end()));
    Var a = squash(forward_raw(tape, s, rng, false, trace));
    return a.value().data;
  }

  /// All trainable parameters in a fixed order (checkpoint and optimizer order).
  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    if (!spiking()) {
      for (auto& l : mlp_) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
      }
      return out;
    }
    if (encoder_.trainable()) {
      out.push_back(&encoder_.mean());
      out.push_back(&encoder_.stddev());
    }
    for (auto& l : layers_) {
      out.push_back(&l.inter.weight());
      if (l.lateral) out.push_back(&l.lateral->weight());
    }
    out.push_back(&decoder_.weight());
    out.push_back(&decoder_.bias());
    return out;
  }

  std::vector<const Parameter*> parameters() const {
    std::vector<const Parameter*> out;
    for (Parameter* p : const_cast<ActorNetwork*>(this)->parameters()) out.push_back(p);
    return out;
  }

  /// Mask seed of every dendritic layer (hidden layers then output).
  std::vector<std::uint64_t> mask_seeds() const {
    std::vector<std::uint64_t> seeds;
    for (const auto& l : layers_)
      if (l.inter.mask()) seeds.push_back(l.inter.mask()->seed);
    return seeds;
  }

  void restore_mask_seeds(std::span<const std::uint64_t> seeds) {
    std::size_t k = 0;
    for (auto& l : layers_) {
      if (!l.inter.mask()) continue;
      if (k >= seeds.size()) throw CheckpointError("missing mask seed");
      l.inter.rebuild_mask(seeds[k++]);
    }
    if (k != seeds.size()) throw CheckpointError("mask seed count does not match the network");
  }

  /// Re-imposes parameter constraints after an optimizer step.
  void enforce_constraints() {
    if (spiking()) encoder_.enforce_constraints();
  }

  encoding::PopulationEncoder& encoder() { return encoder_; }
  encoding::ActionDecoder& decoder() { return decoder_; }
  std::size_t num_layers() const { return layers_.size(); }
  InterConnection& inter(std::size_t l) { return layers_.at(l).inter; }
  std::optional<LateralConnection>& lateral(std::size_t l) { return layers_.at(l).lateral; }

 private:
  struct SpikingLayer {
    InterConnection inter;
    std::optional<LateralConnection> lateral;
  };

  struct MlpLayer {
    Parameter weight;
    Parameter bias;
  };

  void build_spiking(Rng& init, std::uint64_t mask_seed) {
    encoder_ = encoding::PopulationEncoder::evenly_spaced(shape_.state_low, shape_.state_high, cfg_.pop_size,
                                                          cfg_.encoder_trainable);
    if (encoder_.state_dim() != shape_.state_dim) throw ConfigError("encoder range length must equal state_dim");
    std::vector<std::size_t> widths{encoder_.width()};
    for (std::size_t h : cfg_.hidden) widths.push_back(h);
    widths.push_back(shape_.action_dim * cfg_.pop_size);
    const bool dendrites = uses_dendrites(cfg_.variant);
    const bool lateral = uses_lateral(cfg_.variant);
    const std::size_t n_layers = widths.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
      const bool is_output = l + 1 == n_layers;
      const std::string name = is_output ? "output" : "hidden" + std::to_string(l);
      const std::size_t n_in = widths[l], n_out = widths[l + 1];
      Tensor w = fan_in_uniform(n_out, n_in, n_in, init);
      SpikingLayer layer;
      const bool topo = !is_output || cfg_.output_topology;
      if (dendrites && topo) {
        layer.inter = InterConnection::dendritic(name + ".weight", std::move(w), derive_seed(mask_seed, Stream::mask, l),
                                                 cfg_.branches);
      } else {
        layer.inter = InterConnection::dense(name + ".weight", std::move(w));
      }
      if (lateral && topo) layer.lateral.emplace(name + ".lateral", n_out, cfg_.lateral_radius);
      layers_.push_back(std::move(layer));
    }
    decoder_ = encoding::ActionDecoder(shape_.action_dim, cfg_.pop_size, shape_.action_low, shape_.action_high);
    decoder_.weight().value = fan_in_uniform(shape_.action_dim, cfg_.pop_size, cfg_.pop_size, init);
  }

  void build_mlp(Rng& init) {
    std::vector<std::size_t> widths{shape_.state_dim};
    for (std::size_t h : cfg_.hidden) widths.push_back(h);
    widths.push_back(shape_.action_dim);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const std::string name = l + 2 == widths.size() ? "output" : "hidden" + std::to_string(l);
      Tensor w = fan_in_uniform(widths[l + 1], widths[l], widths[l], init);
      Tensor b = fan_in_uniform(1, widths[l + 1], widths[l], init);
      b.shape = {widths[l + 1]};
      mlp_.push_back({Parameter(name + ".weight", std::move(w)), Parameter(name + ".bias", std::move(b))});
    }
  }

  Var forward_mlp(Tape& tape, const Tensor& states, bool trainable) {
    Var x = tape.constant(states);
    for (std::size_t l = 0; l < mlp_.size(); ++l) {
      x = diff::linear(x, tape.param(mlp_[l].weight, trainable), tape.param(mlp_[l].bias, trainable));
      if (l + 1 < mlp_.size()) x = diff::relu(x);
    }
    return x;
  }

  Var forward_spiking(Tape& tape, const Tensor& states, Rng* rng, bool trainable, ForwardTrace* trace) {
    const std::size_t batch = states.rows();
    Var strengths = encoder_.encode(tape, states);
    if (!trainable && encoder_.trainable()) strengths = tape.constant(strengths.value());
    encoding::SpikeGenerator generator(cfg_.coding, strengths, rng);

    std::vector<InterConnection::Bound> inter;
    std::vector<Var> lateral_w;
    std::vector<LifState> state;
    for (auto& l : layers_) {
      inter.push_back(l.inter.bind(tape, trainable));
      lateral_w.push_back(l.lateral ? tape.param(l.lateral->weight(), trainable) : Var{});
      state.push_back(lif_zero_state(tape, batch, l.inter.n_out()));
    }
    if (trace) {
      trace->input = encoding::SpikeTrain(cfg_.time_window, encoder_.width());
      trace->layers.clear();
      for (auto& l : layers_) trace->layers.emplace_back(cfg_.time_window, l.inter.n_out());
    }

    Var rate_sum;
    for (std::size_t tau = 1; tau <= cfg_.time_window; ++tau) {
      Var spikes = generator.next(tau);
      if (trace) record_row(trace->input, tau - 1, spikes.value());
      for (std::size_t l = 0; l < layers_.size(); ++l) {
        Var current_in = InterConnection::apply(inter[l], spikes);
        std::optional<Var> lateral_in;
        if (layers_[l].lateral) lateral_in = layers_[l].lateral->apply(lateral_w[l], state[l].spike);
        state[l] = lif_step(state[l], current_in, lateral_in, cfg_.lif);
        spikes = state[l].spike;
        if (trace) record_row(trace->layers[l], tau - 1, spikes.value());
      }
      rate_sum = rate_sum.valid() ? diff::add(rate_sum, spikes) : spikes;
    }
    Var rates = diff::divide(rate_sum, static_cast<double>(cfg_.time_window));
    return decoder_.raw(tape, rates, trainable);
  }

  static void record_row(encoding::SpikeTrain& train, std::size_t step, const Tensor& spikes) {
    for (std::size_t k = 0; k < train.width; ++k) train.set(step, k, spikes.at(0, k) > 0.5);
  }

  ActorConfig cfg_;
  ActorShape shape_;
  encoding::PopulationEncoder encoder_;
  std::vector<SpikingLayer> layers_;
  encoding::ActionDecoder decoder_;
  std::vector<MlpLayer> mlp_;
};

}  // namespace bptsan::snn
