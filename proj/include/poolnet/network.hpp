// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poolnet/layers.hpp"
#include "poolnet/markers.hpp"

namespace poolnet {

enum class BranchMode { hybrid, cnn_only, lstm_only };

std::string to_string(BranchMode mode);
BranchMode parse_branch_mode(const std::string& name);

/// Architecture hyper-parameters. Zero-valued widths resolve to embedding_dim.
struct NetworkConfig {
  int vocab_size = 0;
  int num_classes = 0;
  int embedding_dim = 100;
  int window = 3;
  int conv_filters = 0;
  int lstm_hidden = 0;
  int hidden_dim = 0;
  PoolOp pooling = PoolOp::max;
  BranchMode branch_mode = BranchMode::hybrid;
  double drop_rate = 0.25;
  bool shared_embedding = true;
  LstmReadout lstm_readout = LstmReadout::final_state;
  double init_scale = 0.05;

  int resolved_conv_filters() const { return conv_filters > 0 ? conv_filters : embedding_dim; }
  int resolved_lstm_hidden() const { return lstm_hidden > 0 ? lstm_hidden : embedding_dim; }
  int resolved_hidden_dim() const { return hidden_dim > 0 ? hidden_dim : embedding_dim; }
  double keep_prob() const { return 1.0 - drop_rate; }
  bool uses_cnn() const { return branch_mode != BranchMode::lstm_only; }
  bool uses_lstm() const { return branch_mode != BranchMode::cnn_only; }

  /// Throws ArgumentError on inconsistent values.
  void validate() const;
};

struct Example {
  std::vector<int> input;
  int label = 0;
};

class HybridNetwork;

/// Intermediates of one forward pass, consumed by network_backward.
struct ForwardCache {
  const HybridNetwork* owner = nullptr;
  Mode mode = Mode::test;
  std::vector<int> input;   // encoded value as given
  std::vector<int> padded;  // input right-padded with EOS to the conv window

  Sequence cnn_embedded, lstm_embedded;
  ConvCache conv;
  Array1 conv_out, cnn_hidden_mask, cnn_hidden_pre, cnn_branch;
  LstmCache lstm;
  Array1 lstm_out, rnn_hidden_mask, rnn_hidden_pre, rnn_branch;
  Array1 pooled, probs;
};

/// Character-level classifier: embedding -> {conv max-over-time, LSTM} ->
/// dropout hidden layers with ReLU -> pooling combiner -> softmax.
///
/// Parameters of an absent branch are empty arrays and are omitted from params().
class HybridNetwork {
 public:
  NetworkConfig config;
  EmbeddingTable embedding;       // feeds the CNN branch, and the LSTM branch when shared
  EmbeddingTable lstm_embedding;  // only populated when shared_embedding is false
  ConvMaxOverTime conv;
  DropoutHidden cnn_hidden;
  LstmLayer lstm;
  DropoutHidden rnn_hidden;
  PoolingCombiner combiner;
  SoftmaxOutput output;

  static HybridNetwork create(const NetworkConfig& config, Rng& rng);

  /// Same shapes, all parameters zero. Used for gradient accumulators and Adam moments.
  HybridNetwork zeros_like() const;

  std::vector<ParamView> params();
  std::vector<ConstParamView> params() const;

  /// Output dimension of the combiner (the softmax input size).
  Eigen::Index feature_dim() const;

  // Model interface used by the generic training loop.
  double accumulate_gradient(const Example& example, HybridNetwork& grad, Rng& rng) const;
  Array1 predict_proba(std::span<const int> input) const;
  int predict(std::span<const int> input) const;
};

/// Pads an encoded value on the right with `eos` until it spans `window` indices.
std::vector<int> pad_to_window(std::span<const int> indices, int window, int eos);

Array1 network_forward(const HybridNetwork& net, std::span<const int> indices, Mode mode, Rng* rng,
                       ForwardCache* cache = nullptr);

/// Accumulates the gradient of -log P(true_class | input) into `grad`.
/// The cache must come from a train-mode forward over this same network.
void network_backward(const HybridNetwork& net, const ForwardCache& cache, int true_class, HybridNetwork& grad);

}  // namespace poolnet
