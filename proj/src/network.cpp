// SPDX-License-Identifier: Apache-2.0
#include "poolnet/network.hpp"

#include <cmath>
#include <tuple>

#include "poolnet/training.hpp"

namespace poolnet {

std::string to_string(BranchMode mode) {
  switch (mode) {
    case BranchMode::hybrid: return "hybrid";
    case BranchMode::cnn_only: return "cnn_only";
    case BranchMode::lstm_only: return "lstm_only";
  }
  return "unknown";
}

BranchMode parse_branch_mode(const std::string& name) {
  for (BranchMode m : {BranchMode::hybrid, BranchMode::cnn_only, BranchMode::lstm_only}) {
    if (to_string(m) == name) return m;
  }
  throw ArgumentError("unknown branch mode '" + name + "'");
}

void NetworkConfig::validate() const {
  if (vocab_size < kReservedIndices) throw ArgumentError("network: vocabulary lacks the reserved markers");
  if (num_classes < 2) throw ArgumentError("network: at least two classes are required");
  if (embedding_dim < 1 || window < 1) throw ArgumentError("network: embedding size and window must be positive");
  if (conv_filters < 0 || lstm_hidden < 0 || hidden_dim < 0) throw ArgumentError("network: negative width");
  if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw ArgumentError("network: drop rate must lie in [0, 1)");
  if (!(init_scale > 0.0)) throw ArgumentError("network: init scale must be positive");
}

HybridNetwork HybridNetwork::create(const NetworkConfig& config, Rng& rng) {
  config.validate();
  HybridNetwork net;
  net.config = config;
  const double s = config.init_scale;
  const int d = config.embedding_dim;
  const int hidden = config.resolved_hidden_dim();

  // Construction order fixes the draw order and therefore the checkpoint bytes.
  net.embedding = EmbeddingTable::create(rng, d, config.vocab_size, s);
  if (config.uses_lstm() && !config.shared_embedding) {
    net.lstm_embedding = EmbeddingTable::create(rng, d, config.vocab_size, s);
  }
  if (config.uses_cnn()) {
    net.conv = ConvMaxOverTime::create(rng, config.window, d, config.resolved_conv_filters(), s);
    net.cnn_hidden = DropoutHidden::create(rng, config.resolved_conv_filters(), hidden, config.keep_prob(), s);
  } else {
    net.conv.window = config.window;
  }
  if (config.uses_lstm()) {
    net.lstm = LstmLayer::create(rng, d, config.resolved_lstm_hidden(), s);
    net.rnn_hidden = DropoutHidden::create(rng, config.resolved_lstm_hidden(), hidden, config.keep_prob(), s);
  }
  net.combiner.op = config.pooling;
  net.output = SoftmaxOutput::create(rng, net.feature_dim(), config.num_classes, s);
  return net;
}

HybridNetwork HybridNetwork::zeros_like() const {
  HybridNetwork z;
  z.config = config;
  z.embedding = embedding.zeros_like();
  z.lstm_embedding = lstm_embedding.zeros_like();
  z.conv = conv.zeros_like();
  z.cnn_hidden = cnn_hidden.zeros_like();
  z.lstm = lstm.zeros_like();
  z.rnn_hidden = rnn_hidden.zeros_like();
  z.combiner = combiner;
  z.output = output.zeros_like();
  return z;
}

namespace {

// One listing of every parameter array serves both constness variants.
template <typename Net, typename View>
std::vector<View> collect_params(Net& net) {
  std::vector<View> out;
  auto add = [&out](const char* name, auto& array) {
    if (array.size() > 0) out.push_back(view_of(name, array));
  };
  add("embedding", net.embedding.weights);
  add("lstm_embedding", net.lstm_embedding.weights);
  add("conv.filter", net.conv.filter);
  add("conv.bias", net.conv.bias);
  add("cnn_hidden.weights", net.cnn_hidden.weights);
  add("cnn_hidden.bias", net.cnn_hidden.bias);
  add("lstm.w_xi", net.lstm.w_xi);
  add("lstm.w_hi", net.lstm.w_hi);
  add("lstm.w_xf", net.lstm.w_xf);
  add("lstm.w_hf", net.lstm.w_hf);
  add("lstm.w_xc", net.lstm.w_xc);
  add("lstm.w_hc", net.lstm.w_hc);
  add("lstm.w_xo", net.lstm.w_xo);
  add("lstm.w_ho", net.lstm.w_ho);
  add("lstm.b_i", net.lstm.b_i);
  add("lstm.b_f", net.lstm.b_f);
  add("lstm.b_c", net.lstm.b_c);
  add("lstm.b_o", net.lstm.b_o);
  add("rnn_hidden.weights", net.rnn_hidden.weights);
  add("rnn_hidden.bias", net.rnn_hidden.bias);
  add("output.weights", net.output.weights);
  add("output.bias", net.output.bias);
  return out;
}

}  // namespace

std::vector<ParamView> HybridNetwork::params() { return collect_params<HybridNetwork, ParamView>(*this); }

std::vector<ConstParamView> HybridNetwork::params() const {
  return collect_params<const HybridNetwork, ConstParamView>(*this);
}

Eigen::Index HybridNetwork::feature_dim() const {
  const Eigen::Index hidden = config.resolved_hidden_dim();
  if (config.branch_mode != BranchMode::hybrid) return hidden;
  return combiner.output_dim(hidden, hidden);
}

std::vector<int> pad_to_window(std::span<const int> indices, int window, int eos) {
  std::vector<int> out(indices.begin(), indices.end());
  while (out.size() < static_cast<std::size_t>(window)) out.push_back(eos);
  return out;
}

Array1 network_forward(const HybridNetwork& net, std::span<const int> indices, Mode mode, Rng* rng,
                       ForwardCache* cache) {
  if (indices.empty()) throw ArgumentError("network: empty input (expected at least BOS and EOS)");
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  const NetworkConfig& cfg = net.config;
  c.owner = nullptr;
  c.mode = mode;
  c.input.assign(indices.begin(), indices.end());
  c.padded = pad_to_window(indices, cfg.uses_cnn() ? cfg.window : 1, kEosIndex);

  // With a shared table the LSTM reads the unpadded prefix of the CNN embedding.
  c.cnn_embedded = embed(net.embedding, c.padded);
  if (cfg.uses_lstm()) {
    c.lstm_embedded = cfg.shared_embedding ? Sequence(c.cnn_embedded.leftCols(c.input.size()))
                                           : embed(net.lstm_embedding, c.input);
  }

  if (cfg.uses_cnn()) {
    c.conv_out = conv_max_forward(net.conv, c.cnn_embedded, &c.conv);
    DropoutOutput h = dropout_forward(net.cnn_hidden, c.conv_out, mode, rng);
    c.cnn_hidden_pre = std::move(h.y);
    c.cnn_hidden_mask = std::move(h.mask);
    c.cnn_branch = relu(c.cnn_hidden_pre);
  }
  if (cfg.uses_lstm()) {
    c.lstm_out = lstm_forward(net.lstm, c.lstm_embedded, cfg.lstm_readout, &c.lstm);
    DropoutOutput h = dropout_forward(net.rnn_hidden, c.lstm_out, mode, rng);
    c.rnn_hidden_pre = std::move(h.y);
    c.rnn_hidden_mask = std::move(h.mask);
    c.rnn_branch = relu(c.rnn_hidden_pre);
  }

  switch (cfg.branch_mode) {
    case BranchMode::hybrid: c.pooled = combine(net.combiner, c.cnn_branch, c.rnn_branch); break;
    case BranchMode::cnn_only: c.pooled = c.cnn_branch; break;
    case BranchMode::lstm_only: c.pooled = c.rnn_branch; break;
  }
  c.probs = softmax_forward(net.output, c.pooled);
  c.owner = &net;
  return c.probs;
}

namespace {

Array1 relu_backward(const Array1& pre, const Array1& d_out) {
  return (pre.array() > 0.0).select(d_out, 0.0);
}

}  // namespace

void network_backward(const HybridNetwork& net, const ForwardCache& c, int true_class, HybridNetwork& grad) {
  if (c.owner != &net) throw UsageError("network backward: cache is missing or belongs to another network");
  if (c.mode != Mode::train) throw UsageError("network backward: cache must come from a train-mode forward");
  const NetworkConfig& cfg = net.config;

  const Array1 d_pooled = softmax_backward(net.output, c.pooled, c.probs, true_class, grad.output);
  Array1 d_cnn, d_rnn;
  switch (cfg.branch_mode) {
    case BranchMode::hybrid:
      std::tie(d_cnn, d_rnn) = combine_backward(net.combiner, c.cnn_branch, c.rnn_branch, d_pooled);
      break;
    case BranchMode::cnn_only: d_cnn = d_pooled; break;
    case BranchMode::lstm_only: d_rnn = d_pooled; break;
  }

  Sequence d_embedded = Sequence::Zero(c.cnn_embedded.rows(), c.cnn_embedded.cols());
  if (cfg.uses_cnn()) {
    const Array1 d_pre = relu_backward(c.cnn_hidden_pre, d_cnn);
    const Array1 d_conv = dropout_backward(net.cnn_hidden, c.conv_out, c.cnn_hidden_mask, d_pre, grad.cnn_hidden);
    d_embedded += conv_max_backward(net.conv, c.cnn_embedded, c.conv, d_conv, grad.conv);
  }
  if (cfg.uses_lstm()) {
    const Array1 d_pre = relu_backward(c.rnn_hidden_pre, d_rnn);
    const Array1 d_lstm = dropout_backward(net.rnn_hidden, c.lstm_out, c.rnn_hidden_mask, d_pre, grad.rnn_hidden);
    const Sequence d_x = lstm_backward(net.lstm, c.lstm_embedded, c.lstm, cfg.lstm_readout, d_lstm, grad.lstm);
    if (cfg.shared_embedding) {
      d_embedded.leftCols(d_x.cols()) += d_x;
    } else {
      embed_backward(c.input, d_x, grad.lstm_embedding);
    }
  }
  embed_backward(c.padded, d_embedded, grad.embedding);
}

double HybridNetwork::accumulate_gradient(const Example& example, HybridNetwork& grad, Rng& rng) const {
  ForwardCache cache;
  const Array1 probs = network_forward(*this, example.input, Mode::train, &rng, &cache);
  network_backward(*this, cache, example.label, grad);
  return nll_loss(probs, example.label);
}

Array1 HybridNetwork::predict_proba(std::span<const int> input) const {
  return network_forward(*this, input, Mode::test, nullptr);
}

int HybridNetwork::predict(std::span<const int> input) const {
  Eigen::Index best;
  predict_proba(input).maxCoeff(&best);
  return static_cast<int>(best);
}

}  // namespace poolnet
