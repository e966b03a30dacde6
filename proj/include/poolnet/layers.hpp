// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "poolnet/numerics.hpp"

namespace poolnet {

enum class Mode { train, test };

// ---------------------------------------------------------------------------
// Character embedding

/// Embedding matrix of shape dim x vocab_size; column i is the vector of character i.
struct EmbeddingTable {
  Array2 weights;

  Eigen::Index dim() const { return weights.rows(); }
  Eigen::Index vocab_size() const { return weights.cols(); }

  static EmbeddingTable create(Rng& rng, Eigen::Index dim, Eigen::Index vocab_size, double scale);
  EmbeddingTable zeros_like() const;
};

/// Looks up every index; result column j is weights.col(indices[j]).
Sequence embed(const EmbeddingTable& table, std::span<const int> indices);

/// Scatters d_seq columns back into the rows of `grad` selected by `indices`.
void embed_backward(std::span<const int> indices, const Sequence& d_seq, EmbeddingTable& grad);

// ---------------------------------------------------------------------------
// Convolution with max-over-time pooling

/// Filter row o holds the weights of output channel o over a window of
/// `window` consecutive embeddings, laid out as [pos 0 coords..., pos 1 coords...].
struct ConvMaxOverTime {
  int window = 3;
  Array2 filter;  // out_dim x (window * in_dim)
  Array1 bias;    // out_dim

  Eigen::Index in_dim() const { return window ? filter.cols() / window : 0; }
  Eigen::Index out_dim() const { return filter.rows(); }

  static ConvMaxOverTime create(Rng& rng, int window, Eigen::Index in_dim, Eigen::Index out_dim,
                                double scale);
  ConvMaxOverTime zeros_like() const;
};

struct ConvCache {
  Eigen::VectorXi argmax;  // winning window per output channel
};

/// All window responses v_i = F * e[i:i+k] + b, one column per window (n - k + 1 columns).
Eigen::MatrixXd conv_windows(const ConvMaxOverTime& layer, const Sequence& e);

/// Element-wise maximum over conv_windows(); throws UsageError if the
/// sequence is shorter than the window.
Array1 conv_max_forward(const ConvMaxOverTime& layer, const Sequence& e, ConvCache* cache = nullptr);

/// Routes each channel's gradient to its argmax window only. Accumulates into
/// `grad` and returns d e.
Sequence conv_max_backward(const ConvMaxOverTime& layer, const Sequence& e, const ConvCache& cache,
                           const Array1& d_out, ConvMaxOverTime& grad);

// ---------------------------------------------------------------------------
// LSTM (output gate independent of c_t)

enum class LstmReadout { final_state, mean_over_time };

struct LstmLayer {
  Array2 w_xi, w_hi, w_xf, w_hf, w_xc, w_hc, w_xo, w_ho;
  Array1 b_i, b_f, b_c, b_o;

  Eigen::Index in_dim() const { return w_xi.cols(); }
  Eigen::Index hidden_dim() const { return w_xi.rows(); }

  static LstmLayer create(Rng& rng, Eigen::Index in_dim, Eigen::Index hidden_dim, double scale);
  LstmLayer zeros_like() const;
};

/// Per-step activations; column t belongs to time step t.
struct LstmCache {
  Eigen::MatrixXd input_gate, forget_gate, candidate, output_gate, cell, hidden;
};

/// Runs the recurrence from zero state and returns h_n (or the mean of all h_t).
Array1 lstm_forward(const LstmLayer& layer, const Sequence& x, LstmReadout readout = LstmReadout::final_state,
                    LstmCache* cache = nullptr);

/// Backpropagation through time. Accumulates into `grad` and returns d x.
Sequence lstm_backward(const LstmLayer& layer, const Sequence& x, const LstmCache& cache,
                       LstmReadout readout, const Array1& d_out, LstmLayer& grad);

// ---------------------------------------------------------------------------
// Dense hidden layer with dropout on its input

/// y = W (r * z) + b with r ~ Bernoulli(keep_prob) while training, and
/// y = (keep_prob W) z + b at test time.
struct DropoutHidden {
  Array2 weights;  // out_dim x in_dim
  Array1 bias;
  double keep_prob = 1.0;

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }

  static DropoutHidden create(Rng& rng, Eigen::Index in_dim, Eigen::Index out_dim, double keep_prob,
                              double scale);
  DropoutHidden zeros_like() const;
};

struct DropoutOutput {
  Array1 y;
  Array1 mask;
};

/// Draws a fresh mask from `rng` in train mode; `rng` may be null in test mode
/// or when keep_prob == 1.
DropoutOutput dropout_forward(const DropoutHidden& layer, const Array1& z, Mode mode, Rng* rng);

/// Train-mode forward with a caller-supplied mask.
Array1 dropout_forward_masked(const DropoutHidden& layer, const Array1& z, const Array1& mask);

/// Accumulates into `grad` and returns d z (zero on dropped coordinates).
Array1 dropout_backward(const DropoutHidden& layer, const Array1& z, const Array1& mask,
                        const Array1& d_y, DropoutHidden& grad);

// ---------------------------------------------------------------------------
// Pooling combiner

enum class PoolOp { max, sum, avg, mul, outer, concat };

std::string to_string(PoolOp op);
PoolOp parse_pool_op(const std::string& name);

struct PoolingCombiner {
  PoolOp op = PoolOp::max;

  Eigen::Index output_dim(Eigen::Index u_dim, Eigen::Index v_dim) const;
};

Array1 combine(const PoolingCombiner& combiner, const Array1& u, const Array1& v);

/// Returns (d u, d v). For max, ties send the gradient to u.
std::pair<Array1, Array1> combine_backward(const PoolingCombiner& combiner, const Array1& u,
                                           const Array1& v, const Array1& d_y);

// ---------------------------------------------------------------------------
// Softmax output

struct SoftmaxOutput {
  Array2 weights;  // num_classes x in_dim
  Array1 bias;

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index num_classes() const { return weights.rows(); }

  static SoftmaxOutput create(Rng& rng, Eigen::Index in_dim, Eigen::Index num_classes, double scale);
  SoftmaxOutput zeros_like() const;
};

/// Max-shifted softmax.
Array1 softmax(const Array1& logits);

Array1 softmax_forward(const SoftmaxOutput& out, const Array1& x);

/// Gradient of -log probs[true_class]: logits receive probs - onehot.
/// Accumulates into `grad` and returns d x.
Array1 softmax_backward(const SoftmaxOutput& out, const Array1& x, const Array1& probs, int true_class,
                        SoftmaxOutput& grad);

}  // namespace poolnet
