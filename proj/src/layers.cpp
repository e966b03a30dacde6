// SPDX-License-Identifier: Apache-2.0
#include "poolnet/layers.hpp"

#include <algorithm>
#include <cmath>

namespace poolnet {

namespace {

Array2 zeros_as(const Array2& m) { return Array2::Zero(m.rows(), m.cols()); }
Array1 zeros_as(const Array1& v) { return Array1::Zero(v.size()); }

Eigen::Map<const Array1> window_at(const Sequence& e, Eigen::Index start, int window) {
  return {e.col(start).data(), e.rows() * window};
}

}  // namespace

// ---------------------------------------------------------------------------

EmbeddingTable EmbeddingTable::create(Rng& rng, Eigen::Index dim, Eigen::Index vocab_size,
                                      double scale) {
  return {init_uniform(rng, dim, vocab_size, scale)};
}

EmbeddingTable EmbeddingTable::zeros_like() const { return {zeros_as(weights)}; }

Sequence embed(const EmbeddingTable& table, std::span<const int> indices) {
  Sequence out(table.dim(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const int idx = indices[j];
    if (idx < 0 || idx >= table.vocab_size()) {
      throw VocabularyError("embed: index " + std::to_string(idx) + " outside vocabulary of size " +
                            std::to_string(table.vocab_size()));
    }
    out.col(static_cast<Eigen::Index>(j)) = table.weights.col(idx);
  }
  return out;
}

void embed_backward(std::span<const int> indices, const Sequence& d_seq, EmbeddingTable& grad) {
  if (d_seq.cols() != static_cast<Eigen::Index>(indices.size()) || d_seq.rows() != grad.dim()) {
    throw ShapeError("embed_backward: gradient does not match the embedded sequence");
  }
  for (std::size_t j = 0; j < indices.size(); ++j) {
    grad.weights.col(indices[j]) += d_seq.col(static_cast<Eigen::Index>(j));
  }
}

// ---------------------------------------------------------------------------

ConvMaxOverTime ConvMaxOverTime::create(Rng& rng, int window, Eigen::Index in_dim, Eigen::Index out_dim,
                                        double scale) {
  if (window < 1) throw ArgumentError("conv: window must be at least 1");
  ConvMaxOverTime layer;
  layer.window = window;
  layer.filter = init_uniform(rng, out_dim, window * in_dim, scale);
  layer.bias = init_uniform(rng, out_dim, scale);
  return layer;
}

ConvMaxOverTime ConvMaxOverTime::zeros_like() const { return {window, zeros_as(filter), zeros_as(bias)}; }

Eigen::MatrixXd conv_windows(const ConvMaxOverTime& layer, const Sequence& e) {
  if (e.rows() != layer.in_dim()) throw ShapeError("conv: embedding size does not match filter");
  const Eigen::Index n = e.cols();
  if (n < layer.window) {
    throw UsageError("conv: sequence of length " + std::to_string(n) + " is shorter than window " +
                     std::to_string(layer.window) + " (padding rule violated)");
  }
  const Eigen::Index count = n - (layer.window - 1);
  Eigen::MatrixXd v(layer.out_dim(), count);
  for (Eigen::Index i = 0; i < count; ++i) {
    v.col(i).noalias() = layer.filter * window_at(e, i, layer.window);
    v.col(i) += layer.bias;
  }
  return v;
}

Array1 conv_max_forward(const ConvMaxOverTime& layer, const Sequence& e, ConvCache* cache) {
  const Eigen::MatrixXd v = conv_windows(layer, e);
  Array1 out(v.rows());
  Eigen::VectorXi argmax(v.rows());
  for (Eigen::Index o = 0; o < v.rows(); ++o) {
    Eigen::Index best;
    out[o] = v.row(o).maxCoeff(&best);
    argmax[o] = static_cast<int>(best);
  }
  if (cache) cache->argmax = std::move(argmax);
  return out;
}

Sequence conv_max_backward(const ConvMaxOverTime& layer, const Sequence& e, const ConvCache& cache,
                           const Array1& d_out, ConvMaxOverTime& grad) {
  if (cache.argmax.size() != layer.out_dim() || d_out.size() != layer.out_dim()) {
    throw UsageError("conv backward: cache does not match layer");
  }
  Sequence d_e = Sequence::Zero(e.rows(), e.cols());
  const Eigen::Index span_len = e.rows() * layer.window;
  for (Eigen::Index o = 0; o < layer.out_dim(); ++o) {
    const double g = d_out[o];
    if (g == 0.0) continue;
    const Eigen::Index t = cache.argmax[o];
    grad.filter.row(o) += g * window_at(e, t, layer.window).transpose();
    grad.bias[o] += g;
    Eigen::Map<Array1>(d_e.col(t).data(), span_len) += g * layer.filter.row(o).transpose();
  }
  return d_e;
}

// ---------------------------------------------------------------------------

LstmLayer LstmLayer::create(Rng& rng, Eigen::Index in_dim, Eigen::Index hidden_dim, double scale) {
  LstmLayer l;
  l.w_xi = init_uniform(rng, hidden_dim, in_dim, scale);
  l.w_hi = init_uniform(rng, hidden_dim, hidden_dim, scale);
  l.w_xf = init_uniform(rng, hidden_dim, in_dim, scale);
  l.w_hf = init_uniform(rng, hidden_dim, hidden_dim, scale);
  l.w_xc = init_uniform(rng, hidden_dim, in_dim, scale);
  l.w_hc = init_uniform(rng, hidden_dim, hidden_dim, scale);
  l.w_xo = init_uniform(rng, hidden_dim, in_dim, scale);
  l.w_ho = init_uniform(rng, hidden_dim, hidden_dim, scale);
  l.b_i = init_uniform(rng, hidden_dim, scale);
  l.b_f = init_uniform(rng, hidden_dim, scale);
  l.b_c = init_uniform(rng, hidden_dim, scale);
  l.b_o = init_uniform(rng, hidden_dim, scale);
  return l;
}

LstmLayer LstmLayer::zeros_like() const {
  return {zeros_as(w_xi), zeros_as(w_hi), zeros_as(w_xf), zeros_as(w_hf),
          zeros_as(w_xc), zeros_as(w_hc), zeros_as(w_xo), zeros_as(w_ho),
          zeros_as(b_i),  zeros_as(b_f),  zeros_as(b_c),  zeros_as(b_o)};
}

Array1 lstm_forward(const LstmLayer& layer, const Sequence& x, LstmReadout readout, LstmCache* cache) {
  const Eigen::Index steps = x.cols();
  if (steps == 0) throw ArgumentError("lstm: empty input sequence");
  if (x.rows() != layer.in_dim()) throw ShapeError("lstm: input size does not match layer");
  const Eigen::Index h = layer.hidden_dim();

  LstmCache local;
  LstmCache& c = cache ? *cache : local;
  for (auto* m : {&c.input_gate, &c.forget_gate, &c.candidate, &c.output_gate, &c.cell, &c.hidden}) {
    m->resize(h, steps);
  }

  Array1 h_prev = Array1::Zero(h);
  Array1 c_prev = Array1::Zero(h);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const auto x_t = x.col(t);
    c.input_gate.col(t) = sigmoid(layer.w_xi * x_t + layer.w_hi * h_prev + layer.b_i);
    c.forget_gate.col(t) = sigmoid(layer.w_xf * x_t + layer.w_hf * h_prev + layer.b_f);
    c.candidate.col(t) = tanh(layer.w_xc * x_t + layer.w_hc * h_prev + layer.b_c);
    c.output_gate.col(t) = sigmoid(layer.w_xo * x_t + layer.w_ho * h_prev + layer.b_o);
    c.cell.col(t) = c.forget_gate.col(t).cwiseProduct(c_prev) +
                    c.input_gate.col(t).cwiseProduct(c.candidate.col(t));
    c.hidden.col(t) = c.output_gate.col(t).cwiseProduct(tanh(c.cell.col(t)));
    h_prev = c.hidden.col(t);
    c_prev = c.cell.col(t);
  }
  if (readout == LstmReadout::mean_over_time) return c.hidden.rowwise().mean();
  return h_prev;
}

Sequence lstm_backward(const LstmLayer& layer, const Sequence& x, const LstmCache& cache,
                       LstmReadout readout, const Array1& d_out, LstmLayer& grad) {
  const Eigen::Index steps = x.cols();
  const Eigen::Index h = layer.hidden_dim();
  if (cache.hidden.cols() != steps || cache.hidden.rows() != h || d_out.size() != h) {
    throw UsageError("lstm backward: cache does not match input");
  }

  Sequence d_x = Sequence::Zero(x.rows(), steps);
  Array1 dh_next = Array1::Zero(h);
  Array1 dc_next = Array1::Zero(h);
  const Array1 zero = Array1::Zero(h);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    Array1 dh = dh_next;
    if (readout == LstmReadout::mean_over_time) {
      dh += d_out / static_cast<double>(steps);
    } else if (t == steps - 1) {
      dh += d_out;
    }
    const auto i = cache.input_gate.col(t).array();
    const auto f = cache.forget_gate.col(t).array();
    const auto g = cache.candidate.col(t).array();
    const auto o = cache.output_gate.col(t).array();
    const Array1 c_prev = t > 0 ? Array1(cache.cell.col(t - 1)) : zero;
    const Array1 h_prev = t > 0 ? Array1(cache.hidden.col(t - 1)) : zero;
    const Eigen::ArrayXd tc = cache.cell.col(t).array().tanh();

    const Eigen::ArrayXd d_o = dh.array() * tc;
    const Eigen::ArrayXd d_c = dh.array() * o * (1.0 - tc.square()) + dc_next.array();
    const Array1 da_i = (d_c * g * i * (1.0 - i)).matrix();
    const Array1 da_f = (d_c * c_prev.array() * f * (1.0 - f)).matrix();
    const Array1 da_c = (d_c * i * (1.0 - g.square())).matrix();
    const Array1 da_o = (d_o * o * (1.0 - o)).matrix();
    dc_next = (d_c * f).matrix();

    const auto x_t = x.col(t);
    grad.w_xi.noalias() += da_i * x_t.transpose();
    grad.w_xf.noalias() += da_f * x_t.transpose();
    grad.w_xc.noalias() += da_c * x_t.transpose();
    grad.w_xo.noalias() += da_o * x_t.transpose();
    grad.w_hi.noalias() += da_i * h_prev.transpose();
    grad.w_hf.noalias() += da_f * h_prev.transpose();
    grad.w_hc.noalias() += da_c * h_prev.transpose();
    grad.w_ho.noalias() += da_o * h_prev.transpose();
    grad.b_i += da_i;
    grad.b_f += da_f;
    grad.b_c += da_c;
    grad.b_o += da_o;

    d_x.col(t).noalias() = layer.w_xi.transpose() * da_i + layer.w_xf.transpose() * da_f +
                           layer.w_xc.transpose() * da_c + layer.w_xo.transpose() * da_o;
    dh_next.noalias() = layer.w_hi.transpose() * da_i + layer.w_hf.transpose() * da_f +
                        layer.w_hc.transpose() * da_c + layer.w_ho.transpose() * da_o;
  }
  return d_x;
}

// ---------------------------------------------------------------------------

DropoutHidden DropoutHidden::create(Rng& rng, Eigen::Index in_dim, Eigen::Index out_dim, double keep_prob,
                                    double scale) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw ArgumentError("dropout: keep_prob must lie in (0, 1]");
  return {init_uniform(rng, out_dim, in_dim, scale), init_uniform(rng, out_dim, scale), keep_prob};
}

DropoutHidden DropoutHidden::zeros_like() const { return {zeros_as(weights), zeros_as(bias), keep_prob}; }

DropoutOutput dropout_forward(const DropoutHidden& layer, const Array1& z, Mode mode, Rng* rng) {
  if (z.size() != layer.in_dim()) throw ShapeError("dropout: input size does not match layer");
  if (mode == Mode::test) {
    // Materialize the scaled matrix; Eigen would otherwise hoist the scalar
    // out of the product and round differently.
    const Array2 scaled = layer.keep_prob * layer.weights;
    Array1 y = scaled * z + layer.bias;
    return {std::move(y), Array1::Ones(z.size())};
  }
  Array1 mask = Array1::Ones(z.size());
  if (layer.keep_prob < 1.0) {
    if (!rng) throw UsageError("dropout: train mode needs a random generator");
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask[i] = rng->bernoulli(layer.keep_prob) ? 1.0 : 0.0;
  }
  Array1 y = dropout_forward_masked(layer, z, mask);
  return {std::move(y), std::move(mask)};
}

Array1 dropout_forward_masked(const DropoutHidden& layer, const Array1& z, const Array1& mask) {
  if (z.size() != layer.in_dim() || mask.size() != z.size()) {
    throw ShapeError("dropout: input or mask size does not match layer");
  }
  return layer.weights * mask.cwiseProduct(z) + layer.bias;
}

Array1 dropout_backward(const DropoutHidden& layer, const Array1& z, const Array1& mask, const Array1& d_y,
                        DropoutHidden& grad) {
  if (d_y.size() != layer.out_dim() || z.size() != layer.in_dim() || mask.size() != z.size()) {
    throw ShapeError("dropout backward: sizes do not match layer");
  }
  grad.weights.noalias() += d_y * mask.cwiseProduct(z).transpose();
  grad.bias += d_y;
  return mask.cwiseProduct(layer.weights.transpose() * d_y);
}

// ---------------------------------------------------------------------------

std::string to_string(PoolOp op) {
  switch (op) {
    case PoolOp::max: return "max";
    case PoolOp::sum: return "sum";
    case PoolOp::avg: return "avg";
    case PoolOp::mul: return "mul";
    case PoolOp::outer: return "outer";
    case PoolOp::concat: return "concat";
  }
  return "unknown";
}

PoolOp parse_pool_op(const std::string& name) {
  for (PoolOp op : {PoolOp::max, PoolOp::sum, PoolOp::avg, PoolOp::mul, PoolOp::outer, PoolOp::concat}) {
    if (to_string(op) == name) return op;
  }
  throw ArgumentError("unknown pooling operator '" + name + "'");
}

Eigen::Index PoolingCombiner::output_dim(Eigen::Index u_dim, Eigen::Index v_dim) const {
  switch (op) {
    case PoolOp::outer: return u_dim * v_dim;
    case PoolOp::concat: return u_dim + v_dim;
    default:
      if (u_dim != v_dim) throw ShapeError("pooling " + to_string(op) + " needs inputs of equal length");
      return u_dim;
  }
}

Array1 combine(const PoolingCombiner& combiner, const Array1& u, const Array1& v) {
  switch (combiner.op) {
    case PoolOp::max: return ewise(EwiseOp::max, u, v);
    case PoolOp::sum: return ewise(EwiseOp::add, u, v);
    case PoolOp::avg: return ewise(EwiseOp::avg, u, v);
    case PoolOp::mul: return ewise(EwiseOp::mul, u, v);
    case PoolOp::outer: return outer(u, v);
    case PoolOp::concat: {
      Array1 out(u.size() + v.size());
      out << u, v;
      return out;
    }
  }
  throw ArgumentError("combine: unknown operator");
}

std::pair<Array1, Array1> combine_backward(const PoolingCombiner& combiner, const Array1& u, const Array1& v,
                                           const Array1& d_y) {
  if (d_y.size() != combiner.output_dim(u.size(), v.size())) {
    throw ShapeError("combine backward: gradient size does not match output");
  }
  switch (combiner.op) {
    case PoolOp::max: {
      Array1 du = Array1::Zero(u.size());
      Array1 dv = Array1::Zero(v.size());
      for (Eigen::Index i = 0; i < u.size(); ++i) (u[i] >= v[i] ? du[i] : dv[i]) = d_y[i];
      return {du, dv};
    }
    case PoolOp::sum: return {d_y, d_y};
    case PoolOp::avg: return {0.5 * d_y, 0.5 * d_y};
    case PoolOp::mul: return {d_y.cwiseProduct(v), d_y.cwiseProduct(u)};
    case PoolOp::outer: {
      Eigen::Map<const Array2> dm(d_y.data(), u.size(), v.size());
      return {dm * v, dm.transpose() * u};
    }
    case PoolOp::concat: return {d_y.head(u.size()), d_y.tail(v.size())};
  }
  throw ArgumentError("combine backward: unknown operator");
}

// ---------------------------------------------------------------------------

SoftmaxOutput SoftmaxOutput::create(Rng& rng, Eigen::Index in_dim, Eigen::Index num_classes, double scale) {
  return {init_uniform(rng, num_classes, in_dim, scale), init_uniform(rng, num_classes, scale)};
}

SoftmaxOutput SoftmaxOutput::zeros_like() const { return {zeros_as(weights), zeros_as(bias)}; }

Array1 softmax(const Array1& logits) {
  // Scalar exp: Eigen's packet exp clamps large negative inputs, so a
  // saturated logit would yield a subnormal instead of an exact zero.
  const double top = logits.maxCoeff();
  const Eigen::ArrayXd e = logits.array().unaryExpr([top](double x) { return std::exp(x - top); });
  return (e / e.sum()).matrix();
}

Array1 softmax_forward(const SoftmaxOutput& out, const Array1& x) {
  return softmax(matvec(out.weights, x) + out.bias);
}

Array1 softmax_backward(const SoftmaxOutput& out, const Array1& x, const Array1& probs, int true_class,
                        SoftmaxOutput& grad) {
  if (true_class < 0 || true_class >= out.num_classes()) throw ArgumentError("softmax: class out of range");
  Array1 d_logits = probs;
  d_logits[true_class] -= 1.0;
  grad.weights.noalias() += d_logits * x.transpose();
  grad.bias += d_logits;
  return out.weights.transpose() * d_logits;
}

}  // namespace poolnet
