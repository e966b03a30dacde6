// SPDX-License-Identifier: Apache-2.0
#include "poolnet/training.hpp"

#include <algorithm>
#include <atomic>
#include <iostream>
#include <map>
#include <numeric>

namespace poolnet {

double nll_loss(const Array1& probs, int true_class) {
  if (true_class < 0 || true_class >= probs.size()) throw ArgumentError("nll_loss: class out of range");
  constexpr double floor = 1e-12;
  double p = probs[true_class];
  if (p < floor) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) {
      std::cerr << "warning: true-class probability " << p << " clamped to " << floor << " in nll_loss\n";
    }
    p = floor;
  }
  return -std::log(p);
}

// ---------------------------------------------------------------------------

AdamState::AdamState(const std::vector<ConstParamView>& params) {
  for (const auto& p : params) {
    m_.push_back(Array1::Zero(static_cast<Eigen::Index>(p.values.size())));
    v_.push_back(Array1::Zero(static_cast<Eigen::Index>(p.values.size())));
  }
}

void adam_step(const std::vector<ParamView>& params, const std::vector<ConstParamView>& grads, AdamState& state,
               const AdamConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.m_.size()) {
    throw ShapeError("adam: parameter, gradient and moment lists differ in length");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].rows != grads[k].rows || params[k].cols != grads[k].cols ||
        params[k].values.size() != static_cast<std::size_t>(state.m_[k].size())) {
      throw ShapeError("adam: shape mismatch for '" + params[k].name + "'");
    }
  }
  ++state.step_;
  const double correction1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_));
  const double correction2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto n = static_cast<Eigen::Index>(params[k].values.size());
    Eigen::Map<Array1> p(params[k].values.data(), n);
    Eigen::Map<const Array1> g(grads[k].values.data(), n);
    Array1& m = state.m_[k];
    Array1& v = state.v_[k];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    p.array() -= cfg.learning_rate * (m.array() / correction1) / ((v.array() / correction2).sqrt() + cfg.eps);
  }
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ArgumentError("train: learning rate must be positive");
  if (batch_size < 1) throw ArgumentError("train: batch size must be at least 1");
  if (epochs < 0) throw ArgumentError("train: epochs must be non-negative");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ArgumentError("train: validation fraction must lie in (0, 1)");
  }
  if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw ArgumentError("train: drop rate must lie in [0, 1)");
  if (embedding_size < 1 || window < 1) throw ArgumentError("train: embedding size and window must be positive");
}

NetworkConfig TrainConfig::network(int vocab_size, int num_classes) const {
  NetworkConfig n;
  n.vocab_size = vocab_size;
  n.num_classes = num_classes;
  n.embedding_dim = embedding_size;
  n.window = window;
  n.conv_filters = conv_filters;
  n.lstm_hidden = lstm_hidden;
  n.hidden_dim = hidden_dim;
  n.pooling = pooling;
  n.branch_mode = branch_mode;
  n.drop_rate = drop_rate;
  n.shared_embedding = shared_embedding;
  n.lstm_readout = lstm_readout;
  n.init_scale = init_scale;
  return n;
}

// ---------------------------------------------------------------------------

SplitIndices stratified_split(std::span<const int> labels, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ArgumentError("split: fraction must lie in (0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(labels.size())));
  struct Share {
    std::size_t take;
    double remainder;
    std::size_t cap;
  };
  std::vector<Share> shares;
  std::size_t assigned = 0;
  for (const auto& [label, idx] : by_class) {
    const double exact = fraction * static_cast<double>(idx.size());
    const std::size_t cap = idx.size() - 1;
    const std::size_t take = std::min(cap, static_cast<std::size_t>(std::floor(exact)));
    shares.push_back({take, exact - std::floor(exact), cap});
    assigned += take;
  }
  // Largest remainder first; class order breaks ties.
  std::vector<std::size_t> order(shares.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return shares[a].remainder > shares[b].remainder; });
  for (std::size_t k = 0; assigned < target && k < order.size(); ++k) {
    Share& s = shares[order[k]];
    if (s.take < s.cap) {
      ++s.take;
      ++assigned;
    }
  }

  SplitIndices out;
  std::size_t c = 0;
  for (auto& [label, idx] : by_class) {
    rng.shuffle(idx);
    out.validation.insert(out.validation.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(shares[c].take));
    out.train.insert(out.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(shares[c].take), idx.end());
    ++c;
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  return out;
}

// ---------------------------------------------------------------------------

void write_metrics_header(std::ostream& log) { log << "epoch,train_loss,validation_accuracy\n"; }

void write_metrics_line(std::ostream& log, const EpochMetrics& m) {
  const auto old = log.precision(10);
  log << m.epoch << ',' << m.train_loss << ',' << m.validation_accuracy << '\n';
  log.precision(old);
}

TrainedModel::Prediction TrainedModel::predict(std::string_view value) const {
  const std::vector<int> input = encode(vocabulary, value);
  const Array1 probs = network.predict_proba(input);
  Eigen::Index best;
  const double p = probs.maxCoeff(&best);
  return {static_cast<int>(best), labels[static_cast<std::size_t>(best)], p};
}

std::vector<Example> make_examples(const DomainCatalog& catalog, const CharVocabulary& vocab,
                                   const std::vector<std::string>& labels) {
  std::vector<Example> out;
  out.reserve(catalog.size());
  for (const auto& [attribute, records] : catalog.by_attribute()) {
    const auto it = std::find(labels.begin(), labels.end(), attribute);
    if (it == labels.end()) throw ArgumentError("examples: attribute '" + attribute + "' has no label");
    const int label = static_cast<int>(it - labels.begin());
    for (const auto& r : records) out.push_back({encode(vocab, r.value), label});
  }
  return out;
}

TrainedModel train(const DomainCatalog& catalog, const TrainConfig& cfg, std::ostream* metrics_log) {
  cfg.validate();
  const std::vector<std::string> labels = catalog.attributes();
  if (labels.size() < 2) throw ArgumentError("train: the catalog needs at least two attributes");

  const std::vector<AttributeRecord> records = catalog.records();
  CharVocabulary vocab = build_vocab(records);
  const std::vector<Example> examples = make_examples(catalog, vocab, labels);

  std::vector<int> y;
  y.reserve(examples.size());
  for (const auto& ex : examples) y.push_back(ex.label);
  Rng split_rng(derive_seed(cfg.seed, SeedStream::split));
  const SplitIndices split = stratified_split(y, cfg.validation_fraction, split_rng);
  std::vector<Example> train_set, validation_set;
  for (std::size_t i : split.train) train_set.push_back(examples[i]);
  for (std::size_t i : split.validation) validation_set.push_back(examples[i]);

  Rng init_rng(derive_seed(cfg.seed, SeedStream::init));
  HybridNetwork net = HybridNetwork::create(cfg.network(vocab.size(), static_cast<int>(labels.size())), init_rng);
  FitResult<HybridNetwork> fitted = fit(std::move(net), train_set, validation_set, cfg, metrics_log);

  TrainedModel model;
  model.network = std::move(fitted.best);
  model.vocabulary = std::move(vocab);
  model.labels = labels;
  model.config = cfg;
  model.best_validation_accuracy = fitted.best_validation_accuracy;
  model.best_epoch = fitted.best_epoch;
  model.training_accuracy = accuracy(model.network, std::span<const Example>(train_set));
  return model;
}

// ---------------------------------------------------------------------------

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& g : groups) worst = std::max(worst, g.max_rel_error);
  return worst;
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport compare_gradients(const std::vector<ParamView>& params, const std::vector<ConstParamView>& analytic,
                                  const std::function<double()>& loss, double eps, double tol) {
  if (!(eps > 0.0)) throw ArgumentError("gradcheck: eps must be positive");
  if (!(tol > 0.0)) throw ArgumentError("gradcheck: tolerance must be positive");
  if (params.size() != analytic.size()) throw ShapeError("gradcheck: parameter and gradient lists differ");
  GradCheckReport report;
  report.tolerance = tol;
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].values.size() != analytic[k].values.size()) {
      throw ShapeError("gradcheck: gradient shape mismatch for '" + params[k].name + "'");
    }
    GroupError group{params[k].name, 0.0, 0};
    for (std::size_t i = 0; i < params[k].values.size(); ++i) {
      double& p = params[k].values[i];
      const double saved = p;
      p = saved + eps;
      const double plus = loss();
      p = saved - eps;
      const double minus = loss();
      p = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double err = relative_error(analytic[k].values[i], numeric);
      if (err > group.max_rel_error) {
        group.max_rel_error = err;
        group.worst_index = i;
      }
    }
    report.groups.push_back(std::move(group));
  }
  report.passed = report.max_rel_error() <= tol;
  return report;
}

NetworkConfig GradCheckOptions::default_network() {
  NetworkConfig n;
  n.vocab_size = 8;
  n.num_classes = 3;
  n.embedding_dim = 4;
  n.window = 3;
  n.conv_filters = 5;
  n.lstm_hidden = 5;
  n.hidden_dim = 5;
  n.pooling = PoolOp::max;
  n.branch_mode = BranchMode::hybrid;
  n.drop_rate = 0.0;
  n.init_scale = 0.5;
  return n;
}

GradCheckReport grad_check(const GradCheckOptions& options) {
  if (options.network.drop_rate != 0.0) throw ArgumentError("gradcheck: dropout must be disabled");
  Rng rng(options.seed);
  HybridNetwork net = HybridNetwork::create(options.network, rng);

  HybridNetwork grad = net.zeros_like();
  ForwardCache cache;
  network_forward(net, options.input, Mode::train, nullptr, &cache);
  network_backward(net, cache, options.true_class, grad);
  if (options.analytic_scale != 1.0) {
    for (const auto& g : grad.params()) {
      for (double& x : g.values) x *= options.analytic_scale;
    }
  }

  auto loss = [&] { return nll_loss(network_forward(net, options.input, Mode::train, nullptr), options.true_class); };
  return compare_gradients(net.params(), std::as_const(grad).params(), loss, options.eps, options.tol);
}

}  // namespace poolnet
