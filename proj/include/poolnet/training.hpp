// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "poolnet/data.hpp"
#include "poolnet/network.hpp"

namespace poolnet {

/// -log(probs[true_class]); probabilities below 1e-12 are clamped (with a
/// one-time warning on stderr).
double nll_loss(const Array1& probs, int true_class);

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double learning_rate = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moments for every parameter array, plus the step count.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(const std::vector<ConstParamView>& params);

  long step() const { return step_; }
  const std::vector<Array1>& first_moment() const { return m_; }
  const std::vector<Array1>& second_moment() const { return v_; }

 private:
  friend void adam_step(const std::vector<ParamView>&, const std::vector<ConstParamView>&, AdamState&,
                        const AdamConfig&);
  std::vector<Array1> m_, v_;
  long step_ = 0;
};

/// One bias-corrected Adam update: p -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(const std::vector<ParamView>& params, const std::vector<ConstParamView>& grads, AdamState& state,
               const AdamConfig& cfg);

// ---------------------------------------------------------------------------
// Configuration

struct TrainConfig {
  double learning_rate = 1e-6;
  int batch_size = 10;
  int epochs = 20;
  double drop_rate = 0.25;
  int embedding_size = 100;
  int window = 3;
  PoolOp pooling = PoolOp::max;
  BranchMode branch_mode = BranchMode::hybrid;
  std::uint64_t seed = 0;
  double validation_fraction = 0.20;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  // Architecture details with no published value; zero widths follow embedding_size.
  int conv_filters = 0;
  int lstm_hidden = 0;
  int hidden_dim = 0;
  bool shared_embedding = true;
  LstmReadout lstm_readout = LstmReadout::final_state;
  double init_scale = 0.05;

  void validate() const;
  AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_eps}; }
  NetworkConfig network(int vocab_size, int num_classes) const;
};

/// Sub-seed streams derived from TrainConfig::seed.
enum class SeedStream : std::uint64_t { init = 1, split = 2, shuffle = 3, dropout = 4 };

inline std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream) {
  return Rng::derive(seed, static_cast<std::uint64_t>(stream));
}

// ---------------------------------------------------------------------------
// Validation split

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Stratified split by label. The validation size is round(fraction * n),
/// apportioned across classes by largest remainder; every class keeps at least
/// one training example. Both index lists are sorted.
SplitIndices stratified_split(std::span<const int> labels, double fraction, Rng& rng);

// ---------------------------------------------------------------------------
// Generic minibatch loop

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_accuracy = 0.0;
};

template <typename Model>
struct FitResult {
  Model best;
  int best_epoch = 0;
  double best_validation_accuracy = 0.0;
  std::vector<EpochMetrics> history;
};

template <typename Model>
double accuracy(const Model& model, std::span<const Example> examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : examples) correct += model.predict(ex.input) == ex.label;
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

/// Writes the metrics header once; one line per epoch follows.
void write_metrics_header(std::ostream& log);
void write_metrics_line(std::ostream& log, const EpochMetrics& m);

/// Minibatch Adam on the summed negative log-likelihood. Examples are shuffled
/// every epoch; per-example gradients are reduced in batch order. The returned
/// model is the one from the epoch with the highest validation accuracy
/// (earliest on ties; the final epoch when the validation set is empty).
///
/// Model needs: zeros_like(), params() (const and mutable),
/// accumulate_gradient(const Example&, Model&, Rng&) const and predict(input) const.
template <typename Model>
FitResult<Model> fit(Model model, std::span<const Example> train, std::span<const Example> validation,
                     const TrainConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  Rng shuffle_rng(derive_seed(cfg.seed, SeedStream::shuffle));
  Rng dropout_rng(derive_seed(cfg.seed, SeedStream::dropout));
  const AdamConfig adam = cfg.adam();

  Model grad = model.zeros_like();
  AdamState state(std::as_const(model).params());
  FitResult<Model> result{model, 0, -1.0, {}};
  if (log) write_metrics_header(*log);

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      set_zero(grad.params());
      for (std::size_t k = start; k < stop; ++k) {
        epoch_loss += model.accumulate_gradient(train[order[k]], grad, dropout_rng);
      }
      adam_step(model.params(), std::as_const(grad).params(), state, adam);
    }
    EpochMetrics m{epoch, epoch_loss, validation.empty() ? 0.0 : accuracy(model, validation)};
    result.history.push_back(m);
    if (log) write_metrics_line(*log, m);
    const bool better = validation.empty() ? true : m.validation_accuracy > result.best_validation_accuracy;
    if (better) {
      result.best = model;
      result.best_epoch = epoch;
      result.best_validation_accuracy = m.validation_accuracy;
    }
  }
  if (cfg.epochs == 0) result.best_validation_accuracy = validation.empty() ? 0.0 : accuracy(model, validation);
  return result;
}

// ---------------------------------------------------------------------------
// End-to-end training of the hybrid network

struct TrainedModel {
  HybridNetwork network;
  CharVocabulary vocabulary;
  std::vector<std::string> labels;
  TrainConfig config;
  double best_validation_accuracy = 0.0;
  int best_epoch = 0;
  /// Accuracy of the selected parameters on the training split.
  double training_accuracy = 0.0;

  struct Prediction {
    int label_index = 0;
    std::string label;
    double probability = 0.0;
  };
  Prediction predict(std::string_view value) const;
};

/// Encodes every catalog record against the vocabulary; labels index the sorted attribute list.
std::vector<Example> make_examples(const DomainCatalog& catalog, const CharVocabulary& vocab,
                                   const std::vector<std::string>& labels);

/// Builds the vocabulary from the catalog, holds out a stratified validation
/// split, and trains with best-validation model selection.
TrainedModel train(const DomainCatalog& catalog, const TrainConfig& cfg, std::ostream* metrics_log = nullptr);

// ---------------------------------------------------------------------------
// Finite-difference gradient check

struct GroupError {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::vector<GroupError> groups;
  double tolerance = 0.0;
  bool passed = false;

  double max_rel_error() const;
};

/// Relative error |a - n| / max(|a|, |n|, kGradCheckFloor). The floor keeps
/// coordinates whose true gradient is (near) zero from dividing noise by noise.
inline constexpr double kGradCheckFloor = 1e-6;
double relative_error(double analytic, double numeric);

/// Compares analytic gradients against central differences (L(p+eps) - L(p-eps)) / (2 eps),
/// perturbing each coordinate of `params` in place and restoring it afterwards.
GradCheckReport compare_gradients(const std::vector<ParamView>& params, const std::vector<ConstParamView>& analytic,
                                  const std::function<double()>& loss, double eps, double tol);

struct GradCheckOptions {
  NetworkConfig network = default_network();
  std::vector<int> input = {0, 3, 4, 5, 3, 6, 7, 1};
  int true_class = 1;
  std::uint64_t seed = 7;
  double eps = 1e-5;
  double tol = 1e-4;
  /// Multiplies the analytic gradient before comparison (1 = honest check).
  double analytic_scale = 1.0;

  /// d=4, hidden=5, k=3, 3 classes, dropout off, hybrid max pooling.
  static NetworkConfig default_network();
};

/// Builds a network from `options`, runs forward/backward on the fixed input
/// and checks every parameter group. Dropout must be disabled.
GradCheckReport grad_check(const GradCheckOptions& options);

}  // namespace poolnet
