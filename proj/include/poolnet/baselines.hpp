// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "poolnet/data.hpp"
#include "poolnet/layers.hpp"
#include "poolnet/training.hpp"

namespace poolnet {

/// Lowercased maximal runs of non-separator characters. Separators are
/// whitespace and punctuation (ASCII, Latin-1 and the General Punctuation block).
std::vector<std::string> tokenize(std::string_view value);

/// Dense token index built from training values only.
class TokenVocabulary {
 public:
  TokenVocabulary() = default;
  explicit TokenVocabulary(std::span<const AttributeRecord> records);

  std::optional<int> index_of(const std::string& token) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Sorted, de-duplicated indices of the known tokens of `value` (the
  /// non-zero coordinates of its token-presence vector).
  std::vector<int> features(std::string_view value) const;

 private:
  std::vector<std::string> tokens_;  // sorted
  std::unordered_map<std::string, int> index_;
};

// ---------------------------------------------------------------------------
// Bag-of-tokens MLP

/// Token-presence input -> ReLU(hidden1) -> ReLU(hidden2) -> softmax.
/// Inputs are the sparse index lists produced by TokenVocabulary::features.
class MlpModel {
 public:
  Array2 w1;  // hidden1 x vocab
  Array1 b1;
  DropoutHidden layer2;
  SoftmaxOutput output;

  static MlpModel create(int input_dim, int hidden1, int hidden2, int num_classes, Rng& rng, double scale);
  MlpModel zeros_like() const;

  std::vector<ParamView> params();
  std::vector<ConstParamView> params() const;

  double accumulate_gradient(const Example& example, MlpModel& grad, Rng& rng) const;
  Array1 predict_proba(std::span<const int> features) const;
  int predict(std::span<const int> features) const;
};

struct MlpConfig {
  int hidden1 = 300;
  int hidden2 = 50;
};

struct MlpClassifier {
  TokenVocabulary vocabulary;
  MlpModel model;
  std::vector<std::string> labels;
  double best_validation_accuracy = 0.0;
  double training_accuracy = 0.0;
};

/// Trains with the shared minibatch Adam loop (same loss, split and model selection).
MlpClassifier mlp_train(const DomainCatalog& catalog, const TrainConfig& cfg, const MlpConfig& mlp = {});
int mlp_predict(const MlpClassifier& clf, std::string_view value);

// ---------------------------------------------------------------------------
// ONDUX matching step

/// Strips every character except digits, letters and '.', then accepts the
/// remainder if it is a plain decimal number ("555-0100" -> 5550100,
/// "$12,345" -> 12345). Returns nullopt for anything containing letters.
std::optional<double> normalize_numeric(std::string_view value);

enum class AttributeKind { textual, numeric };

struct OnduxModel {
  /// Attribute labels in sorted order; prediction ties resolve to the earliest.
  std::vector<std::string> attributes;
  std::map<std::string, AttributeKind> kind;

  struct NumericStats {
    double mean = 0.0;
    double stddev = 0.0;  // sample estimator, floored for constant columns
  };
  std::map<std::string, NumericStats> numeric;

  /// Token occurrence counts per textual attribute.
  std::map<std::string, std::map<std::string, double>> token_counts;
  /// Total occurrences of each token across all textual attributes.
  std::map<std::string, double> token_totals;
  /// Number of textual attributes in which each token occurs.
  std::map<std::string, int> token_df;
  int textual_count = 0;
};

/// Fraction of parseable values at or above which an attribute is numeric.
inline constexpr double kNumericKindThreshold = 0.9;

OnduxModel ondux_fit(const DomainCatalog& catalog);

/// exp(-(x - mu)^2 / (2 sigma^2)). Throws UsageError for non-numeric attributes.
double ondux_score_numeric(const OnduxModel& model, const std::string& attribute, double x);

/// Mean over the value's tokens of P(a | t) * idf(t) / max_idf, with
/// P(a | t) = count(t, a) / count(t), idf(t) = log(1 + |A| / df(t)),
/// max_idf = log(1 + |A|) and |A| the number of textual attributes.
/// Unknown tokens contribute 0.
double ondux_score_textual(const OnduxModel& model, const std::string& attribute, std::string_view value);

/// Numeric values are matched against numeric attributes, everything else
/// against textual ones. A numeric value falls back to the textual attributes
/// when the catalog has no numeric one; with nothing to score, the first
/// attribute is returned.
std::string ondux_predict(const OnduxModel& model, std::string_view value);

}  // namespace poolnet
