// SPDX-License-Identifier: Apache-2.0
#include "poolnet/baselines.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

namespace poolnet {

namespace {

bool is_separator(char32_t c) {
  if (c < 0x80) {
    const bool alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    return !alnum;  // whitespace, controls and ASCII punctuation
  }
  if (c <= 0xBF) return true;                 // C1 controls, NBSP, Latin-1 punctuation and symbols
  if (c == 0xD7 || c == 0xF7) return true;    // multiplication and division signs
  if (c >= 0x2000 && c <= 0x206F) return true;  // general punctuation, typographic spaces
  return c == 0x3000 || c == 0xFEFF;
}

char32_t lowercase(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + ('a' - 'A');
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  return c;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view value) {
  std::vector<std::string> out;
  std::u32string current;
  for (char32_t c : decode_utf8(value)) {
    if (is_separator(c)) {
      if (!current.empty()) out.push_back(encode_utf8(current));
      current.clear();
    } else {
      current.push_back(lowercase(c));
    }
  }
  if (!current.empty()) out.push_back(encode_utf8(current));
  return out;
}

TokenVocabulary::TokenVocabulary(std::span<const AttributeRecord> records) {
  std::set<std::string> seen;
  for (const auto& r : records) {
    for (auto& t : tokenize(r.value)) seen.insert(std::move(t));
  }
  tokens_.assign(seen.begin(), seen.end());
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<int>(i));
}

std::optional<int> TokenVocabulary::index_of(const std::string& token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> TokenVocabulary::features(std::string_view value) const {
  std::vector<int> out;
  for (const auto& t : tokenize(value)) {
    if (auto i = index_of(t)) out.push_back(*i);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------

MlpModel MlpModel::create(int input_dim, int hidden1, int hidden2, int num_classes, Rng& rng, double scale) {
  if (input_dim < 0 || hidden1 < 1 || hidden2 < 1 || num_classes < 2) {
    throw ArgumentError("mlp: invalid layer sizes");
  }
  MlpModel m;
  m.w1 = init_uniform(rng, hidden1, input_dim, scale);
  m.b1 = init_uniform(rng, hidden1, scale);
  m.layer2 = DropoutHidden::create(rng, hidden1, hidden2, 1.0, scale);
  m.output = SoftmaxOutput::create(rng, hidden2, num_classes, scale);
  return m;
}

MlpModel MlpModel::zeros_like() const {
  MlpModel z;
  z.w1 = Array2::Zero(w1.rows(), w1.cols());
  z.b1 = Array1::Zero(b1.size());
  z.layer2 = layer2.zeros_like();
  z.output = output.zeros_like();
  return z;
}

namespace {

template <typename Model, typename View>
std::vector<View> mlp_params(Model& m) {
  return {view_of("mlp.w1", m.w1), view_of("mlp.b1", m.b1), view_of("mlp.w2", m.layer2.weights),
          view_of("mlp.b2", m.layer2.bias), view_of("output.weights", m.output.weights),
          view_of("output.bias", m.output.bias)};
}

struct MlpActivations {
  Array1 a1, h1, a2, h2, probs;
};

MlpActivations mlp_forward(const MlpModel& m, std::span<const int> features) {
  MlpActivations act;
  act.a1 = m.b1;
  for (int j : features) {
    if (j < 0 || j >= m.w1.cols()) throw VocabularyError("mlp: token index " + std::to_string(j) + " out of range");
    act.a1 += m.w1.col(j);
  }
  act.h1 = relu(act.a1);
  act.a2 = dropout_forward(m.layer2, act.h1, Mode::test, nullptr).y;
  act.h2 = relu(act.a2);
  act.probs = softmax_forward(m.output, act.h2);
  return act;
}

}  // namespace

std::vector<ParamView> MlpModel::params() { return mlp_params<MlpModel, ParamView>(*this); }
std::vector<ConstParamView> MlpModel::params() const { return mlp_params<const MlpModel, ConstParamView>(*this); }

double MlpModel::accumulate_gradient(const Example& example, MlpModel& grad, Rng& /*rng*/) const {
  const MlpActivations act = mlp_forward(*this, example.input);
  const Array1 d_h2 = softmax_backward(output, act.h2, act.probs, example.label, grad.output);
  const Array1 d_a2 = (act.a2.array() > 0.0).select(d_h2, 0.0);
  const Array1 ones = Array1::Ones(act.h1.size());
  const Array1 d_h1 = dropout_backward(layer2, act.h1, ones, d_a2, grad.layer2);
  const Array1 d_a1 = (act.a1.array() > 0.0).select(d_h1, 0.0);
  grad.b1 += d_a1;
  for (int j : example.input) grad.w1.col(j) += d_a1;
  return nll_loss(act.probs, example.label);
}

Array1 MlpModel::predict_proba(std::span<const int> features) const { return mlp_forward(*this, features).probs; }

int MlpModel::predict(std::span<const int> features) const {
  Eigen::Index best;
  predict_proba(features).maxCoeff(&best);
  return static_cast<int>(best);
}

MlpClassifier mlp_train(const DomainCatalog& catalog, const TrainConfig& cfg, const MlpConfig& mlp) {
  cfg.validate();
  MlpClassifier clf;
  clf.labels = catalog.attributes();
  if (clf.labels.size() < 2) throw ArgumentError("mlp: the catalog needs at least two attributes");
  const std::vector<AttributeRecord> records = catalog.records();
  clf.vocabulary = TokenVocabulary(records);

  std::vector<Example> examples;
  std::vector<int> y;
  for (const auto& r : records) {
    const int label = static_cast<int>(std::lower_bound(clf.labels.begin(), clf.labels.end(), r.attribute) -
                                       clf.labels.begin());
    examples.push_back({clf.vocabulary.features(r.value), label});
    y.push_back(label);
  }
  Rng split_rng(derive_seed(cfg.seed, SeedStream::split));
  const SplitIndices split = stratified_split(y, cfg.validation_fraction, split_rng);
  std::vector<Example> train_set, validation_set;
  for (std::size_t i : split.train) train_set.push_back(examples[i]);
  for (std::size_t i : split.validation) validation_set.push_back(examples[i]);

  Rng init_rng(derive_seed(cfg.seed, SeedStream::init));
  MlpModel model = MlpModel::create(clf.vocabulary.size(), mlp.hidden1, mlp.hidden2,
                                    static_cast<int>(clf.labels.size()), init_rng, cfg.init_scale);
  FitResult<MlpModel> fitted = fit(std::move(model), train_set, validation_set, cfg);
  clf.model = std::move(fitted.best);
  clf.best_validation_accuracy = fitted.best_validation_accuracy;
  clf.training_accuracy = accuracy(clf.model, std::span<const Example>(train_set));
  return clf;
}

int mlp_predict(const MlpClassifier& clf, std::string_view value) {
  return clf.model.predict(clf.vocabulary.features(value));
}

// ---------------------------------------------------------------------------

std::optional<double> normalize_numeric(std::string_view value) {
  std::string kept;
  for (char ch : value) {
    const bool digit = ch >= '0' && ch <= '9';
    const bool letter = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z');
    if (digit || letter || ch == '.') kept.push_back(ch);
  }
  // Plain decimal: digits, optionally one '.' followed by more digits.
  const auto dot = kept.find('.');
  const std::string_view whole = std::string_view(kept).substr(0, dot);
  const bool all_digits = !whole.empty() && std::all_of(whole.begin(), whole.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
  if (!all_digits) return std::nullopt;
  if (dot != std::string::npos) {
    const std::string_view frac = std::string_view(kept).substr(dot + 1);
    if (frac.empty() || !std::all_of(frac.begin(), frac.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return std::nullopt;
    }
  }
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(kept.data(), kept.data() + kept.size(), x);
  if (ec != std::errc() || ptr != kept.data() + kept.size()) return std::nullopt;
  return x;
}

OnduxModel ondux_fit(const DomainCatalog& catalog) {
  OnduxModel model;
  model.attributes = catalog.attributes();
  for (const auto& [attribute, records] : catalog.by_attribute()) {
    std::vector<double> numbers;
    for (const auto& r : records) {
      if (auto x = normalize_numeric(r.value)) numbers.push_back(*x);
    }
    const double share = records.empty() ? 0.0 : static_cast<double>(numbers.size()) / records.size();
    if (share >= kNumericKindThreshold) {
      model.kind[attribute] = AttributeKind::numeric;
      const double n = static_cast<double>(numbers.size());
      double mean = 0.0;
      for (double x : numbers) mean += x;
      mean /= n;
      double ss = 0.0;
      for (double x : numbers) ss += (x - mean) * (x - mean);
      double sd = numbers.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      if (sd == 0.0) sd = 1e-6 * std::max(std::abs(mean), 1.0);
      model.numeric[attribute] = {mean, sd};
      continue;
    }
    model.kind[attribute] = AttributeKind::textual;
    ++model.textual_count;
    auto& counts = model.token_counts[attribute];
    for (const auto& r : records) {
      for (const auto& t : tokenize(r.value)) counts[t] += 1.0;
    }
    for (const auto& [token, c] : counts) {
      model.token_totals[token] += c;
      ++model.token_df[token];
    }
  }
  return model;
}

namespace {

const OnduxModel::NumericStats& numeric_stats(const OnduxModel& model, const std::string& attribute) {
  const auto it = model.numeric.find(attribute);
  if (it == model.numeric.end()) throw UsageError("ondux: attribute '" + attribute + "' is not numeric");
  return it->second;
}

/// Log of the Gaussian kernel; comparing exponents keeps far-away values
/// ranked instead of all underflowing to 0.
double log_kernel(const OnduxModel::NumericStats& s, double x) {
  const double z = (x - s.mean) / s.stddev;
  return -0.5 * z * z;
}

}  // namespace

double ondux_score_numeric(const OnduxModel& model, const std::string& attribute, double x) {
  return std::exp(log_kernel(numeric_stats(model, attribute), x));
}

double ondux_score_textual(const OnduxModel& model, const std::string& attribute, std::string_view value) {
  const auto kind = model.kind.find(attribute);
  if (kind == model.kind.end() || kind->second != AttributeKind::textual) {
    throw UsageError("ondux: attribute '" + attribute + "' is not textual");
  }
  const std::vector<std::string> tokens = tokenize(value);
  if (tokens.empty() || model.textual_count == 0) return 0.0;
  const double attributes = model.textual_count;
  const double max_idf = std::log(1.0 + attributes);
  const auto& counts = model.token_counts.at(attribute);
  double sum = 0.0;
  for (const auto& t : tokens) {
    const auto own = counts.find(t);
    if (own == counts.end()) continue;
    const double p = own->second / model.token_totals.at(t);
    const double idf = std::log(1.0 + attributes / model.token_df.at(t));
    sum += p * idf / max_idf;
  }
  return sum / static_cast<double>(tokens.size());
}

std::string ondux_predict(const OnduxModel& model, std::string_view value) {
  if (model.attributes.empty()) throw UsageError("ondux: model has no attributes");
  const std::optional<double> x = normalize_numeric(value);
  const std::string* best = nullptr;
  double best_score = 0.0;
  // Strict comparison in sorted attribute order keeps the first on ties.
  auto consider = [&](const std::string& a, double score) {
    if (!best || score > best_score) {
      best = &a;
      best_score = score;
    }
  };
  if (x && !model.numeric.empty()) {
    for (const auto& a : model.attributes) {
      if (model.kind.at(a) == AttributeKind::numeric) consider(a, log_kernel(model.numeric.at(a), *x));
    }
  } else if (model.textual_count > 0) {
    for (const auto& a : model.attributes) {
      if (model.kind.at(a) == AttributeKind::textual) consider(a, ondux_score_textual(model, a, value));
    }
  }
  return best ? *best : model.attributes.front();
}

}  // namespace poolnet
