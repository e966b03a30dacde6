// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "poolnet/baselines.hpp"
#include "poolnet/data.hpp"
#include "poolnet/training.hpp"

namespace poolnet {

/// Evaluated approaches, in report order.
enum class Method { hybrid_max, hybrid_sum, hybrid_avg, hybrid_mul, hybrid_outer, hybrid_concat, cnn, lstm, mlp, ondux };

const std::vector<Method>& all_methods();
std::string method_name(Method m);  // "hybrid-max", "cnn", "ondux", ...
Method parse_method(const std::string& name);
/// Comma-separated list, e.g. "cnn,lstm,hybrid-max". Duplicates are rejected.
std::vector<Method> parse_method_list(const std::string& list);

/// Character-level networks (everything except the two baselines).
bool is_network_method(Method m);

/// Branch mode and pooling for a network method layered over `base`.
TrainConfig network_config_for(Method m, TrainConfig base);

// ---------------------------------------------------------------------------
// Confusion counts and metrics

/// Counts per (true label, predicted label). The label set is fixed at
/// construction; it should cover the training attributes and every test label.
class ConfusionTally {
 public:
  ConfusionTally() = default;
  explicit ConfusionTally(std::vector<std::string> labels);  // sorted and de-duplicated

  const std::vector<std::string>& labels() const { return labels_; }
  void add(const std::string& truth, const std::string& predicted, long count = 1);
  long count(const std::string& truth, const std::string& predicted) const;
  long total() const { return total_; }
  long trace() const;
  /// Sums another tally into this one, widening the label set when needed.
  void merge(const ConfusionTally& other);

 private:
  std::size_t index(const std::string& label) const;
  std::vector<std::string> labels_;
  std::vector<long> counts_;  // row-major: truth x predicted
  long total_ = 0;
};

struct AttributeMetrics {
  std::string attribute;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;  // true occurrences
};

struct Metrics {
  std::vector<AttributeMetrics> per_attribute;  // sorted by attribute
  double accuracy = 0.0;
  /// Unweighted mean of per-attribute F1 over attributes with support or predictions.
  double macro_f1 = 0.0;
};

/// Zero denominators yield 0. Throws ArgumentError for an empty tally.
Metrics metrics(const ConfusionTally& tally);

// ---------------------------------------------------------------------------
// Leave-one-source-out

struct EvalGrid {
  std::vector<int> embedding_sizes = {100, 200, 300};
  std::vector<int> windows = {3, 5};
  TrainConfig base;
  MlpConfig mlp;
};

struct GridPoint {
  int window = 0;          // 0 when the method has no window
  int embedding_size = 0;  // 0 for the baselines
  double validation_accuracy = 0.0;
};

/// "[w=3,e=100]", "[e=200]" or "" depending on which settings apply.
std::string config_label(const GridPoint& p);

struct RunResult {
  std::string test_source;
  GridPoint chosen;
  std::vector<GridPoint> grid;  // every configuration tried, in grid order
  double accuracy = 0.0;
  ConfusionTally tally;
  Metrics metrics;
  /// FNV-1a hash of the fitted model's parameters and vocabulary.
  std::uint64_t model_digest = 0;
};

struct EvalReport {
  Method method = Method::hybrid_max;
  std::vector<RunResult> runs;  // in sorted source order
  double mean_accuracy = 0.0;   // arithmetic mean of per-run accuracies
  ConfusionTally pooled;        // all runs summed
  Metrics pooled_metrics;

  /// Most frequently chosen configuration (earliest grid point on ties).
  GridPoint typical_config() const;
};

/// One run: fit on every source but `test_source` (with grid selection on
/// validation accuracy for network methods) and score the held-out source.
RunResult run_one(std::span<const AttributeRecord> records, const std::string& test_source, Method method,
                  const EvalGrid& grid);

/// Runs every source in turn. `threads` > 1 runs sources concurrently; the
/// report is assembled in source order either way. Throws ArgumentError with
/// fewer than two sources.
EvalReport run_loo(std::span<const AttributeRecord> records, Method method, const EvalGrid& grid, int threads = 1);

// ---------------------------------------------------------------------------
// Rendering

/// Methods as rows; mean accuracy with the typical configuration, then one
/// column per test source.
std::string render_table(std::span<const EvalReport> reports);

/// Precision / recall / F-measure per attribute over the pooled tally, plus macro-F1.
std::string render_attribute_table(const Metrics& m);

/// One JSON object per line for every (method, run).
std::string render_records(std::span<const EvalReport> reports);

}  // namespace poolnet
