// SPDX-License-Identifier: Apache-2.0
#include "poolnet/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "poolnet/checkpoint.hpp"

namespace poolnet {

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = {Method::hybrid_max,   Method::hybrid_sum,    Method::hybrid_avg,
                                              Method::hybrid_mul,   Method::hybrid_outer,  Method::hybrid_concat,
                                              Method::cnn,          Method::lstm,          Method::mlp,
                                              Method::ondux};
  return methods;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::hybrid_max: return "hybrid-max";
    case Method::hybrid_sum: return "hybrid-sum";
    case Method::hybrid_avg: return "hybrid-avg";
    case Method::hybrid_mul: return "hybrid-mul";
    case Method::hybrid_outer: return "hybrid-outer";
    case Method::hybrid_concat: return "hybrid-concat";
    case Method::cnn: return "cnn";
    case Method::lstm: return "lstm";
    case Method::mlp: return "mlp";
    case Method::ondux: return "ondux";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : all_methods()) {
    if (method_name(m) == name) return m;
  }
  throw ArgumentError("unknown method '" + name + "'");
}

std::vector<Method> parse_method_list(const std::string& list) {
  std::vector<Method> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) throw ArgumentError("empty entry in method list '" + list + "'");
    const Method m = parse_method(item);
    if (std::find(out.begin(), out.end(), m) != out.end()) throw ArgumentError("method '" + item + "' listed twice");
    out.push_back(m);
  }
  if (out.empty()) throw ArgumentError("method list is empty");
  return out;
}

bool is_network_method(Method m) { return m != Method::mlp && m != Method::ondux; }

TrainConfig network_config_for(Method m, TrainConfig base) {
  switch (m) {
    case Method::hybrid_max: base.pooling = PoolOp::max; break;
    case Method::hybrid_sum: base.pooling = PoolOp::sum; break;
    case Method::hybrid_avg: base.pooling = PoolOp::avg; break;
    case Method::hybrid_mul: base.pooling = PoolOp::mul; break;
    case Method::hybrid_outer: base.pooling = PoolOp::outer; break;
    case Method::hybrid_concat: base.pooling = PoolOp::concat; break;
    case Method::cnn: base.branch_mode = BranchMode::cnn_only; return base;
    case Method::lstm: base.branch_mode = BranchMode::lstm_only; return base;
    default: throw ArgumentError("method '" + method_name(m) + "' is not a network");
  }
  base.branch_mode = BranchMode::hybrid;
  return base;
}

// ---------------------------------------------------------------------------

ConfusionTally::ConfusionTally(std::vector<std::string> labels) : labels_(std::move(labels)) {
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
  counts_.assign(labels_.size() * labels_.size(), 0);
}

std::size_t ConfusionTally::index(const std::string& label) const {
  const auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) throw ArgumentError("tally: unknown label '" + label + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

void ConfusionTally::add(const std::string& truth, const std::string& predicted, long n) {
  if (n < 0) throw ArgumentError("tally: negative count");
  counts_[index(truth) * labels_.size() + index(predicted)] += n;
  total_ += n;
}

long ConfusionTally::count(const std::string& truth, const std::string& predicted) const {
  return counts_[index(truth) * labels_.size() + index(predicted)];
}

long ConfusionTally::trace() const {
  long t = 0;
  for (std::size_t i = 0; i < labels_.size(); ++i) t += counts_[i * labels_.size() + i];
  return t;
}

void ConfusionTally::merge(const ConfusionTally& other) {
  std::vector<std::string> joined = labels_;
  joined.insert(joined.end(), other.labels_.begin(), other.labels_.end());
  ConfusionTally sum(std::move(joined));
  for (const ConfusionTally* t : {static_cast<const ConfusionTally*>(this), &other}) {
    for (const auto& a : t->labels_) {
      for (const auto& b : t->labels_) {
        if (const long c = t->count(a, b)) sum.add(a, b, c);
      }
    }
  }
  *this = std::move(sum);
}

Metrics metrics(const ConfusionTally& tally) {
  if (tally.total() == 0) throw ArgumentError("metrics: empty tally");
  const auto& labels = tally.labels();
  Metrics m;
  double f1_sum = 0.0;
  int f1_count = 0;
  for (const auto& a : labels) {
    long tp = tally.count(a, a), predicted = 0, actual = 0;
    for (const auto& b : labels) {
      predicted += tally.count(b, a);
      actual += tally.count(a, b);
    }
    AttributeMetrics am{a, 0.0, 0.0, 0.0, actual};
    if (predicted > 0) am.precision = static_cast<double>(tp) / static_cast<double>(predicted);
    if (actual > 0) am.recall = static_cast<double>(tp) / static_cast<double>(actual);
    if (am.precision + am.recall > 0.0) am.f1 = 2.0 * am.precision * am.recall / (am.precision + am.recall);
    if (predicted > 0 || actual > 0) {
      f1_sum += am.f1;
      ++f1_count;
    }
    m.per_attribute.push_back(std::move(am));
  }
  m.accuracy = static_cast<double>(tally.trace()) / static_cast<double>(tally.total());
  m.macro_f1 = f1_count ? f1_sum / f1_count : 0.0;
  return m;
}

// ---------------------------------------------------------------------------

std::string config_label(const GridPoint& p) {
  if (p.embedding_size == 0) return "";
  if (p.window == 0) return "[e=" + std::to_string(p.embedding_size) + "]";
  return "[w=" + std::to_string(p.window) + ",e=" + std::to_string(p.embedding_size) + "]";
}

GridPoint EvalReport::typical_config() const {
  std::vector<std::pair<GridPoint, int>> seen;
  for (const auto& r : runs) {
    auto it = std::find_if(seen.begin(), seen.end(), [&](const auto& s) {
      return s.first.window == r.chosen.window && s.first.embedding_size == r.chosen.embedding_size;
    });
    if (it == seen.end()) {
      seen.push_back({r.chosen, 1});
    } else {
      ++it->second;
    }
  }
  if (seen.empty()) return {};
  // Grid order, not first appearance, breaks ties between equally frequent choices.
  const auto& grid = runs.front().grid;
  auto rank = [&](const GridPoint& p) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i].window == p.window && grid[i].embedding_size == p.embedding_size) return i;
    }
    return grid.size();
  };
  auto best = seen.begin();
  for (auto it = seen.begin(); it != seen.end(); ++it) {
    if (it->second > best->second || (it->second == best->second && rank(it->first) < rank(best->first))) best = it;
  }
  GridPoint p = best->first;
  p.validation_accuracy = 0.0;
  return p;
}

namespace {

struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 0x100000001b3ULL;
    }
  }
  void text(const std::string& s) {
    bytes(s.data(), s.size());
    bytes("\0", 1);
  }
  void number(double x) { bytes(&x, sizeof x); }
  void params(const std::vector<ConstParamView>& views) {
    for (const auto& v : views) {
      text(v.name);
      bytes(v.values.data(), v.values.size() * sizeof(double));
    }
  }
};

/// Fitted predictor for one run, whatever the method.
struct Fitted {
  std::vector<std::string> labels;
  std::function<std::string(const std::string&)> predict;
  std::uint64_t digest = 0;
};

Fitted fit_network(const DomainCatalog& catalog, Method method, const EvalGrid& grid, RunResult& run) {
  const TrainConfig base = network_config_for(method, grid.base);
  const bool uses_window = method != Method::lstm;
  const std::vector<int> windows = uses_window ? grid.windows : std::vector<int>{base.window};
  if (grid.embedding_sizes.empty() || windows.empty()) throw ArgumentError("eval: empty configuration grid");

  std::optional<TrainedModel> best;
  for (int w : windows) {
    for (int e : grid.embedding_sizes) {
      TrainConfig cfg = base;
      cfg.window = w;
      cfg.embedding_size = e;
      TrainedModel model = train(catalog, cfg);
      const GridPoint point{uses_window ? w : 0, e, model.best_validation_accuracy};
      run.grid.push_back(point);
      if (!best || point.validation_accuracy > run.chosen.validation_accuracy) {
        run.chosen = point;
        best = std::move(model);
      }
    }
  }
  Fnv1a hash;
  hash.text(save_checkpoint(*best));
  auto shared = std::make_shared<TrainedModel>(std::move(*best));
  return {shared->labels, [shared](const std::string& v) { return shared->predict(v).label; }, hash.h};
}

Fitted fit_mlp(const DomainCatalog& catalog, const EvalGrid& grid, RunResult& run) {
  auto clf = std::make_shared<MlpClassifier>(mlp_train(catalog, grid.base, grid.mlp));
  run.chosen = {0, 0, clf->best_validation_accuracy};
  run.grid = {run.chosen};
  Fnv1a hash;
  for (const auto& t : clf->vocabulary.tokens()) hash.text(t);
  hash.params(std::as_const(clf->model).params());
  return {clf->labels,
          [clf](const std::string& v) { return clf->labels[static_cast<std::size_t>(mlp_predict(*clf, v))]; }, hash.h};
}

Fitted fit_ondux(const DomainCatalog& catalog, RunResult& run) {
  auto model = std::make_shared<OnduxModel>(ondux_fit(catalog));
  run.chosen = {};
  run.grid = {run.chosen};
  Fnv1a hash;
  for (const auto& [a, kind] : model->kind) {
    hash.text(a);
    hash.number(kind == AttributeKind::numeric ? 1.0 : 0.0);
  }
  for (const auto& [a, s] : model->numeric) {
    hash.number(s.mean);
    hash.number(s.stddev);
  }
  for (const auto& [a, counts] : model->token_counts) {
    hash.text(a);
    for (const auto& [t, c] : counts) {
      hash.text(t);
      hash.number(c);
    }
  }
  return {model->attributes, [model](const std::string& v) { return ondux_predict(*model, v); }, hash.h};
}

}  // namespace

RunResult run_one(std::span<const AttributeRecord> records, const std::string& test_source, Method method,
                  const EvalGrid& grid) {
  SourceSplit split = split_by_source(records, test_source);
  RunResult run;
  run.test_source = test_source;
  Fitted fitted;
  switch (method) {
    case Method::mlp: fitted = fit_mlp(split.catalog, grid, run); break;
    case Method::ondux: fitted = fit_ondux(split.catalog, run); break;
    default: fitted = fit_network(split.catalog, method, grid, run); break;
  }
  run.model_digest = fitted.digest;

  // Test-only attributes join the label set as rows nothing can be predicted into.
  std::vector<std::string> labels = fitted.labels;
  for (const auto& r : split.test) labels.push_back(r.attribute);
  run.tally = ConfusionTally(std::move(labels));
  for (const auto& r : split.test) run.tally.add(r.attribute, fitted.predict(r.value));
  run.metrics = metrics(run.tally);
  run.accuracy = run.metrics.accuracy;
  return run;
}

EvalReport run_loo(std::span<const AttributeRecord> records, Method method, const EvalGrid& grid, int threads) {
  const std::vector<std::string> sources = sources_of(records);
  if (sources.size() < 2) {
    throw ArgumentError("leave-one-source-out needs at least two sources (found " + std::to_string(sources.size()) +
                        ")");
  }
  EvalReport report;
  report.method = method;
  report.runs.resize(sources.size());

  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, sources.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < sources.size(); ++i) report.runs[i] = run_one(records, sources[i], method, grid);
  } else {
    std::vector<std::exception_ptr> errors(sources.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < sources.size(); i += workers) {
          try {
            report.runs[i] = run_one(records, sources[i], method, grid);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  double sum = 0.0;
  for (const auto& r : report.runs) {
    sum += r.accuracy;
    report.pooled.merge(r.tally);
  }
  report.mean_accuracy = sum / static_cast<double>(report.runs.size());
  report.pooled_metrics = metrics(report.pooled);
  return report;
}

// ---------------------------------------------------------------------------

namespace {

std::string fixed3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string render_table(std::span<const EvalReport> reports) {
  std::set<std::string> source_set;
  for (const auto& rep : reports) {
    for (const auto& r : rep.runs) source_set.insert(r.test_source);
  }
  const std::vector<std::string> sources(source_set.begin(), source_set.end());

  constexpr std::size_t method_width = 15, cell_width = 20;
  std::ostringstream out;
  out << pad("method", method_width) << pad("mean", cell_width);
  for (const auto& s : sources) out << pad(s, cell_width);
  out << '\n';

  // Rows follow the declared method order regardless of input order.
  std::vector<const EvalReport*> ordered;
  for (const auto& rep : reports) ordered.push_back(&rep);
  std::stable_sort(ordered.begin(), ordered.end(), [](const EvalReport* a, const EvalReport* b) {
    return static_cast<int>(a->method) < static_cast<int>(b->method);
  });
  for (const EvalReport* rep : ordered) {
    const std::string typical = config_label(rep->typical_config());
    out << pad(method_name(rep->method), method_width)
        << pad(fixed3(rep->mean_accuracy) + (typical.empty() ? "" : " " + typical), cell_width);
    for (const auto& s : sources) {
      const auto it = std::find_if(rep->runs.begin(), rep->runs.end(),
                                   [&](const RunResult& r) { return r.test_source == s; });
      std::string cell = "-";
      if (it != rep->runs.end()) {
        const std::string label = config_label(it->chosen);
        cell = fixed3(it->accuracy) + (label.empty() ? "" : " " + label);
      }
      out << pad(cell, cell_width);
    }
    out << '\n';
  }
  std::string text = out.str();
  // Trailing padding is noise in diffs.
  std::string trimmed;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    line.erase(line.find_last_not_of(' ') + 1);
    trimmed += line + '\n';
  }
  return trimmed;
}

std::string render_attribute_table(const Metrics& m) {
  std::ostringstream out;
  out << "attribute            precision  recall  f-measure\n";
  for (const auto& a : m.per_attribute) {
    out << pad(a.attribute, 21) << pad(fixed3(a.precision), 11) << pad(fixed3(a.recall), 8) << fixed3(a.f1) << '\n';
  }
  if (!m.per_attribute.empty()) {
    out << "accuracy " << fixed3(m.accuracy) << "\n";
    out << "macro-F1 (extension) " << fixed3(m.macro_f1) << "\n";
  }
  return out.str();
}

std::string render_records(std::span<const EvalReport> reports) {
  std::string out;
  for (const auto& rep : reports) {
    for (const auto& r : rep.runs) {
      nlohmann::ordered_json j;
      j["method"] = method_name(rep.method);
      j["test_source"] = r.test_source;
      j["config"] = config_label(r.chosen);
      if (r.chosen.window) j["window"] = r.chosen.window;
      if (r.chosen.embedding_size) j["embedding_size"] = r.chosen.embedding_size;
      j["validation_accuracy"] = r.chosen.validation_accuracy;
      j["accuracy"] = r.accuracy;
      j["macro_f1"] = r.metrics.macro_f1;
      nlohmann::ordered_json per = nlohmann::ordered_json::array();
      for (const auto& a : r.metrics.per_attribute) {
        per.push_back({{"attribute", a.attribute},
                       {"precision", a.precision},
                       {"recall", a.recall},
                       {"f1", a.f1},
                       {"support", a.support}});
      }
      j["per_attribute"] = std::move(per);
      out += j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
    }
  }
  return out;
}

}  // namespace poolnet
