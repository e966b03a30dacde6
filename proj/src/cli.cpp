// SPDX-License-Identifier: Apache-2.0
#include "poolnet/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "poolnet/baselines.hpp"
#include "poolnet/checkpoint.hpp"
#include "poolnet/eval.hpp"
#include "poolnet/synthetic.hpp"
#include "poolnet/training.hpp"

namespace poolnet {

namespace {

/// Flags shared by train and eval-loo. Unset optionals keep the TrainConfig defaults.
struct TrainFlags {
  std::string data;
  std::string format;
  std::string method = "hybrid-max";
  std::vector<int> embedding_sizes;
  std::vector<int> windows;
  std::string pooling;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> lr;
  std::optional<double> dropout;
  std::optional<double> validation_fraction;
  std::optional<double> init_scale;
  std::optional<int> conv_filters;
  std::optional<int> lstm_hidden;
  std::optional<int> hidden_dim;
  std::uint64_t seed = 0;
};

void add_train_flags(CLI::App& cmd, TrainFlags& f) {
  cmd.add_option("--data", f.data, "Labeled records (CSV with source,attribute,value header, or JSONL)")->required();
  cmd.add_option("--format", f.format, "csv or jsonl (default: from the file extension)");
  cmd.add_option("--pooling", f.pooling, "Combiner for hybrid methods: max, sum, avg, mul, outer, concat");
  cmd.add_option("--epochs", f.epochs, "Training epochs (default 20)");
  cmd.add_option("--batch-size", f.batch_size, "Minibatch size (default 10)");
  cmd.add_option("--lr", f.lr, "Adam learning rate (default 1e-6)");
  cmd.add_option("--dropout", f.dropout, "Drop rate on hidden-layer inputs (default 0.25)");
  cmd.add_option("--validation-fraction", f.validation_fraction, "Held-out share of training data (default 0.2)");
  cmd.add_option("--init-scale", f.init_scale, "Uniform initialisation range (default 0.05)");
  cmd.add_option("--conv-filters", f.conv_filters, "Convolution channels (default: embedding size)");
  cmd.add_option("--lstm-hidden", f.lstm_hidden, "LSTM state size (default: embedding size)");
  cmd.add_option("--hidden-dim", f.hidden_dim, "Branch hidden-layer width (default: embedding size)");
  cmd.add_option("--seed", f.seed, "Master seed; every random stream derives from it");
}

TrainConfig base_config(const TrainFlags& f) {
  TrainConfig cfg;
  if (f.epochs) cfg.epochs = *f.epochs;
  if (f.batch_size) cfg.batch_size = *f.batch_size;
  if (f.lr) cfg.learning_rate = *f.lr;
  if (f.dropout) cfg.drop_rate = *f.dropout;
  if (f.validation_fraction) cfg.validation_fraction = *f.validation_fraction;
  if (f.init_scale) cfg.init_scale = *f.init_scale;
  if (f.conv_filters) cfg.conv_filters = *f.conv_filters;
  if (f.lstm_hidden) cfg.lstm_hidden = *f.lstm_hidden;
  if (f.hidden_dim) cfg.hidden_dim = *f.hidden_dim;
  cfg.seed = f.seed;
  return cfg;
}

InputFormat format_for(const std::string& flag, const std::string& path) {
  if (!flag.empty()) return parse_input_format(flag);
  const std::string ext = std::filesystem::path(path).extension().string();
  return ext == ".jsonl" || ext == ".ndjson" ? InputFormat::record_per_line : InputFormat::delimited;
}

/// Attaches the file name to data errors.
struct FileDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<AttributeRecord> load_records(const std::string& path, const std::string& format) {
  if (!std::filesystem::exists(path)) throw FileDataError(path + ": no such file");
  try {
    return ingest(std::filesystem::path(path), format_for(format, path));
  } catch (const DataError& e) {
    throw FileDataError(path + ": " + e.what());
  } catch (const ArgumentError& e) {
    throw FileDataError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw FileDataError("cannot write '" + path + "'");
  file << text;
}

std::string format_double(double x, int precision = 6) {
  std::ostringstream s;
  s << std::setprecision(precision) << x;
  return s.str();
}

// ---------------------------------------------------------------------------

struct SynthFlags {
  int sources = 3;
  std::vector<std::string> attributes;
  int records_per_source = 200;
  std::uint64_t seed = 42;
  std::string format = "csv";
  std::string out;
};

int cmd_synth(const SynthFlags& f, std::ostream& out) {
  SyntheticOptions opt;
  opt.sources = f.sources;
  if (!f.attributes.empty()) opt.attributes = f.attributes;
  opt.records_per_source = f.records_per_source;
  opt.seed = f.seed;
  const std::vector<AttributeRecord> records = generate_synthetic(opt);
  std::ostringstream text;
  write_records(text, records, parse_input_format(f.format));
  if (f.out.empty()) {
    out << text.str();
  } else {
    write_text(f.out, text.str());
    out << "wrote " << records.size() << " records to " << f.out << "\n";
  }
  return kExitOk;
}

struct TrainOnlyFlags {
  std::string out;
  std::string metrics;
};

int cmd_train(const TrainFlags& f, const TrainOnlyFlags& t, std::ostream& out) {
  const Method method = parse_method(f.method);
  if (!is_network_method(method)) {
    throw ArgumentError("train supports the network methods only; evaluate '" + f.method + "' with eval-loo");
  }
  if (f.embedding_sizes.size() > 1 || f.windows.size() > 1) {
    throw ArgumentError("train takes a single --embedding-size and --window; use eval-loo for grids");
  }
  TrainConfig cfg = network_config_for(method, base_config(f));
  if (!f.pooling.empty()) cfg.pooling = parse_pool_op(f.pooling);
  if (!f.embedding_sizes.empty()) cfg.embedding_size = f.embedding_sizes.front();
  if (!f.windows.empty()) cfg.window = f.windows.front();
  cfg.validate();

  const DomainCatalog catalog(load_records(f.data, f.format));
  std::ofstream metrics_file;
  if (!t.metrics.empty()) {
    metrics_file.open(t.metrics, std::ios::binary);
    if (!metrics_file) throw FileDataError("cannot write '" + t.metrics + "'");
  }
  const TrainedModel model = train(catalog, cfg, t.metrics.empty() ? nullptr : &metrics_file);
  save_checkpoint(model, std::filesystem::path(t.out));
  out << "method " << method_name(method) << " " << config_label({cfg.window, cfg.embedding_size, 0.0}) << "\n"
      << "records " << catalog.size() << ", labels " << model.labels.size() << ", vocabulary "
      << model.vocabulary.size() << "\n"
      << "best epoch " << model.best_epoch << ", validation accuracy " << format_double(model.best_validation_accuracy)
      << ", training accuracy " << format_double(model.training_accuracy) << "\n"
      << "checkpoint " << t.out << "\n";
  return kExitOk;
}

struct EvalFlags {
  std::string out;
  std::string table;
  int threads = 1;
};

int cmd_eval(const TrainFlags& f, const EvalFlags& e, std::ostream& out) {
  const std::vector<Method> methods = parse_method_list(f.method);
  EvalGrid grid;
  grid.base = base_config(f);
  if (!f.pooling.empty()) {
    throw ArgumentError("eval-loo selects pooling through --method (hybrid-max, hybrid-sum, ...)");
  }
  if (!f.embedding_sizes.empty()) grid.embedding_sizes = f.embedding_sizes;
  if (!f.windows.empty()) grid.windows = f.windows;
  grid.base.validate();

  const std::vector<AttributeRecord> records = load_records(f.data, f.format);
  std::vector<EvalReport> reports;
  for (Method m : methods) reports.push_back(run_loo(records, m, grid, e.threads));

  const std::string table = render_table(reports);
  out << table;
  for (const auto& rep : reports) {
    out << "\n" << method_name(rep.method) << " per attribute (all runs)\n" << render_attribute_table(rep.pooled_metrics);
  }
  if (!e.out.empty()) write_text(e.out, render_records(reports));
  if (!e.table.empty()) write_text(e.table, table);
  return kExitOk;
}

struct PredictFlags {
  std::string model;
  std::vector<std::string> values;
  std::string input;
};

int cmd_predict(const PredictFlags& f, std::ostream& out) {
  if (f.values.empty() == f.input.empty()) throw ArgumentError("predict needs exactly one of --value or --input");
  const TrainedModel model = load_checkpoint_file(f.model);
  std::vector<std::string> values = f.values;
  if (!f.input.empty()) {
    std::ifstream in(f.input, std::ios::binary);
    if (!in) throw FileDataError(f.input + ": no such file");
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      values.push_back(line);
    }
  }
  for (const auto& v : values) {
    const auto p = model.predict(v);
    out << p.label << '\t' << format_double(p.probability, 6) << '\n';
  }
  return kExitOk;
}

struct GradcheckFlags {
  double eps = 1e-5;
  double tol = 1e-4;
  std::uint64_t seed = 7;
};

int cmd_gradcheck(const GradcheckFlags& f, std::ostream& out) {
  GradCheckOptions opt;
  opt.eps = f.eps;
  opt.tol = f.tol;
  opt.seed = f.seed;
  const GradCheckReport report = grad_check(opt);
  for (const auto& g : report.groups) {
    out << std::left << std::setw(22) << g.name << std::scientific << std::setprecision(3) << g.max_rel_error
        << std::defaultfloat << '\n';
  }
  out << "max relative error " << std::scientific << std::setprecision(3) << report.max_rel_error()
      << " (tolerance " << report.tolerance << ")" << std::defaultfloat << '\n'
      << (report.passed ? "PASS" : "FAIL") << '\n';
  return report.passed ? kExitOk : kExitCheckFailed;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attribute annotation from character sequences with pooled CNN/LSTM features"};
  app.name("poolnet");
  app.require_subcommand(1);

  SynthFlags synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a multi-source synthetic dataset");
  synth_cmd->add_option("--sources", synth.sources, "Number of sources (default 3)");
  synth_cmd->add_option("--attributes", synth.attributes, "Comma-separated attribute kinds")->delimiter(',');
  synth_cmd->add_option("--records-per-source", synth.records_per_source, "Records per source (default 200)");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed (default 42)");
  synth_cmd->add_option("--format", synth.format, "csv or jsonl (default csv)");
  synth_cmd->add_option("--out", synth.out, "Output file (default: stdout)");

  TrainFlags train_flags;
  TrainOnlyFlags train_only;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a network and write a checkpoint");
  add_train_flags(*train_cmd, train_flags);
  train_cmd->add_option("--method", train_flags.method, "hybrid-max (default), hybrid-sum, ..., cnn, lstm");
  train_cmd->add_option("--embedding-size", train_flags.embedding_sizes, "Embedding size (default 100)");
  train_cmd->add_option("--window", train_flags.windows, "Convolution window (default 3)");
  train_cmd->add_option("--out", train_only.out, "Checkpoint path")->required();
  train_cmd->add_option("--metrics", train_only.metrics, "Per-epoch metrics CSV");

  TrainFlags eval_flags;
  EvalFlags eval_only;
  CLI::App* eval_cmd = app.add_subcommand("eval-loo", "Leave-one-source-out evaluation");
  add_train_flags(*eval_cmd, eval_flags);
  eval_cmd->add_option("--method", eval_flags.method, "Comma-separated methods (default hybrid-max)");
  eval_cmd->add_option("--embedding-size", eval_flags.embedding_sizes, "Embedding sizes to search (default 100,200,300)")
      ->delimiter(',');
  eval_cmd->add_option("--window", eval_flags.windows, "Windows to search (default 3,5)")->delimiter(',');
  eval_cmd->add_option("--out", eval_only.out, "Per-run records (JSON lines)");
  eval_cmd->add_option("--table", eval_only.table, "Summary table file");
  eval_cmd->add_option("--threads", eval_only.threads, "Concurrent runs (default 1)")->check(CLI::PositiveNumber);

  PredictFlags predict;
  CLI::App* predict_cmd = app.add_subcommand("predict", "Label values with a trained checkpoint");
  predict_cmd->add_option("--model", predict.model, "Checkpoint path")->required();
  predict_cmd->add_option("--value", predict.values, "Value to label (repeatable)");
  predict_cmd->add_option("--input", predict.input, "File with one value per line");

  GradcheckFlags gradcheck;
  CLI::App* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every parameter gradient");
  gradcheck_cmd->add_option("--eps", gradcheck.eps, "Central-difference step (default 1e-5)");
  gradcheck_cmd->add_option("--tol", gradcheck.tol, "Maximum relative error (default 1e-4)");
  gradcheck_cmd->add_option("--seed", gradcheck.seed, "Initialisation seed (default 7)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth_cmd) return cmd_synth(synth, out);
    if (*train_cmd) return cmd_train(train_flags, train_only, out);
    if (*eval_cmd) return cmd_eval(eval_flags, eval_only, out);
    if (*predict_cmd) return cmd_predict(predict, out);
    if (*gradcheck_cmd) return cmd_gradcheck(gradcheck, out);
  } catch (const FileDataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const LoadError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const ArgumentError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"poolnet"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace poolnet
