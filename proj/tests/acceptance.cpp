// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.
// Set POOLNET_CORA to a delimited or JSONL corpus to include the public-data smoke run.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "poolnet/baselines.hpp"
#include "poolnet/checkpoint.hpp"
#include "poolnet/eval.hpp"
#include "poolnet/synthetic.hpp"

using namespace poolnet;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s %-32s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Array1 random_vec(Rng& rng, Eigen::Index n, double scale) { return init_uniform(rng, n, scale); }

// ---------------------------------------------------------------------------

void gradient_correctness() {
  const auto t0 = Clock::now();
  const GradCheckReport r = grad_check(GradCheckOptions{});
  const double secs = seconds_since(t0);
  // Embedding, conv filter/bias, 12 LSTM arrays, two hidden layers, softmax.
  const bool groups_ok = r.groups.size() == 1 + 2 + 12 + 4 + 2;
  report(r.passed && r.max_rel_error() <= 1e-4 && groups_ok && secs < 60.0, "gradient-check",
         fmt("max rel err %.3g over %.0f groups in %.2fs", r.max_rel_error(), static_cast<double>(r.groups.size()),
             secs));
}

void layer_analytics() {
  Rng rng(1);
  bool ok = true;

  // Zero-weight LSTM.
  LstmLayer zero = LstmLayer::create(rng, 4, 5, 0.5).zeros_like();
  const Sequence x = Sequence::Random(4, 9);
  const Array1 h = lstm_forward(zero, x);
  const bool lstm_ok = (h.array() == 0.0).all();
  ok &= lstm_ok;

  // Softmax normalization and shift invariance.
  double worst_sum = 0.0, worst_shift = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Array1 z = random_vec(rng, 1 + trial % 9, 20.0);
    const Array1 p = softmax(z);
    worst_sum = std::max(worst_sum, std::abs(p.sum() - 1.0));
    const double c = rng.uniform(-50.0, 50.0);
    const Array1 q = softmax(Array1(z.array() + c));
    worst_shift = std::max(worst_shift, (p - q).cwiseAbs().maxCoeff());
  }
  const bool softmax_ok = worst_sum <= 1e-9 && worst_shift <= 1e-12;
  ok &= softmax_ok;

  // Convolution window count.
  const ConvMaxOverTime conv = ConvMaxOverTime::create(rng, 3, 4, 6, 0.5);
  const bool conv_ok = conv_windows(conv, Sequence::Random(4, 7)).cols() == 5;
  ok &= conv_ok;

  // Dropout at test time equals the keep_prob-scaled dense layer, bit for bit.
  const DropoutHidden layer = DropoutHidden::create(rng, 7, 5, 0.75, 0.5);
  bool dropout_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const Array1 z = random_vec(rng, 7, 3.0);
    const Array2 scaled = layer.keep_prob * layer.weights;
    const Array1 expected = scaled * z + layer.bias;
    dropout_ok &= dropout_forward(layer, z, Mode::test, nullptr).y == expected;
  }
  ok &= dropout_ok;

  report(ok, "layer-analytics",
         fmt("lstm zero %.0f, softmax sum %.2g shift %.2g, conv windows ok %.0f", lstm_ok, worst_sum, worst_shift,
             conv_ok) +
             (dropout_ok ? ", dropout exact" : ", dropout MISMATCH"));
}

void pooling_suite() {
  Rng rng(2);
  long checks = 0, bad = 0;
  auto expect = [&](bool c) {
    ++checks;
    bad += !c;
  };
  for (Eigen::Index du = 1; du <= 4; ++du) {
    for (Eigen::Index dv = 1; dv <= 4; ++dv) {
      for (int trial = 0; trial < 5; ++trial) {
        const Array1 u = random_vec(rng, du, 2.0), v = random_vec(rng, dv, 2.0);
        for (PoolOp op : {PoolOp::max, PoolOp::sum, PoolOp::avg, PoolOp::mul, PoolOp::outer, PoolOp::concat}) {
          const PoolingCombiner c{op};
          const bool elementwise = op != PoolOp::outer && op != PoolOp::concat;
          if (elementwise && du != dv) {
            bool threw = false;
            try {
              combine(c, u, v);
            } catch (const ShapeError&) {
              threw = true;
            }
            expect(threw);
            continue;
          }
          const Array1 y = combine(c, u, v);
          expect(y.size() == c.output_dim(du, dv));
          if (elementwise) expect(y == combine(c, v, u));
          if (op == PoolOp::outer) {
            const Array1 yt = combine(c, v, u);
            for (Eigen::Index i = 0; i < du; ++i) {
              for (Eigen::Index j = 0; j < dv; ++j) {
                expect(y[i * dv + j] == u[i] * v[j]);
                expect(yt[j * du + i] == y[i * dv + j]);
              }
            }
          }
          if (op == PoolOp::concat) expect(y.head(du) == u && y.tail(dv) == v);
        }
      }
    }
  }
  report(bad == 0, "pooling-suite", fmt("%.0f checks, %.0f failed, dims 1..4", static_cast<double>(checks),
                                        static_cast<double>(bad)));
}

// ---------------------------------------------------------------------------

void synthetic_end_to_end() {
  const auto t0 = Clock::now();
  const std::vector<AttributeRecord> records = generate_synthetic(SyntheticOptions{});
  const DomainCatalog catalog(records);

  // Training accuracy for every hybrid pooling variant.
  bool train_ok = true;
  std::string train_detail;
  for (PoolOp op : {PoolOp::max, PoolOp::sum, PoolOp::avg, PoolOp::mul, PoolOp::outer, PoolOp::concat}) {
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.epochs = 50;
    cfg.embedding_size = 16;
    cfg.seed = 1;
    cfg.pooling = op;
    const TrainedModel m = train(catalog, cfg);
    train_ok &= m.training_accuracy >= 0.95;
    train_detail += to_string(op) + fmt("=%.3f ", m.training_accuracy);
  }
  report(train_ok, "synthetic-train-accuracy", train_detail + fmt("(%.0fs)", seconds_since(t0)));

  // Leave-one-source-out, averaged over seeds.
  const auto t1 = Clock::now();
  EvalGrid grid;
  grid.embedding_sizes = {32};
  grid.windows = {3};
  grid.base.learning_rate = 1e-3;
  grid.base.epochs = 20;
  double hybrid = 0.0, cnn = 0.0, lstm = 0.0;
  const int seeds = 5;
  for (int seed = 1; seed <= seeds; ++seed) {
    grid.base.seed = static_cast<std::uint64_t>(seed);
    hybrid += run_loo(records, Method::hybrid_max, grid).mean_accuracy / seeds;
    cnn += run_loo(records, Method::cnn, grid).mean_accuracy / seeds;
    lstm += run_loo(records, Method::lstm, grid).mean_accuracy / seeds;
  }
  const bool loo_ok = hybrid >= std::max(cnn, lstm) - 0.02;
  report(loo_ok, "synthetic-loo-hybrid-vs-branch",
         fmt("hybrid-max %.4f, cnn %.4f, lstm %.4f (%.0fs)", hybrid, cnn, lstm, seconds_since(t1)));

  const double total = seconds_since(t0);
  report(total < 600.0, "synthetic-runtime", fmt("%.0fs total, limit 600s", total));
}

void missing_attribute() {
  SyntheticOptions so;
  so.records_per_source = 60;
  so.attributes = {"price", "color", "time"};
  std::vector<AttributeRecord> records = generate_synthetic(so);
  const std::string held = sources_of(records).front();
  for (const char* v : {"Downtown", "Uptown", "Riverside", "Airport"}) records.push_back({held, "location", v});

  const RunResult r = run_one(records, held, Method::ondux, EvalGrid{});
  bool found = false, zero = false;
  for (const auto& a : r.metrics.per_attribute) {
    if (a.attribute != "location") continue;
    found = true;
    zero = a.precision == 0.0 && a.recall == 0.0 && a.f1 == 0.0 && a.support == 4;
  }
  report(found && zero, "missing-attribute", found ? (zero ? "location 0 / 0 / 0" : "location nonzero") : "no row");
}

void ondux_and_baselines() {
  const OnduxModel tens =
      ondux_fit(DomainCatalog({{"s", "n", "10"}, {"s", "n", "20"}, {"s", "n", "30"}, {"s", "t", "x"}}));
  const double mu = tens.numeric.at("n").mean, sigma = tens.numeric.at("n").stddev;
  bool kernel_ok = ondux_score_numeric(tens, "n", mu) == 1.0;
  kernel_ok &= std::abs(ondux_score_numeric(tens, "n", mu + sigma) - std::exp(-0.5)) <= 1e-9;
  kernel_ok &= std::abs(ondux_score_numeric(tens, "n", mu - sigma) - std::exp(-0.5)) <= 1e-9;
  for (double d = 0.0; d < 40.0; d += 0.37) {
    kernel_ok &= std::abs(ondux_score_numeric(tens, "n", mu + d) - ondux_score_numeric(tens, "n", mu - d)) <= 1e-12;
  }
  report(kernel_ok, "ondux-kernel", fmt("mu %.1f, sigma %.1f", mu, sigma));

  // Separable set: fit and score on the full synthetic domain.
  const std::vector<AttributeRecord> records = generate_synthetic(SyntheticOptions{});
  const DomainCatalog catalog(records);
  const OnduxModel ondux = ondux_fit(catalog);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 20;
  cfg.seed = 1;
  const MlpClassifier mlp = mlp_train(catalog, cfg, {64, 32});
  std::size_t ondux_hits = 0, mlp_hits = 0;
  for (const auto& r : records) {
    ondux_hits += ondux_predict(ondux, r.value) == r.attribute;
    mlp_hits += mlp.labels[static_cast<std::size_t>(mlp_predict(mlp, r.value))] == r.attribute;
  }
  const double n = static_cast<double>(records.size());
  const double ondux_acc = ondux_hits / n, mlp_acc = mlp_hits / n;
  report(ondux_acc >= 0.9 && mlp_acc >= 0.9, "baselines-separable", fmt("ondux %.4f, mlp %.4f", ondux_acc, mlp_acc));
}

void metrics_arithmetic() {
  ConfusionTally t({"a", "b"});
  t.add("a", "a", 2);
  t.add("a", "b", 1);
  const Metrics m = metrics(t);
  const AttributeMetrics& a = m.per_attribute.front();
  const bool ok = a.attribute == "a" && a.precision == 1.0 && a.recall == 2.0 / 3.0 && a.f1 == 0.8;
  report(ok, "metrics-arithmetic", fmt("P %.17g R %.17g F %.17g", a.precision, a.recall, a.f1));
}

void determinism_and_round_trip() {
  SyntheticOptions so;
  so.records_per_source = 40;
  const std::vector<AttributeRecord> records = generate_synthetic(so);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.embedding_size = 8;
  cfg.epochs = 3;
  cfg.seed = 5;
  const TrainedModel a = train(DomainCatalog(records), cfg);
  const TrainedModel b = train(DomainCatalog(records), cfg);
  const std::string text = save_checkpoint(a);
  const bool same_seed = text == save_checkpoint(b);

  const TrainedModel back = load_checkpoint(text);
  bool round_trip = save_checkpoint(back) == text;
  const auto pa = std::as_const(a.network).params();
  const auto pb = std::as_const(back.network).params();
  round_trip &= pa.size() == pb.size();
  for (std::size_t k = 0; round_trip && k < pa.size(); ++k) {
    round_trip &= std::equal(pa[k].values.begin(), pa[k].values.end(), pb[k].values.begin(), pb[k].values.end());
  }
  for (const auto& r : records) {
    round_trip &= back.network.predict_proba(encode(back.vocabulary, r.value)) ==
                  a.network.predict_proba(encode(a.vocabulary, r.value));
  }

  EvalGrid grid;
  grid.embedding_sizes = {8};
  grid.windows = {3};
  grid.base = cfg;
  grid.mlp = {16, 8};
  const std::string held = sources_of(records).back();
  std::vector<AttributeRecord> perturbed = records;
  for (auto& r : perturbed) {
    if (r.source == held) r.value = "~" + r.value + "#";
  }
  bool no_leak = true;
  for (Method m : {Method::hybrid_max, Method::mlp, Method::ondux}) {
    no_leak &= run_one(records, held, m, grid).model_digest == run_one(perturbed, held, m, grid).model_digest;
  }
  report(same_seed && round_trip && no_leak, "determinism-round-trip",
         std::string(same_seed ? "same-seed identical" : "same-seed DIFFERS") +
             (round_trip ? ", round trip exact" : ", round trip MISMATCH") +
             (no_leak ? ", no leakage" : ", LEAKAGE"));
}

void public_data_smoke() {
  const char* path = std::getenv("POOLNET_CORA");
  if (path == nullptr || !std::filesystem::exists(path)) {
    std::printf("SKIP %-32s POOLNET_CORA not set\n", "public-data-smoke");
    return;
  }
  const std::string p(path);
  const InputFormat f = p.size() > 6 && p.substr(p.size() - 6) == ".jsonl" ? InputFormat::record_per_line
                                                                            : InputFormat::delimited;
  std::ifstream in(p);
  const std::vector<AttributeRecord> records = ingest(in, f);
  EvalGrid grid;
  grid.embedding_sizes = {32};
  grid.windows = {3};
  grid.base.learning_rate = 1e-3;
  grid.base.epochs = 20;
  grid.base.seed = 1;
  std::vector<EvalReport> reports;
  for (Method m : all_methods()) reports.push_back(run_loo(records, m, grid));
  std::printf("%s", render_table(reports).c_str());
  report(reports.size() == all_methods().size(), "public-data-smoke", "completed for every method");
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria{gradient_correctness, layer_analytics, pooling_suite,
                                                    synthetic_end_to_end, missing_attribute, ondux_and_baselines,
                                                    metrics_arithmetic, determinism_and_round_trip,
                                                    public_data_smoke};
  for (const auto& c : criteria) {
    try {
      c();
    } catch (const std::exception& e) {
      report(false, "exception", e.what());
    }
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
