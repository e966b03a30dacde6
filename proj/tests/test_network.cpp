// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "poolnet/training.hpp"

using namespace poolnet;

namespace {

NetworkConfig small(PoolOp op, BranchMode mode = BranchMode::hybrid) {
  NetworkConfig c;
  c.vocab_size = 12;
  c.num_classes = 3;
  c.embedding_dim = 4;
  c.window = 3;
  c.pooling = op;
  c.branch_mode = mode;
  c.drop_rate = 0.25;
  c.init_scale = 0.3;
  return c;
}

const std::vector<int> kInput{0, 3, 4, 5, 3, 6, 7, 1};

}  // namespace

TEST_CASE("output is a distribution for every pooling and branch") {
  for (PoolOp op : {PoolOp::max, PoolOp::sum, PoolOp::avg, PoolOp::mul, PoolOp::outer, PoolOp::concat}) {
    for (BranchMode mode : {BranchMode::hybrid, BranchMode::cnn_only, BranchMode::lstm_only}) {
      Rng rng(1);
      const HybridNetwork net = HybridNetwork::create(small(op, mode), rng);
      const Array1 p = net.predict_proba(kInput);
      CHECK(p.size() == 3);
      CHECK(std::abs(p.sum() - 1.0) <= 1e-9);
      CHECK(p.minCoeff() >= 0.0);
      // Short inputs are padded for the convolution.
      const std::vector<int> empty_value{0, 1};
      CHECK(std::abs(net.predict_proba(empty_value).sum() - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("cnn-only network ignores the combiner") {
  Rng rng(2);
  const HybridNetwork net = HybridNetwork::create(small(PoolOp::outer, BranchMode::cnn_only), rng);
  ForwardCache c;
  network_forward(net, kInput, Mode::test, nullptr, &c);
  CHECK(c.pooled == c.cnn_branch);
  CHECK(net.feature_dim() == net.cnn_hidden.out_dim());
}

TEST_CASE("padding") {
  const std::vector<int> two{0, 1};
  CHECK(pad_to_window(two, 4, 1) == std::vector<int>{0, 1, 1, 1});
  CHECK(pad_to_window(kInput, 3, 1) == kInput);
}

TEST_CASE("creation and forward are deterministic") {
  Rng a(5), b(5);
  const HybridNetwork n1 = HybridNetwork::create(small(PoolOp::max), a);
  const HybridNetwork n2 = HybridNetwork::create(small(PoolOp::max), b);
  CHECK(n1.predict_proba(kInput) == n2.predict_proba(kInput));
  Rng d1(9), d2(9);
  CHECK(network_forward(n1, kInput, Mode::train, &d1) == network_forward(n2, kInput, Mode::train, &d2));
}

TEST_CASE("backward rejects stale or test-mode caches") {
  Rng rng(3);
  const HybridNetwork net = HybridNetwork::create(small(PoolOp::max), rng);
  const HybridNetwork other = net;
  HybridNetwork grad = net.zeros_like();
  ForwardCache empty;
  CHECK_THROWS_AS(network_backward(net, empty, 0, grad), UsageError);
  ForwardCache test_cache;
  network_forward(net, kInput, Mode::test, nullptr, &test_cache);
  CHECK_THROWS_AS(network_backward(net, test_cache, 0, grad), UsageError);
  Rng d(1);
  ForwardCache foreign;
  network_forward(other, kInput, Mode::train, &d, &foreign);
  CHECK_THROWS_AS(network_backward(net, foreign, 0, grad), UsageError);
}

TEST_CASE("gradient check passes for every pooling and branch") {
  for (PoolOp op : {PoolOp::max, PoolOp::sum, PoolOp::avg, PoolOp::mul, PoolOp::outer, PoolOp::concat}) {
    for (BranchMode mode : {BranchMode::hybrid, BranchMode::cnn_only, BranchMode::lstm_only}) {
      GradCheckOptions o;
      o.network.pooling = op;
      o.network.branch_mode = mode;
      const GradCheckReport r = grad_check(o);
      INFO(to_string(op), " ", to_string(mode), " ", r.max_rel_error());
      CHECK(r.passed);
      CHECK(r.max_rel_error() <= 1e-4);
    }
  }
}

TEST_CASE("gradient check catches a scaled gradient and refuses dropout") {
  GradCheckOptions o;
  o.analytic_scale = 2.0;
  CHECK_FALSE(grad_check(o).passed);
  GradCheckOptions d;
  d.network.drop_rate = 0.25;
  CHECK_THROWS_AS(grad_check(d), ArgumentError);
}

TEST_CASE("a saturated correct prediction yields a zero gradient") {
  NetworkConfig cfg = small(PoolOp::max);
  cfg.drop_rate = 0.0;
  Rng rng(4);
  HybridNetwork net = HybridNetwork::create(cfg, rng);
  net.output.bias[2] = 1e4;
  HybridNetwork grad = net.zeros_like();
  Rng d(1);
  const double loss = net.accumulate_gradient({kInput, 2}, grad, d);
  CHECK(loss == 0.0);
  for (const auto& p : std::as_const(grad).params()) {
    for (double g : p.values) CHECK(g == 0.0);
  }
}
