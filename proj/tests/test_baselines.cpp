// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "poolnet/baselines.hpp"
#include "poolnet/synthetic.hpp"

using namespace poolnet;

namespace {

DomainCatalog toy_catalog() {
  return DomainCatalog({{"s", "color", "black"},
                        {"s", "color", "black"},
                        {"s", "color", "white"},
                        {"s", "interior", "black leather"},
                        {"s", "interior", "gray cloth"},
                        {"s", "year", "2001"},
                        {"s", "year", "2002"},
                        {"s", "year", "2003"}});
}

}  // namespace

TEST_CASE("tokenizer") {
  CHECK(tokenize("Black Leather") == std::vector<std::string>{"black", "leather"});
  CHECK(tokenize("  $12,345.00 ") == std::vector<std::string>{"12", "345", "00"});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("CAF\xC3\x89\xC2\xA0noir") == std::vector<std::string>{"caf\xC3\xA9", "noir"});
  CHECK(tokenize("a\xE2\x80\x94" "b") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("numeric normalization") {
  CHECK(normalize_numeric("555-0100") == 5550100.0);
  CHECK(normalize_numeric("$12,345") == 12345.0);
  CHECK(normalize_numeric("3.5") == 3.5);
  CHECK_FALSE(normalize_numeric("black").has_value());
  CHECK_FALSE(normalize_numeric("12 miles").has_value());
  CHECK_FALSE(normalize_numeric("").has_value());
  CHECK_FALSE(normalize_numeric("1.2.3").has_value());
}

TEST_CASE("ondux fit: kinds and sample statistics") {
  const OnduxModel m = ondux_fit(toy_catalog());
  CHECK(m.kind.at("year") == AttributeKind::numeric);
  CHECK(m.kind.at("color") == AttributeKind::textual);
  CHECK(m.textual_count == 2);
  CHECK(m.numeric.at("year").mean == 2002.0);
  CHECK(m.numeric.at("year").stddev == doctest::Approx(1.0).epsilon(1e-14));

  const OnduxModel tens = ondux_fit(DomainCatalog({{"s", "n", "10"}, {"s", "n", "20"}, {"s", "n", "30"},
                                                   {"s", "t", "x"}}));
  CHECK(tens.numeric.at("n").stddev == doctest::Approx(10.0).epsilon(1e-14));

  const OnduxModel constant = ondux_fit(DomainCatalog({{"s", "n", "5"}, {"s", "n", "5"}, {"s", "t", "x"}}));
  CHECK(constant.numeric.at("n").stddev > 0.0);
}

TEST_CASE("ondux numeric kernel") {
  const OnduxModel m = ondux_fit(toy_catalog());
  CHECK(ondux_score_numeric(m, "year", 2002.0) == 1.0);
  CHECK(std::abs(ondux_score_numeric(m, "year", 2003.0) - std::exp(-0.5)) <= 1e-9);
  CHECK(std::abs(ondux_score_numeric(m, "year", 2001.0) - std::exp(-0.5)) <= 1e-9);
  for (double d : {0.1, 0.7, 2.5, 4.0}) {
    CHECK(std::abs(ondux_score_numeric(m, "year", 2002.0 + d) - ondux_score_numeric(m, "year", 2002.0 - d)) <=
          1e-12);
  }
  CHECK_THROWS_AS(ondux_score_numeric(m, "color", 1.0), UsageError);
  CHECK_THROWS_AS(ondux_score_textual(m, "year", "x"), UsageError);
}

TEST_CASE("ondux textual score") {
  const OnduxModel m = ondux_fit(toy_catalog());
  // Frozen from an independent evaluation of the scoring formula.
  CHECK(ondux_score_textual(m, "color", "black leather") == doctest::Approx(0.21030991785715247).epsilon(1e-12));
  CHECK(ondux_score_textual(m, "interior", "black leather") ==
        doctest::Approx(0.6051549589285763).epsilon(1e-12));
  CHECK(ondux_score_textual(m, "color", "purple") == 0.0);
  CHECK(ondux_predict(m, "black leather") == "interior");
  CHECK(ondux_predict(m, "white") == "color");
  CHECK(ondux_predict(m, "2004") == "year");
}

TEST_CASE("ondux ties resolve to the first attribute") {
  const OnduxModel m = ondux_fit(DomainCatalog({{"s", "b", "shared"}, {"s", "a", "shared"}}));
  CHECK(ondux_predict(m, "shared") == "a");
  CHECK(ondux_predict(m, "unseen") == "a");
  CHECK(ondux_predict(m, "") == "a");
}

TEST_CASE("token vocabulary and features") {
  const std::vector<AttributeRecord> recs{{"s", "a", "Red car"}, {"s", "b", "blue CAR"}};
  const TokenVocabulary v(recs);
  CHECK(v.tokens() == std::vector<std::string>{"blue", "car", "red"});
  CHECK(v.index_of("car") == 1);
  CHECK_FALSE(v.index_of("green").has_value());
  CHECK(v.features("car red car") == std::vector<int>{1, 2});
  CHECK(v.features("green") == std::vector<int>{});
}

TEST_CASE("mlp: bag of tokens ignores order, unseen tokens are harmless") {
  SyntheticOptions so;
  so.records_per_source = 40;
  const DomainCatalog cat(generate_synthetic(so));
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 3;
  cfg.seed = 1;
  const MlpClassifier clf = mlp_train(cat, cfg, {16, 8});
  CHECK(clf.labels == cat.attributes());
  CHECK(mlp_predict(clf, "red dark") == mlp_predict(clf, "dark red"));
  const Array1 p = clf.model.predict_proba(clf.vocabulary.features("qqqq zzzz"));
  CHECK(std::abs(p.sum() - 1.0) <= 1e-9);
  const int unseen = mlp_predict(clf, "qqqq zzzz");
  CHECK(unseen >= 0);
  CHECK(unseen < static_cast<int>(clf.labels.size()));

  const MlpClassifier again = mlp_train(cat, cfg, {16, 8});
  CHECK(again.model.predict_proba(clf.vocabulary.features("red")) ==
        clf.model.predict_proba(clf.vocabulary.features("red")));
}

TEST_CASE("mlp gradient matches central differences") {
  Rng rng(3);
  MlpModel m = MlpModel::create(6, 5, 4, 3, rng, 0.5);
  MlpModel g = m.zeros_like();
  const Example ex{{0, 2, 5}, 1};
  Rng unused(0);
  m.accumulate_gradient(ex, g, unused);
  const auto loss = [&] { return -std::log(m.predict_proba(ex.input)[ex.label]); };
  const GradCheckReport r = compare_gradients(m.params(), std::as_const(g).params(), loss, 1e-6, 1e-6);
  INFO(r.max_rel_error());
  CHECK(r.passed);
}
