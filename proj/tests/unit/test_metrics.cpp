#include <doctest.h>

#include "checks.hpp"
#include "punk/error.hpp"
#include "punk/evaluate.hpp"
#include "punk/metrics.hpp"

using namespace punk;
using namespace punk::testing;

TEST_CASE("macro_f1 hand values") {
  CHECK(macro_f1({1, 0, 1, 0}, {1, 0, 1, 0}) == 1.0);
  F1Result r = binary_f1({1, 0, 0, 1}, {1, 1, 0, 0});
  REQUIRE(r.classes.size() == 2);
  CHECK(r.classes[0].name == "0");
  CHECK(r.classes[0].f1 == doctest::Approx(0.5));
  CHECK(r.classes[1].f1 == doctest::Approx(0.5));
  CHECK(r.macro_f1 == doctest::Approx(0.5));
  CHECK(r.classes[1].support == 2);
  CHECK_THROWS(binary_f1({1, 0}, {1}));
}

TEST_CASE("zero-division convention") {
  // every gold label is negative: class "1" has no positives at all
  F1Result r = binary_f1({0, 0, 0}, {0, 0, 0});
  CHECK(r.classes[0].f1 == 1.0);
  CHECK(r.classes[1].f1 == 0.0);
  CHECK(r.macro_f1 == 0.5);
  ClassScore s = score_class("x", 0, 0, 0);
  CHECK(s.precision == 0.0);
  CHECK(s.recall == 0.0);
  CHECK(s.f1 == 0.0);
}

TEST_CASE("majority closed form") {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const int n = 10 + static_cast<int>(rng.below(200));
    std::vector<int> gold(n);
    int neg = 0;
    for (auto& g : gold) {
      g = rng.bernoulli(0.8) ? 0 : 1;
      neg += g == 0;
    }
    if (neg == n) gold[0] = 1, --neg;
    const double q = static_cast<double>(neg) / n;
    CHECK(macro_f1(gold, std::vector<int>(n, 0)) == doctest::Approx(q / (q + 1)).epsilon(1e-12));
  }
  CHECK(0.838 / 1.838 == doctest::Approx(0.456).epsilon(0.001 / 0.456));
}

TEST_CASE("agreement with a confusion-matrix oracle") {
  Rng rng(9);
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + static_cast<int>(rng.below(60));
    std::vector<int> gold(n), pred(n);
    for (int i = 0; i < n; ++i) {
      gold[i] = static_cast<int>(rng.below(2));
      pred[i] = static_cast<int>(rng.below(2));
    }
    CHECK(std::abs(macro_f1(gold, pred) - oracle_macro_f1(gold, pred, {0, 1})) <= 1e-12);
  }
}

TEST_CASE("multi-class and multi-label") {
  std::vector<std::string> classes = {"a", "b", "c"};
  F1Result mc = multiclass_f1({"a", "b", "c", "a"}, {"a", "c", "c", "b"}, classes);
  CHECK(mc.macro_f1 == doctest::Approx(oracle_macro_f1({0, 1, 2, 0}, {0, 2, 2, 1}, {0, 1, 2})));

  // relabeling classes permutes rows and keeps the macro score
  F1Result swapped = multiclass_f1({"c", "b", "a", "c"}, {"c", "a", "a", "b"}, {"c", "b", "a"});
  CHECK(swapped.macro_f1 == doctest::Approx(mc.macro_f1).epsilon(1e-15));

  std::vector<std::set<std::string>> gold = {{"a"}, {"a", "b"}, {}, {"c"}};
  std::vector<std::set<std::string>> pred = {{"a"}, {"b"}, {"b"}, {}};
  F1Result ml = multilabel_f1(gold, pred, classes);
  REQUIRE(ml.classes.size() == 3);
  // a: tp1 fn1 -> 2/3; b: tp1 fp1 -> 2/3; c: fn1 -> 0
  CHECK(ml.classes[0].f1 == doctest::Approx(2.0 / 3));
  CHECK(ml.classes[1].f1 == doctest::Approx(2.0 / 3));
  CHECK(ml.classes[2].f1 == 0.0);
  CHECK(ml.macro_f1 == doctest::Approx(4.0 / 9));
  CHECK(multilabel_f1(gold, gold, classes).macro_f1 == 1.0);
}

TEST_CASE("report json schema") {
  EvalReport r;
  r.task = "unknown";
  r.split = "dev";
  r.result = binary_f1({1, 0}, {1, 1});
  r.seed = 4;
  auto j = r.to_json();
  for (const char* key : {"task", "split", "classes", "macro_f1", "seed", "config", "train_seconds"}) {
    CHECK(j.contains(key));
  }
  for (const char* key : {"name", "p", "r", "f1", "support"}) CHECK(j["classes"][0].contains(key));
  r.train_seconds = 1.5;
  CHECK(r.to_json()["train_seconds"] == 1.5);
}
