#include <doctest.h>

#include <algorithm>
#include <random>

#include "irony/error.hpp"
#include "irony/metrics.hpp"

using namespace irony;

TEST_CASE("counting example") {
  std::vector<int> p = {1, 1, 1, 0, 0}, g = {1, 1, 0, 1, 0};
  auto m = compute_metrics(p, g);
  CHECK(m.tp == 2);
  CHECK(m.fp == 1);
  CHECK(m.fn == 1);
  CHECK(m.tn == 1);
  CHECK(m.accuracy == doctest::Approx(0.6));
  CHECK(m.precision == doctest::Approx(2.0 / 3));
  CHECK(m.recall == doctest::Approx(2.0 / 3));
  CHECK(m.f1 == doctest::Approx(2.0 / 3));
}

TEST_CASE("perfect and degenerate predictions") {
  std::vector<int> g = {1, 0, 1, 0};
  auto m = compute_metrics(g, g);
  CHECK(m.accuracy == 1.0);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.f1 == 1.0);
  std::vector<int> zeros(4, 0);
  auto z = compute_metrics(zeros, g);
  CHECK(z.precision == 0.0);
  CHECK(z.recall == 0.0);
  CHECK(z.f1 == 0.0);
  CHECK(z.accuracy == 0.5);
}

TEST_CASE("bad input") {
  std::vector<int> a = {1, 0}, b = {1};
  CHECK_THROWS_AS(compute_metrics(a, b), ValidationError);
  CHECK_THROWS_AS(compute_metrics(std::vector<int>{}, std::vector<int>{}), ValidationError);
}

TEST_CASE("F1 values from reference precision and recall pairs") {
  CHECK(std::abs(f1_from_pr(0.6440, 0.6096) - 0.6263) <= 5e-4);
  CHECK(std::abs(f1_from_pr(0.6369, 0.8447) - 0.7262) <= 5e-4);
  CHECK(std::abs(f1_from_pr(0.2568, 0.3344) - 0.2905) <= 5e-4);
  CHECK(f1_from_pr(0.0, 0.0) == 0.0);
}

TEST_CASE("metric invariants on random predictions") {
  std::mt19937_64 gen(5);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 40);
    std::vector<int> p(n), g(n), pf(n), gf(n);
    for (int i = 0; i < n; ++i) {
      p[i] = coin(gen);
      g[i] = coin(gen);
      pf[i] = 1 - p[i];
      gf[i] = 1 - g[i];
    }
    auto m = compute_metrics(p, g);
    CHECK(m.total() == static_cast<std::size_t>(n));
    CHECK(m.accuracy == doctest::Approx(double(m.tp + m.tn) / n));
    if (m.precision + m.recall > 0) {
      CHECK(m.f1 >= std::min(m.precision, m.recall) - 1e-15);
      CHECK(m.f1 <= std::max(m.precision, m.recall) + 1e-15);
    }
    auto f = compute_metrics(pf, gf);
    CHECK(f.tp == m.tn);
    CHECK(f.fp == m.fn);
    CHECK(f.fn == m.fp);
    CHECK(f.tn == m.tp);
    CHECK(f.accuracy == m.accuracy);
  }
}

TEST_CASE("json round trip keeps full precision") {
  auto m = metrics_from_counts(3, 4, 5, 7);
  auto j = metrics_to_json(m);
  for (auto key : {"accuracy", "precision", "recall", "f1", "tp", "fp", "fn", "tn"}) CHECK(j.contains(key));
  CHECK(j.size() == 8);
  auto back = metrics_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.f1 == m.f1);
  CHECK(back.precision == m.precision);
  CHECK(back.tn == 7);
  CHECK(format_metrics(metrics_from_counts(1, 1, 0, 2)) == "acc 0.7500  P 0.5000  R 1.0000  F1 0.6667");
}
