#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "irony/embed.hpp"
#include "irony/error.hpp"
#include "irony/optim.hpp"
#include "support.hpp"

using namespace irony;

namespace {

// Scalar Adam written out from the update rule.
struct ScalarAdam {
  double m = 0, v = 0;
  int t = 0;
  double step(double theta, double g, double lr) {
    ++t;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t));
    const double vh = v / (1 - std::pow(0.999, t));
    return theta - lr * mh / (std::sqrt(vh) + 1e-8);
  }
};

double adam_scalar(double theta, double g, double lr, std::int64_t t, double& m, double& v) {
  AdamHyper h;
  h.lr = lr;
  adam_update(std::span<double>(&theta, 1), std::span<const double>(&g, 1), std::span<double>(&m, 1),
              std::span<double>(&v, 1), t, h);
  return theta;
}

EncodedExample random_example(int L, int k, std::uint64_t seed, int y) {
  EncodedExample ex;
  ex.x = testing::random_matrix(L, k, seed);
  ex.y = y;
  ex.tokens.assign(static_cast<std::size_t>(L), "t");
  return ex;
}

}  // namespace

TEST_CASE("first Adam step") {
  double m = 0, v = 0;
  const double theta = adam_scalar(0.0, 2.0, 1e-4, 1, m, v);
  CHECK(m == doctest::Approx(0.2));
  CHECK(v == doctest::Approx(0.004));
  CHECK(theta == doctest::Approx(-1e-4 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
  CHECK(std::abs(theta + 1e-4) < 1e-6);

  for (double g : {1.0, -1.0, 0.5, 3.0}) {
    double m1 = 0, v1 = 0;
    CHECK(std::abs(std::abs(adam_scalar(0.0, g, 1e-4, 1, m1, v1)) - 1e-4) < 1e-6);
  }
}

TEST_CASE("zero gradient with zero state changes nothing") {
  auto p = init_params(3, 2, 0.0, 1);
  auto before = p;
  auto state = AdamState::for_params(p);
  adam_step(state, p, Weights::zeros(3, 2));
  CHECK(p.w.fwd.W == before.w.fwd.W);
  CHECK(p.w.w_out == before.w.w_out);
  CHECK(p.w.b_out == before.w.b_out);
  CHECK(state.t == 1);
}

TEST_CASE("Adam minimizes a scalar quadratic") {
  double theta = 1.0, m = 0, v = 0;
  ScalarAdam ref;
  double ref_theta = 1.0;
  int steps = 0;
  for (std::int64_t t = 1; t <= 2000; ++t) {
    const double g = 2 * theta;
    theta = adam_scalar(theta, g, 0.01, t, m, v);
    ref_theta = ref.step(ref_theta, 2 * ref_theta, 0.01);
    CHECK(theta == doctest::Approx(ref_theta).epsilon(1e-12));
    ++steps;
  }
  CHECK(steps == 2000);
  CHECK(std::abs(theta) < 1e-3);
}

TEST_CASE("Adam first step is scale-free") {
  auto p = init_params(3, 2, 0.0, 1);
  auto q = p;
  Gradients g = Weights::zeros(3, 2);
  auto gt = g.tensors();
  std::uint64_t s = 1;
  for (auto t : gt)
    for (auto& x : t) x = std::sin(static_cast<double>(s++));
  Gradients g2 = Weights::zeros(3, 2);
  g2.add_scaled(g, 2.0);
  auto sp = AdamState::for_params(p), sq = AdamState::for_params(q);
  auto before = p;
  adam_step(sp, p, g);
  adam_step(sq, q, g2);
  auto a = p.w.tensors(), b = q.w.tensors(), o = before.w.tensors();
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t i = 0; i < a[t].size(); ++i) CHECK(std::abs((a[t][i] - o[t][i]) - (b[t][i] - o[t][i])) < 1e-6);
}

TEST_CASE("Adam is deterministic and rejects non-finite gradients") {
  auto p1 = init_params(3, 2, 0.0, 4), p2 = p1;
  Gradients g = Weights::zeros(3, 2);
  g.fwd.W.setConstant(0.3);
  g.w_out.setConstant(-1.0);
  auto s1 = AdamState::for_params(p1), s2 = AdamState::for_params(p2);
  for (int i = 0; i < 5; ++i) {
    adam_step(s1, p1, g);
    adam_step(s2, p2, g);
  }
  CHECK(p1.w.fwd.W == p2.w.fwd.W);
  CHECK(p1.w.w_out == p2.w.w_out);

  auto snapshot = p1;
  g.fwd.U(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(s1, p1, g), NumericError);
  CHECK(p1.w.fwd.W == snapshot.w.fwd.W);

  AdamHyper bad;
  bad.lr = -1;
  CHECK_THROWS_AS(AdamState::for_params(p1, bad), ValidationError);
}

TEST_CASE("row Adam keeps per-row step counts") {
  RowAdam r;
  std::vector<double> a = {0.0, 0.0}, b = {0.0};
  std::vector<double> ga = {1.0, -1.0}, gb = {5.0};
  r.step("a", a, ga);
  r.step("a", a, ga);
  r.step("b", b, gb);
  CHECK(b[0] == doctest::Approx(-1e-4).epsilon(1e-6));
  CHECK(a[0] == doctest::Approx(-2e-4).epsilon(1e-6));
  CHECK(a[1] == doctest::Approx(2e-4).epsilon(1e-6));
}

TEST_CASE("grad_check on the BiLSTM") {
  auto p = init_params(6, 4, 0.3, 0);
  auto ex = random_example(3, 6, 0, 1);
  auto fine = grad_check(p, ex, 1e-5);
  CHECK(fine.max_rel_error < 1e-4);
  CHECK(fine.checked == p.w.parameter_count());
  auto coarse = grad_check(p, ex, 1e-1);
  CHECK(coarse.max_rel_error > fine.max_rel_error);
}

TEST_CASE("finite differences of a linear probe are near exact") {
  // Logistic regression on the mean token vector.
  Eigen::MatrixXd x = testing::random_matrix(4, 5, 3);
  Eigen::VectorXd mean = x.colwise().mean().transpose();
  std::vector<double> w = {0.1, -0.2, 0.3, 0.05, -0.4};
  const int y = 1;
  auto loss = [&]() {
    double z = 0;
    for (int q = 0; q < 5; ++q) z += w[static_cast<std::size_t>(q)] * mean(q);
    return bce_loss(sigmoid(z), y);
  };
  double z = 0;
  for (int q = 0; q < 5; ++q) z += w[static_cast<std::size_t>(q)] * mean(q);
  std::vector<double> grad(5);
  for (int q = 0; q < 5; ++q) grad[static_cast<std::size_t>(q)] = (sigmoid(z) - y) * mean(q);
  CHECK(max_relative_error(w, grad, loss, 1e-5) < 1e-8);
}

TEST_CASE("relative error") {
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(1.0, 2.0) == doctest::Approx(0.5));
  CHECK(relative_error(0.0, 1e-10) == doctest::Approx(1e-2));
}

TEST_CASE("early stopping trace") {
  EarlyStopState s;
  s.patience = 5;
  const std::vector<double> f1 = {0.60, 0.62, 0.62, 0.62, 0.62, 0.62, 0.62};
  std::vector<StopDecision> decisions;
  for (std::size_t e = 0; e < f1.size(); ++e) {
    auto u = early_stop_update(s, static_cast<int>(e) + 1, f1[e]);
    decisions.push_back(u.decision);
    CHECK(s.epochs_since_best <= s.patience);
  }
  for (std::size_t e = 0; e + 1 < decisions.size(); ++e) CHECK(decisions[e] == StopDecision::kContinue);
  CHECK(decisions.back() == StopDecision::kStop);
  CHECK(s.best_epoch == 2);
}

TEST_CASE("early stopping never stops on strict improvement") {
  EarlyStopState s;
  s.patience = 1;
  for (int e = 1; e <= 100; ++e) {
    auto u = early_stop_update(s, e, e / 100.0);
    CHECK(u.decision == StopDecision::kContinue);
    CHECK(u.improved);
  }
}

TEST_CASE("first epoch always continues and ties keep the earlier epoch") {
  for (double f : {0.0, 0.5, 1.0}) {
    EarlyStopState s;
    s.patience = 1;
    auto u = early_stop_update(s, 1, f);
    CHECK(u.decision == StopDecision::kContinue);
    CHECK(u.best_epoch == 1);
  }
  EarlyStopState s;
  early_stop_update(s, 1, 0.5);
  early_stop_update(s, 2, 0.5 + 1e-10);
  CHECK(s.best_epoch == 1);
  CHECK_THROWS_AS(early_stop_update(s, 3, 1.5), ValidationError);
}
