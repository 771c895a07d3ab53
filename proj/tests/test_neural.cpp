#include <doctest.h>

#include <cmath>

#include "irony/error.hpp"
#include "irony/neural.hpp"
#include "irony/optim.hpp"
#include "support.hpp"

using namespace irony;

namespace {

double max_abs_diff(const Eigen::VectorXd& a, const std::vector<double>& b) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a(i) - b[static_cast<std::size_t>(i)]));
  return m;
}

// Central differences of the loss over every parameter, computed here without
// the library's grad_check helper.
double fd_max_rel_error(ModelParams p, const Eigen::MatrixXd& x, int y, const Eigen::VectorXd& mask,
                        double h) {
  const BackwardResult ref = backward(p, x, y, mask);
  const auto analytic = ref.grads.tensors();
  auto theta = p.w.tensors();
  double worst = 0.0;
  for (std::size_t t = 0; t < theta.size(); ++t) {
    for (std::size_t i = 0; i < theta[t].size(); ++i) {
      const double keep = theta[t][i];
      theta[t][i] = keep + h;
      const double lp = backward(p, x, y, mask).loss;
      theta[t][i] = keep - h;
      const double lm = backward(p, x, y, mask).loss;
      theta[t][i] = keep;
      const double num = (lp - lm) / (2 * h);
      const double a = analytic[t][i];
      worst = std::max(worst, std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-8}));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("zero weights") {
  auto d = DirectionWeights::zeros(4, 3);
  Eigen::VectorXd x = Eigen::VectorXd::Random(4);
  auto s = lstm_step(d, x, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3));
  CHECK(s.h.isZero(0.0));
  CHECK(s.c.isZero(0.0));

  Eigen::VectorXd c(3);
  c << 0.7, -2.0, 4.0;
  s = lstm_step(d, x, Eigen::VectorXd::Zero(3), c);
  for (int j = 0; j < 3; ++j) {
    CHECK(s.c(j) == doctest::Approx(0.5 * c(j)).epsilon(1e-15));
    CHECK(s.h(j) == doctest::Approx(0.5 * std::tanh(0.5 * c(j))).epsilon(1e-15));
  }
}

TEST_CASE("lstm step matches the straight-line oracle") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto p = init_params(4, 3, 0.0, seed);
    p.w.fwd.b = testing::random_matrix(12, 1, seed + 100).col(0);
    Eigen::VectorXd x = testing::random_matrix(4, 1, seed + 200).col(0);
    Eigen::VectorXd h = testing::random_matrix(3, 1, seed + 300).col(0);
    Eigen::VectorXd c = testing::random_matrix(3, 1, seed + 400, 2.0).col(0);
    auto got = lstm_step(p.w.fwd, x, h, c);
    testing::OracleState prev{{h.data(), h.data() + 3}, {c.data(), c.data() + 3}};
    auto want = testing::oracle_lstm_step(p.w.fwd, {x.data(), x.data() + 4}, prev);
    CHECK(max_abs_diff(got.h, want.h) < 1e-12);
    CHECK(max_abs_diff(got.c, want.c) < 1e-12);
  }
  CHECK_THROWS(lstm_step(DirectionWeights::zeros(4, 3), Eigen::VectorXd::Zero(5), Eigen::VectorXd::Zero(3),
                         Eigen::VectorXd::Zero(3)));
}

TEST_CASE("bilstm matches the oracle") {
  for (int L : {1, 2, 5, 9}) {
    auto p = init_params(6, 5, 0.0, static_cast<std::uint64_t>(L));
    Eigen::MatrixXd x = testing::random_matrix(L, 6, 77 + L);
    auto r = bilstm_encode(p, x);
    CHECK(r.size() == 10);
    CHECK(max_abs_diff(r, testing::oracle_bilstm(p, x)) < 1e-12);
    CHECK(std::abs(predict_proba(p, x) - testing::oracle_probability(p, x)) < 1e-12);
  }
}

TEST_CASE("length one: both directions read the same token") {
  auto p = init_params(3, 2, 0.0, 4);
  p.w.bwd = p.w.fwd;
  Eigen::MatrixXd x = testing::random_matrix(1, 3, 8);
  auto r = bilstm_encode(p, x);
  CHECK(r.head(2) == r.tail(2));
  CHECK_THROWS_AS(bilstm_encode(p, Eigen::MatrixXd(0, 3)), ValidationError);
}

TEST_CASE("tied directions: reversing the input swaps the halves") {
  auto p = init_params(5, 4, 0.0, 12);
  p.w.bwd = p.w.fwd;
  Eigen::MatrixXd x = testing::random_matrix(6, 5, 13);
  Eigen::MatrixXd rev = x.colwise().reverse();
  auto a = bilstm_encode(p, x);
  auto b = bilstm_encode(p, rev);
  CHECK((a.head(4) - b.tail(4)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((a.tail(4) - b.head(4)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("padding with a mask leaves the representation unchanged") {
  auto p = init_params(4, 3, 0.0, 21);
  for (int L : {1, 3, 6}) {
    Eigen::MatrixXd x = testing::random_matrix(L, 4, 31 + L);
    Eigen::MatrixXd padded(L + 4, 4);
    padded.topRows(L) = x;
    padded.bottomRows(4) = testing::random_matrix(4, 4, 99, 5.0);
    auto ref = bilstm_encode(p, x);
    CHECK((bilstm_encode_padded(p, padded, L) - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("padded batch path agrees with the unbatched path") {
  auto p = init_params(4, 3, 0.0, 22);
  std::vector<Eigen::MatrixXd> xs;
  for (int L : {3, 1, 7, 4}) xs.push_back(testing::random_matrix(L, 4, 50 + L));
  auto batch = bilstm_encode_batch(p, xs);
  auto probs = predict_proba_batch(p, xs);
  REQUIRE(batch.cols() == 4);
  for (std::size_t b = 0; b < xs.size(); ++b) {
    auto col = static_cast<Eigen::Index>(b);
    CHECK((batch.col(col) - bilstm_encode(p, xs[b])).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(probs[b] - predict_proba(p, xs[b])) < 1e-12);
  }
}

TEST_CASE("forward modes") {
  auto p = init_params(4, 3, 0.0, 5);
  Eigen::MatrixXd x = testing::random_matrix(3, 4, 6);
  Rng rng(1);
  CHECK(forward(p, x, Mode::kTrain, &rng).p == forward(p, x, Mode::kEval, nullptr).p);
  p.dropout_p = 0.5;
  CHECK(forward(p, x, Mode::kEval, nullptr).p == forward(p, x, Mode::kEval, nullptr).p);
  CHECK(forward(p, x, Mode::kEval, nullptr).dropout_mask.size() == 0);
  auto tr = forward(p, x, Mode::kTrain, &rng);
  CHECK(tr.dropout_mask.size() == 6);
  for (Eigen::Index i = 0; i < 6; ++i) CHECK((tr.dropout_mask(i) == 0.0 || tr.dropout_mask(i) == 2.0));
  p.w.w_out.setZero();
  p.w.b_out = 0.0;
  CHECK(forward(p, x, Mode::kEval, nullptr).p == 0.5);
  CHECK(forward(p, testing::random_matrix(7, 4, 1), Mode::kTrain, &rng).p == 0.5);
}

TEST_CASE("inverted dropout preserves expectation") {
  auto p = init_params(4, 8, 0.5, 3);
  Eigen::MatrixXd x = testing::random_matrix(4, 4, 4);
  Eigen::VectorXd r = bilstm_encode(p, x);
  Rng rng(11);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(r.size());
  for (int i = 0; i < 10000; ++i) sum += r.cwiseProduct(sample_dropout_mask(r.size(), 0.5, rng));
  Eigen::VectorXd mean = sum / 10000.0;
  int checked = 0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (std::abs(r(i)) > 0.1) {
      CHECK(std::abs(mean(i) - r(i)) <= 0.02 * std::abs(r(i)));
      ++checked;
    }
  }
  CHECK(checked > 0);
  Rng z(1);
  CHECK(sample_dropout_mask(5, 0.0, z) == Eigen::VectorXd::Ones(5));
}

TEST_CASE("binary cross-entropy") {
  CHECK(bce_loss(0.5, 1) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(bce_loss(1 - 1e-12, 1) == doctest::Approx(0.0).epsilon(1e-11));
  CHECK(bce_loss(0.9, 0) == doctest::Approx(2.302585).epsilon(1e-6));
  CHECK(std::isfinite(bce_loss(0.0, 1)));
  CHECK(std::isfinite(bce_loss(1.0, 0)));
  for (double p = 0.0; p <= 1.0; p += 0.01) {
    CHECK(bce_loss(p, 0) >= 0.0);
    CHECK(bce_loss(p, 1) >= 0.0);
  }
}

TEST_CASE("initialization") {
  auto p = init_params(7, 4, 0.1, 9);
  const double s = 0.5;
  check_shapes(p);
  CHECK(p.w.fwd.W.rows() == 16);
  CHECK(p.w.fwd.W.cols() == 7);
  CHECK(p.w.fwd.U.cols() == 4);
  CHECK(p.w.w_out.size() == 8);
  for (const auto* d : {&p.w.fwd, &p.w.bwd}) {
    CHECK(d->W.cwiseAbs().maxCoeff() <= s);
    CHECK(d->U.cwiseAbs().maxCoeff() <= s);
    CHECK(d->b.segment(0, 4).isZero(0.0));
    CHECK(d->b.segment(4, 4) == Eigen::VectorXd::Ones(4));
    CHECK(d->b.segment(8, 8).isZero(0.0));
  }
  CHECK(p.w.fwd.W != p.w.bwd.W);
  CHECK(init_params(7, 4, 0.1, 9).w.fwd.W == p.w.fwd.W);
  CHECK(p.w.parameter_count() == 2 * (16 * 7 + 16 * 4 + 16) + 8 + 1);
}

TEST_CASE("finite differences, k=6 H=4 L=3 seed 0") {
  auto p = init_params(6, 4, 0.0, 0);
  Eigen::MatrixXd x = testing::random_matrix(3, 6, 0);
  CHECK(fd_max_rel_error(p, x, 1, {}, 1e-5) < 1e-4);
  CHECK(fd_max_rel_error(p, x, 0, {}, 1e-5) < 1e-4);
}

TEST_CASE("finite differences under a dropout mask") {
  auto p = init_params(5, 3, 0.5, 2);
  Eigen::MatrixXd x = testing::random_matrix(4, 5, 3);
  Rng rng(4);
  Eigen::VectorXd mask = sample_dropout_mask(6, 0.5, rng);
  CHECK(fd_max_rel_error(p, x, 1, mask, 1e-5) < 1e-4);
  CHECK_THROWS_AS(backward(p, x, 1, Eigen::VectorXd::Ones(5)), ValidationError);
}

TEST_CASE("input gradient matches finite differences") {
  auto p = init_params(4, 3, 0.0, 8);
  Eigen::MatrixXd x = testing::random_matrix(5, 4, 9);
  auto res = backward(p, x, 1, {});
  REQUIRE(res.dx.rows() == 5);
  for (Eigen::Index t = 0; t < 5; ++t) {
    for (Eigen::Index q = 0; q < 4; ++q) {
      Eigen::MatrixXd a = x, b = x;
      a(t, q) += 1e-5;
      b(t, q) -= 1e-5;
      const double num = (backward(p, a, 1, {}).loss - backward(p, b, 1, {}).loss) / 2e-5;
      CHECK(relative_error(res.dx(t, q), num) < 1e-4);
    }
  }
}

TEST_CASE("closed-form output layer gradient") {
  auto p = init_params(4, 3, 0.0, 10);
  p.w.w_out.setZero();
  p.w.b_out = 0.3;
  Eigen::MatrixXd x = testing::random_matrix(3, 4, 11);
  auto r = bilstm_encode(p, x);
  const double pr = sigmoid(0.3);
  for (int y : {0, 1}) {
    auto res = backward(p, x, y, {});
    CHECK(res.p == doctest::Approx(pr));
    CHECK((res.grads.w_out - (pr - y) * r).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(res.grads.b_out == doctest::Approx(pr - y));
  }
}

TEST_CASE("saturated correct prediction has vanishing gradients") {
  auto p = init_params(4, 3, 0.0, 12);
  Eigen::MatrixXd x = testing::random_matrix(3, 4, 13);
  p.w.b_out = 40.0;
  auto pos = backward(p, x, 1, {});
  p.w.b_out = -40.0;
  auto neg = backward(p, x, 0, {});
  for (const auto* res : {&pos, &neg}) {
    for (auto t : res->grads.tensors())
      for (double g : t) CHECK(std::abs(g) < 1e-9);
    CHECK(res->loss < 1e-9);
  }
}

TEST_CASE("gradients stay finite on extreme inputs") {
  auto p = init_params(4, 3, 0.0, 14);
  Eigen::MatrixXd x = testing::random_matrix(6, 4, 15, 1e3);
  auto res = backward(p, x, 1, {});
  CHECK(res.grads.all_finite());
  CHECK(std::isfinite(res.loss));
}
