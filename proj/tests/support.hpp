#pragma once

// Shared fixtures and independent reference implementations for the tests.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "irony/baseline.hpp"
#include "irony/corpus.hpp"
#include "irony/neural.hpp"

namespace testing {

namespace fs = std::filesystem;

inline fs::path data_dir() { return IRONY_TEST_DATA_DIR; }

// Fresh empty directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("irony_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Straight-line evaluation of the LSTM gate equations with scalar loops.
struct OracleState {
  std::vector<double> h, c;
};

inline double oracle_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline OracleState oracle_lstm_step(const irony::DirectionWeights& d, const std::vector<double>& x,
                                    const OracleState& prev) {
  const int H = static_cast<int>(prev.h.size());
  const int k = static_cast<int>(x.size());
  auto pre = [&](int gate, int j) {
    const int row = gate * H + j;
    double s = d.b(row);
    for (int q = 0; q < k; ++q) s += d.W(row, q) * x[q];
    for (int q = 0; q < H; ++q) s += d.U(row, q) * prev.h[q];
    return s;
  };
  OracleState next{std::vector<double>(H), std::vector<double>(H)};
  for (int j = 0; j < H; ++j) {
    const double i = oracle_sigmoid(pre(0, j));
    const double f = oracle_sigmoid(pre(1, j));
    const double o = oracle_sigmoid(pre(2, j));
    const double g = std::tanh(pre(3, j));
    next.c[j] = f * prev.c[j] + i * g;
    next.h[j] = o * std::tanh(next.c[j]);
  }
  return next;
}

inline std::vector<double> row_of(const Eigen::MatrixXd& x, Eigen::Index t) {
  std::vector<double> r(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index q = 0; q < x.cols(); ++q) r[static_cast<std::size_t>(q)] = x(t, q);
  return r;
}

inline std::vector<double> oracle_bilstm(const irony::ModelParams& p, const Eigen::MatrixXd& x) {
  const auto H = static_cast<std::size_t>(p.hidden);
  OracleState f{std::vector<double>(H, 0.0), std::vector<double>(H, 0.0)};
  OracleState b = f;
  for (Eigen::Index t = 0; t < x.rows(); ++t) f = oracle_lstm_step(p.w.fwd, row_of(x, t), f);
  for (Eigen::Index t = x.rows() - 1; t >= 0; --t) b = oracle_lstm_step(p.w.bwd, row_of(x, t), b);
  std::vector<double> out = f.h;
  out.insert(out.end(), b.h.begin(), b.h.end());
  return out;
}

inline double oracle_probability(const irony::ModelParams& p, const Eigen::MatrixXd& x) {
  const auto r = oracle_bilstm(p, x);
  double z = p.w.b_out;
  for (std::size_t j = 0; j < r.size(); ++j) z += p.w.w_out(static_cast<Eigen::Index>(j)) * r[j];
  return oracle_sigmoid(z);
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                                     double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(gen);
  return m;
}

// Twenty short sequences whose token vectors are drawn around +mu for
// positives and -mu for negatives.
struct ToySet {
  std::vector<Eigen::MatrixXd> xs;
  std::vector<int> ys;
};

inline ToySet separable_sequences(int n, int k, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> len(2, 6);
  Eigen::VectorXd mu(k);
  for (int q = 0; q < k; ++q) mu(q) = u(gen);
  mu.normalize();
  ToySet s;
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    const int L = len(gen);
    Eigen::MatrixXd x(L, k);
    for (int t = 0; t < L; ++t) {
      for (int q = 0; q < k; ++q) x(t, q) = (y == 1 ? 1.0 : -1.0) * mu(q) + 0.3 * u(gen);
    }
    s.xs.push_back(x);
    s.ys.push_back(y);
  }
  return s;
}

// Projected-free full-batch subgradient descent on
// 0.5 |w|^2 + C sum_i max(0, 1 - y_i (w.x_i + b)), tracking the best iterate.
inline double subgradient_svm_objective(const std::vector<std::vector<double>>& X, const std::vector<int>& y01,
                                        double C, int iterations) {
  const std::size_t n = X.size(), d = X.front().size();
  std::vector<double> w(d, 0.0), gw(d);
  double b = 0.0;
  auto objective = [&]() {
    double s = 0.0;
    for (double wi : w) s += 0.5 * wi * wi;
    for (std::size_t i = 0; i < n; ++i) {
      const double yi = y01[i] == 1 ? 1.0 : -1.0;
      double m = b;
      for (std::size_t q = 0; q < d; ++q) m += w[q] * X[i][q];
      s += C * std::max(0.0, 1.0 - yi * m);
    }
    return s;
  };
  double best = objective();
  for (int t = 1; t <= iterations; ++t) {
    gw = w;
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double yi = y01[i] == 1 ? 1.0 : -1.0;
      double m = b;
      for (std::size_t q = 0; q < d; ++q) m += w[q] * X[i][q];
      if (yi * m < 1.0) {
        for (std::size_t q = 0; q < d; ++q) gw[q] -= C * yi * X[i][q];
        gb -= C * yi;
      }
    }
    const double eta = 0.05 / std::sqrt(static_cast<double>(t));
    for (std::size_t q = 0; q < d; ++q) w[q] -= eta * gw[q];
    b -= eta * gb;
    best = std::min(best, objective());
  }
  return best;
}

inline irony::SparseDoc dense_to_sparse(const std::vector<double>& v) {
  irony::SparseDoc doc;
  for (std::size_t q = 0; q < v.size(); ++q) {
    if (v[q] != 0.0) doc.entries.emplace_back(static_cast<std::uint32_t>(q), v[q]);
  }
  return doc;
}

// 200 random points labeled by a random hyperplane, with a margin gap.
struct DenseSet {
  std::vector<std::vector<double>> X;
  std::vector<int> y;
};

inline DenseSet random_separable(int n, int d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> w(d);
  for (auto& wi : w) wi = g(gen);
  DenseSet s;
  while (static_cast<int>(s.X.size()) < n) {
    std::vector<double> x(d);
    double m = 0.3;
    for (int q = 0; q < d; ++q) {
      x[q] = g(gen);
      m += w[q] * x[q];
    }
    if (std::abs(m) < 0.5) continue;
    s.X.push_back(x);
    s.y.push_back(m > 0 ? 1 : 0);
  }
  return s;
}

// Small GloVe-format file: `n` tokens "w0".."w{n-1}" plus the given extras
// first, each with a deterministic vector.
inline std::string toy_glove(const std::vector<std::string>& extras, int n, int dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::string text;
  auto line = [&](const std::string& tok) {
    text += tok;
    for (int q = 0; q < dim; ++q) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " %.6f", u(gen));
      text += buf;
    }
    text += "\n";
  };
  for (const auto& e : extras) line(e);
  for (int i = 0; i < n; ++i) line("w" + std::to_string(i));
  return text;
}

// Labeled toy tweets whose class is signalled by distinct vocabulary.
inline std::vector<irony::Tweet> toy_tweets(int n, std::uint64_t seed) {
  static const std::vector<std::string> pos = {"love", "great", "wonderful", "yay", "Mondays", "AGAIN"};
  static const std::vector<std::string> neg = {"rain", "sad", "bus", "late", "cold", "work"};
  static const std::vector<std::string> shared = {"the", "a", "is", "today", "so"};
  std::mt19937_64 gen(seed);
  std::vector<irony::Tweet> out;
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    const auto& cls = y == 1 ? pos : neg;
    std::string text;
    for (int t = 0; t < 5; ++t) {
      const auto& bag = (t % 2 == 0) ? cls : shared;
      if (!text.empty()) text += ' ';
      text += bag[gen() % bag.size()];
    }
    out.push_back({i + 1, y, text});
  }
  return out;
}

}  // namespace testing
