#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "irony/rng.hpp"

namespace irony {

// Gate blocks are stacked row-wise in the order input, forget, output, cell:
// rows [0,H) = i, [H,2H) = f, [2H,3H) = o, [3H,4H) = g.
struct DirectionWeights {
  Eigen::MatrixXd W;  // 4H x k
  Eigen::MatrixXd U;  // 4H x H
  Eigen::VectorXd b;  // 4H

  static DirectionWeights zeros(int input_dim, int hidden);
};

// Every trainable tensor of the classifier. Also used for gradients and for the
// Adam moment estimates, which share the shape tree.
struct Weights {
  DirectionWeights fwd;
  DirectionWeights bwd;
  Eigen::VectorXd w_out;  // 2H
  double b_out = 0.0;

  static Weights zeros(int input_dim, int hidden);

  // Flat views in a fixed order: fwd.W, fwd.U, fwd.b, bwd.W, bwd.U, bwd.b, w_out, b_out.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  static const std::vector<std::string>& tensor_names();

  std::size_t parameter_count() const;
  void set_zero();
  // this += scale * other
  void add_scaled(const Weights& other, double scale);
  bool same_shape(const Weights& other) const;
  bool all_finite() const;
};

using Gradients = Weights;

struct ModelParams {
  int input_dim = 0;
  int hidden = 0;
  double dropout_p = 0.0;
  std::uint64_t seed = 0;
  Weights w;
};

// Forget-gate bias 1, other biases 0, every weight matrix (and w_out) uniform in
// [-1/sqrt(H), 1/sqrt(H)].
ModelParams init_params(int input_dim, int hidden, double dropout_p, std::uint64_t seed);

struct LstmState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

// i = s(W_i x + U_i h + b_i), f, o likewise, g = tanh(...)
// c' = f*c + i*g, h' = o*tanh(c')
LstmState lstm_step(const DirectionWeights& dir, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev);

// Forward direction over rows 0..L-1 and backward over L-1..0, both from zero
// state; returns h_fwd(L) ++ h_bwd(1). x is L x k with L >= 1.
Eigen::VectorXd bilstm_encode(const ModelParams& params, const Eigen::MatrixXd& x);

// As above for a sequence padded past its true length; padded rows are masked
// out of both directions.
Eigen::VectorXd bilstm_encode_padded(const ModelParams& params, const Eigen::MatrixXd& padded,
                                     Eigen::Index length);

// Padded-batch path. Column b of the result equals bilstm_encode(xs[b]) up to
// floating-point summation order.
Eigen::MatrixXd bilstm_encode_batch(const ModelParams& params, std::span<const Eigen::MatrixXd> xs);

enum class Mode { kTrain, kEval };

struct ForwardResult {
  double p = 0.5;
  Eigen::VectorXd representation;  // pre-dropout 2H vector
  Eigen::VectorXd dropout_mask;    // 0 or 1/(1-p) per slot; empty in eval mode
};

inline constexpr double kProbEpsilon = 1e-12;

// Inverted dropout on the 2H representation in train mode (requires rng);
// eval mode is deterministic.
ForwardResult forward(const ModelParams& params, const Eigen::MatrixXd& x, Mode mode, Rng* rng);
double predict_proba(const ModelParams& params, const Eigen::MatrixXd& x);
std::vector<double> predict_proba_batch(const ModelParams& params,
                                        std::span<const Eigen::MatrixXd> xs);

Eigen::VectorXd sample_dropout_mask(Eigen::Index size, double p, Rng& rng);

// -[y ln p + (1-y) ln(1-p)] with p clamped to [1e-12, 1-1e-12].
double bce_loss(double p, int y);

double sigmoid(double z);

struct BackwardResult {
  double loss = 0.0;
  double p = 0.5;
  Gradients grads;
  Eigen::MatrixXd dx;  // dloss/dx, same shape as x
};

// Exact gradients of bce_loss(forward(x)) under the given dropout mask (empty
// mask = no dropout). The mask must be the one recorded by the train-mode
// forward call.
BackwardResult backward(const ModelParams& params, const Eigen::MatrixXd& x, int y,
                        const Eigen::VectorXd& dropout_mask);

void check_shapes(const ModelParams& params);

}  // namespace irony
