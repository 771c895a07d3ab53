#include "irony/optim.hpp"

#include <algorithm>
#include <cmath>

#include "irony/error.hpp"

namespace irony {

namespace {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

long double lsigmoid(long double z) { return 1.0L / (1.0L + std::exp(-z)); }

LVector final_hidden(const DirectionWeights& d, const LMatrix& x, bool reverse) {
  const LMatrix W = d.W.cast<long double>();
  const LMatrix U = d.U.cast<long double>();
  const LVector b = d.b.cast<long double>();
  const Eigen::Index H = U.cols();
  LVector h = LVector::Zero(H), c = LVector::Zero(H);
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    const Eigen::Index t = reverse ? x.rows() - 1 - s : s;
    const LVector a = W * x.row(t).transpose() + U * h + b;
    for (Eigen::Index j = 0; j < H; ++j) {
      const long double i = lsigmoid(a(j));
      const long double f = lsigmoid(a(H + j));
      const long double o = lsigmoid(a(2 * H + j));
      const long double g = std::tanh(a(3 * H + j));
      c(j) = f * c(j) + i * g;
      h(j) = o * std::tanh(c(j));
    }
  }
  return h;
}

// Eval-mode loss in extended precision so that central differences of tiny
// gradients are not swamped by double roundoff.
long double extended_loss(const ModelParams& p, const Eigen::MatrixXd& x, int y) {
  const LMatrix lx = x.cast<long double>();
  const LVector hf = final_hidden(p.w.fwd, lx, false);
  const LVector hb = final_hidden(p.w.bwd, lx, true);
  const Eigen::Index H = hf.size();
  const LVector w = p.w.w_out.cast<long double>();
  const long double z = static_cast<long double>(p.w.b_out) + w.head(H).dot(hf) + w.tail(H).dot(hb);
  const long double eps = kProbEpsilon;
  const long double q = std::clamp(lsigmoid(z), eps, 1.0L - eps);
  return y == 1 ? -std::log(q) : -std::log1p(-q);
}

}  // namespace

void adam_update(std::span<double> theta, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, std::int64_t t, const AdamHyper& hyper) {
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const double g = grad[j];
    m[j] = hyper.beta1 * m[j] + (1.0 - hyper.beta1) * g;
    v[j] = hyper.beta2 * v[j] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = m[j] / c1;
    const double v_hat = v[j] / c2;
    theta[j] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
  }
}

AdamState AdamState::for_params(const ModelParams& params, const AdamHyper& hyper) {
  if (!(hyper.lr > 0 && hyper.beta1 > 0 && hyper.beta1 < 1 && hyper.beta2 > 0 && hyper.beta2 < 1 &&
        hyper.eps > 0)) {
    throw ValidationError("Adam hyperparameters out of range");
  }
  AdamState s;
  s.m = Weights::zeros(params.input_dim, params.hidden);
  s.v = Weights::zeros(params.input_dim, params.hidden);
  s.hyper = hyper;
  return s;
}

void adam_step(AdamState& state, ModelParams& params, const Gradients& grads) {
  if (!grads.same_shape(params.w) || !state.m.same_shape(params.w) || !state.v.same_shape(params.w)) {
    throw ValidationError("adam_step: gradient/state shapes do not match the parameters");
  }
  if (!grads.all_finite()) throw NumericError("adam_step: non-finite gradient");
  ++state.t;
  auto theta = params.w.tensors();
  auto g = grads.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  for (std::size_t k = 0; k < theta.size(); ++k) adam_update(theta[k], g[k], m[k], v[k], state.t, state.hyper);
}

void RowAdam::step(const std::string& key, std::span<double> row, std::span<const double> grad) {
  for (double g : grad) {
    if (!std::isfinite(g)) throw NumericError("embedding update: non-finite gradient for '" + key + "'");
  }
  auto& mom = moments_[key];
  if (mom.m.empty()) {
    mom.m.assign(row.size(), 0.0);
    mom.v.assign(row.size(), 0.0);
  }
  ++mom.t;
  adam_update(row, grad, mom.m, mom.v, mom.t, hyper_);
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

double max_relative_error(std::span<double> theta, std::span<const double> analytic,
                          const std::function<double()>& loss, double step) {
  if (!(step > 0.0)) throw ValidationError("finite-difference step must be positive");
  double worst = 0.0;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const double saved = theta[j];
    theta[j] = saved + step;
    const double up = loss();
    theta[j] = saved - step;
    const double down = loss();
    theta[j] = saved;
    worst = std::max(worst, relative_error(analytic[j], (up - down) / (2.0 * step)));
  }
  return worst;
}

GradCheckReport grad_check(const ModelParams& params, const EncodedExample& example, double step) {
  ModelParams probe = params;
  const Eigen::VectorXd no_dropout;
  if (!(step > 0.0)) throw ValidationError("finite-difference step must be positive");
  const BackwardResult ref = backward(probe, example.x, example.y, no_dropout);

  GradCheckReport report;
  auto theta = probe.w.tensors();
  auto analytic = ref.grads.tensors();
  const auto& names = Weights::tensor_names();
  for (std::size_t k = 0; k < theta.size(); ++k) {
    for (std::size_t j = 0; j < theta[k].size(); ++j) {
      double& slot = theta[k][j];
      const double saved = slot;
      slot = saved + step;
      const long double up = extended_loss(probe, example.x, example.y);
      const long double h_up = static_cast<long double>(slot) - saved;
      slot = saved - step;
      const long double down = extended_loss(probe, example.x, example.y);
      const long double h_down = saved - static_cast<long double>(slot);
      slot = saved;
      const double numeric = static_cast<double>((up - down) / (h_up + h_down));
      const double err = relative_error(analytic[k][j], numeric);
      ++report.checked;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_tensor = names[k];
        report.worst_index = j;
      }
    }
  }
  return report;
}

EarlyStopUpdate early_stop_update(EarlyStopState& state, int epoch, double dev_f1) {
  if (!(dev_f1 >= 0.0 && dev_f1 <= 1.0)) throw ValidationError("dev F1 must lie in [0, 1]");
  EarlyStopUpdate out;
  if (dev_f1 > state.best_metric + 1e-9) {
    state.best_metric = dev_f1;
    state.best_epoch = epoch;
    state.epochs_since_best = 0;
    out.improved = true;
  } else {
    ++state.epochs_since_best;
  }
  out.best_epoch = state.best_epoch;
  out.decision = state.epochs_since_best >= state.patience ? StopDecision::kStop : StopDecision::kContinue;
  return out;
}

}  // namespace irony
