#include "irony/neural.hpp"

#include <algorithm>
#include <cmath>

#include "irony/error.hpp"

namespace irony {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Eigen::ArrayXd sigmoid_array(const Eigen::ArrayXd& a) { return (1.0 + (-a).exp()).inverse(); }

// Activations of one direction, columns in processing order. h and c carry an
// extra leading column holding the zero initial state.
struct Trace {
  MatrixXd act;  // 4H x L: sigmoid(i), sigmoid(f), sigmoid(o), tanh(g)
  MatrixXd c;    // H x (L+1)
  MatrixXd h;    // H x (L+1)
  MatrixXd tanh_c;  // H x L, tanh(c) after each step
};

Trace run_direction(const DirectionWeights& dw, const MatrixXd& x_proc) {
  const Index steps = x_proc.rows();
  const Index hid = dw.U.cols();
  Trace tr;
  MatrixXd pre = dw.W * x_proc.transpose();
  pre.colwise() += dw.b;
  tr.act.resize(4 * hid, steps);
  tr.c = MatrixXd::Zero(hid, steps + 1);
  tr.h = MatrixXd::Zero(hid, steps + 1);
  tr.tanh_c.resize(hid, steps);
  for (Index s = 0; s < steps; ++s) {
    VectorXd a = pre.col(s) + dw.U * tr.h.col(s);
    auto act = tr.act.col(s);
    act.head(3 * hid) = sigmoid_array(a.head(3 * hid).array()).matrix();
    act.tail(hid) = a.tail(hid).array().tanh().matrix();
    tr.c.col(s + 1) = act.segment(hid, hid).cwiseProduct(tr.c.col(s)) +
                      act.head(hid).cwiseProduct(act.tail(hid));
    tr.tanh_c.col(s) = tr.c.col(s + 1).array().tanh().matrix();
    tr.h.col(s + 1) = act.segment(2 * hid, hid).cwiseProduct(tr.tanh_c.col(s));
  }
  return tr;
}

// BPTT through one direction; accumulates into `g` and returns dloss/dx_proc.
MatrixXd backprop_direction(const DirectionWeights& dw, const MatrixXd& x_proc, const Trace& tr,
                            const VectorXd& dh_last, DirectionWeights& g) {
  const Index steps = x_proc.rows();
  const Index hid = dw.U.cols();
  MatrixXd dA(4 * hid, steps);
  VectorXd dh = dh_last;
  VectorXd dc = VectorXd::Zero(hid);
  for (Index s = steps - 1; s >= 0; --s) {
    const auto act = tr.act.col(s);
    const Eigen::ArrayXd i = act.head(hid).array();
    const Eigen::ArrayXd f = act.segment(hid, hid).array();
    const Eigen::ArrayXd o = act.segment(2 * hid, hid).array();
    const Eigen::ArrayXd gg = act.tail(hid).array();
    const Eigen::ArrayXd tc = tr.tanh_c.col(s).array();

    const Eigen::ArrayXd d_o = dh.array() * tc;
    dc.array() += dh.array() * o * (1.0 - tc * tc);
    auto da = dA.col(s);
    da.head(hid) = (dc.array() * gg * i * (1.0 - i)).matrix();
    da.segment(hid, hid) = (dc.array() * tr.c.col(s).array() * f * (1.0 - f)).matrix();
    da.segment(2 * hid, hid) = (d_o * o * (1.0 - o)).matrix();
    da.tail(hid) = (dc.array() * i * (1.0 - gg * gg)).matrix();
    dh = dw.U.transpose() * da;
    dc.array() *= f;
  }
  g.W.noalias() += dA * x_proc;
  g.U.noalias() += dA * tr.h.leftCols(steps).transpose();
  g.b += dA.rowwise().sum();
  return dA.transpose() * dw.W;
}

MatrixXd reversed_rows(const MatrixXd& x) { return x.colwise().reverse(); }

void require_sequence(const ModelParams& params, const MatrixXd& x) {
  if (x.rows() < 1) throw ValidationError("sequence must contain at least one timestep");
  if (x.cols() != params.input_dim) {
    throw ValidationError("input width " + std::to_string(x.cols()) + " does not match model input_dim " +
                          std::to_string(params.input_dim));
  }
}

double output_logit(const ModelParams& params, const VectorXd& r) {
  double z = params.w.w_out.dot(r) + params.w.b_out;
  if (!std::isfinite(z)) throw NumericError("non-finite output logit");
  return z;
}

}  // namespace

DirectionWeights DirectionWeights::zeros(int input_dim, int hidden) {
  return {MatrixXd::Zero(4 * hidden, input_dim), MatrixXd::Zero(4 * hidden, hidden),
          VectorXd::Zero(4 * hidden)};
}

Weights Weights::zeros(int input_dim, int hidden) {
  Weights w;
  w.fwd = DirectionWeights::zeros(input_dim, hidden);
  w.bwd = DirectionWeights::zeros(input_dim, hidden);
  w.w_out = VectorXd::Zero(2 * hidden);
  w.b_out = 0.0;
  return w;
}

std::vector<std::span<double>> Weights::tensors() {
  auto view = [](auto& m) { return std::span<double>(m.data(), static_cast<std::size_t>(m.size())); };
  return {view(fwd.W), view(fwd.U), view(fwd.b), view(bwd.W), view(bwd.U), view(bwd.b),
          view(w_out), std::span<double>(&b_out, 1)};
}

std::vector<std::span<const double>> Weights::tensors() const {
  auto view = [](const auto& m) {
    return std::span<const double>(m.data(), static_cast<std::size_t>(m.size()));
  };
  return {view(fwd.W), view(fwd.U), view(fwd.b), view(bwd.W), view(bwd.U), view(bwd.b),
          view(w_out), std::span<const double>(&b_out, 1)};
}

const std::vector<std::string>& Weights::tensor_names() {
  static const std::vector<std::string> names = {"fwd.W", "fwd.U", "fwd.b", "bwd.W",
                                                 "bwd.U", "bwd.b", "w_out", "b_out"};
  return names;
}

std::size_t Weights::parameter_count() const {
  std::size_t n = 0;
  for (auto t : tensors()) n += t.size();
  return n;
}

void Weights::set_zero() {
  for (auto t : tensors()) std::fill(t.begin(), t.end(), 0.0);
}

void Weights::add_scaled(const Weights& other, double scale) {
  auto dst = tensors();
  auto src = other.tensors();
  for (std::size_t k = 0; k < dst.size(); ++k) {
    for (std::size_t j = 0; j < dst[k].size(); ++j) dst[k][j] += scale * src[k][j];
  }
}

bool Weights::same_shape(const Weights& other) const {
  auto a = tensors();
  auto b = other.tensors();
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].size() != b[k].size()) return false;
  }
  return fwd.W.rows() == other.fwd.W.rows() && fwd.W.cols() == other.fwd.W.cols() &&
         bwd.W.rows() == other.bwd.W.rows() && bwd.W.cols() == other.bwd.W.cols();
}

bool Weights::all_finite() const {
  for (auto t : tensors()) {
    for (double v : t) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

void check_shapes(const ModelParams& params) {
  const Index k = params.input_dim, hid = params.hidden;
  auto check_dir = [&](const DirectionWeights& d, const char* name) {
    if (d.W.rows() != 4 * hid || d.W.cols() != k || d.U.rows() != 4 * hid || d.U.cols() != hid ||
        d.b.size() != 4 * hid) {
      throw ValidationError(std::string("inconsistent tensor shapes in direction ") + name);
    }
  };
  if (k < 1 || hid < 1) throw ValidationError("input_dim and hidden must be positive");
  check_dir(params.w.fwd, "fwd");
  check_dir(params.w.bwd, "bwd");
  if (params.w.w_out.size() != 2 * hid) throw ValidationError("w_out must have 2*hidden entries");
  if (!(params.dropout_p >= 0.0 && params.dropout_p < 1.0)) {
    throw ValidationError("dropout probability must lie in [0, 1)");
  }
}

ModelParams init_params(int input_dim, int hidden, double dropout_p, std::uint64_t seed) {
  ModelParams params;
  params.input_dim = input_dim;
  params.hidden = hidden;
  params.dropout_p = dropout_p;
  params.seed = seed;
  params.w = Weights::zeros(input_dim, hidden);
  check_shapes(params);

  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto fill = [&](auto& m) {
    for (Index j = 0; j < m.size(); ++j) m.data()[j] = rng.uniform(-scale, scale);
  };
  for (DirectionWeights* d : {&params.w.fwd, &params.w.bwd}) {
    fill(d->W);
    fill(d->U);
    d->b.segment(hidden, hidden).setConstant(1.0);
  }
  fill(params.w.w_out);
  return params;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LstmState lstm_step(const DirectionWeights& dir, const VectorXd& x, const VectorXd& h_prev,
                    const VectorXd& c_prev) {
  const Index hid = dir.U.cols();
  if (dir.W.rows() != 4 * hid || dir.U.rows() != 4 * hid || dir.b.size() != 4 * hid ||
      x.size() != dir.W.cols() || h_prev.size() != hid || c_prev.size() != hid) {
    throw ValidationError("lstm_step: inconsistent shapes");
  }
  VectorXd a = dir.W * x + dir.U * h_prev + dir.b;
  Eigen::ArrayXd i = sigmoid_array(a.head(hid).array());
  Eigen::ArrayXd f = sigmoid_array(a.segment(hid, hid).array());
  Eigen::ArrayXd o = sigmoid_array(a.segment(2 * hid, hid).array());
  Eigen::ArrayXd g = a.tail(hid).array().tanh();
  LstmState out;
  out.c = (f * c_prev.array() + i * g).matrix();
  out.h = (o * out.c.array().tanh()).matrix();
  return out;
}

VectorXd bilstm_encode(const ModelParams& params, const MatrixXd& x) {
  require_sequence(params, x);
  const Index steps = x.rows();
  Trace f = run_direction(params.w.fwd, x);
  Trace b = run_direction(params.w.bwd, reversed_rows(x));
  VectorXd r(2 * params.hidden);
  r << f.h.col(steps), b.h.col(steps);
  return r;
}

VectorXd bilstm_encode_padded(const ModelParams& params, const MatrixXd& padded, Index length) {
  if (length < 1 || length > padded.rows()) {
    throw ValidationError("true length must lie in [1, padded rows]");
  }
  require_sequence(params, padded);
  const Index hid = params.hidden;
  const Index total = padded.rows();
  VectorXd out(2 * hid);
  for (int dir = 0; dir < 2; ++dir) {
    const DirectionWeights& dw = dir == 0 ? params.w.fwd : params.w.bwd;
    VectorXd h = VectorXd::Zero(hid), c = VectorXd::Zero(hid);
    for (Index s = 0; s < total; ++s) {
      const Index t = dir == 0 ? s : total - 1 - s;
      const double m = t < length ? 1.0 : 0.0;
      LstmState next = lstm_step(dw, padded.row(t).transpose(), h, c);
      h = m * next.h + (1.0 - m) * h;
      c = m * next.c + (1.0 - m) * c;
    }
    out.segment(dir * hid, hid) = h;
  }
  return out;
}

MatrixXd bilstm_encode_batch(const ModelParams& params, std::span<const MatrixXd> xs) {
  const Index hid = params.hidden;
  const Index batch = static_cast<Index>(xs.size());
  Index max_len = 0;
  for (const auto& x : xs) {
    require_sequence(params, x);
    max_len = std::max(max_len, x.rows());
  }
  MatrixXd out(2 * hid, batch);
  if (batch == 0) return out;
  for (int dir = 0; dir < 2; ++dir) {
    const DirectionWeights& dw = dir == 0 ? params.w.fwd : params.w.bwd;
    MatrixXd h = MatrixXd::Zero(hid, batch), c = MatrixXd::Zero(hid, batch);
    MatrixXd xt(params.input_dim, batch);
    Eigen::RowVectorXd mask(batch);
    for (Index s = 0; s < max_len; ++s) {
      const Index t = dir == 0 ? s : max_len - 1 - s;
      for (Index b = 0; b < batch; ++b) {
        const auto& x = xs[static_cast<std::size_t>(b)];
        const bool live = t < x.rows();
        mask[b] = live ? 1.0 : 0.0;
        if (live) {
          xt.col(b) = x.row(t).transpose();
        } else {
          xt.col(b).setZero();
        }
      }
      MatrixXd a = dw.W * xt + dw.U * h;
      a.colwise() += dw.b;
      Eigen::ArrayXXd i = (1.0 + (-a.topRows(hid).array()).exp()).inverse();
      Eigen::ArrayXXd f = (1.0 + (-a.middleRows(hid, hid).array()).exp()).inverse();
      Eigen::ArrayXXd o = (1.0 + (-a.middleRows(2 * hid, hid).array()).exp()).inverse();
      Eigen::ArrayXXd g = a.bottomRows(hid).array().tanh();
      MatrixXd c_new = (f * c.array() + i * g).matrix();
      MatrixXd h_new = (o * c_new.array().tanh()).matrix();
      for (Index b = 0; b < batch; ++b) {
        const double m = mask[b];
        c.col(b) = m * c_new.col(b) + (1.0 - m) * c.col(b);
        h.col(b) = m * h_new.col(b) + (1.0 - m) * h.col(b);
      }
    }
    out.middleRows(dir * hid, hid) = h;
  }
  return out;
}

VectorXd sample_dropout_mask(Index size, double p, Rng& rng) {
  VectorXd mask = VectorXd::Ones(size);
  if (p <= 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - p);
  for (Index j = 0; j < size; ++j) mask[j] = rng.uniform01() < p ? 0.0 : keep_scale;
  return mask;
}

ForwardResult forward(const ModelParams& params, const MatrixXd& x, Mode mode, Rng* rng) {
  ForwardResult res;
  res.representation = bilstm_encode(params, x);
  VectorXd r = res.representation;
  if (mode == Mode::kTrain) {
    if (rng == nullptr) throw ValidationError("train-mode forward requires a random source");
    res.dropout_mask = sample_dropout_mask(r.size(), params.dropout_p, *rng);
    r = r.cwiseProduct(res.dropout_mask);
  }
  res.p = std::clamp(sigmoid(output_logit(params, r)), kProbEpsilon, 1.0 - kProbEpsilon);
  return res;
}

double predict_proba(const ModelParams& params, const MatrixXd& x) {
  return forward(params, x, Mode::kEval, nullptr).p;
}

std::vector<double> predict_proba_batch(const ModelParams& params, std::span<const MatrixXd> xs) {
  MatrixXd reps = bilstm_encode_batch(params, xs);
  std::vector<double> out;
  out.reserve(xs.size());
  for (Index b = 0; b < reps.cols(); ++b) {
    out.push_back(std::clamp(sigmoid(output_logit(params, reps.col(b))), kProbEpsilon,
                             1.0 - kProbEpsilon));
  }
  return out;
}

double bce_loss(double p, int y) {
  const double q = std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
  return y == 1 ? -std::log(q) : -std::log1p(-q);
}

BackwardResult backward(const ModelParams& params, const MatrixXd& x, int y, const VectorXd& mask) {
  require_sequence(params, x);
  const Index hid = params.hidden;
  if (mask.size() != 0 && mask.size() != 2 * hid) {
    throw ValidationError("dropout mask has " + std::to_string(mask.size()) + " entries, expected " +
                          std::to_string(2 * hid));
  }
  if (y != 0 && y != 1) throw ValidationError("label must be 0 or 1");
  const Index steps = x.rows();
  const MatrixXd x_rev = reversed_rows(x);
  Trace tf = run_direction(params.w.fwd, x);
  Trace tb = run_direction(params.w.bwd, x_rev);

  VectorXd r(2 * hid);
  r << tf.h.col(steps), tb.h.col(steps);
  const VectorXd keep = mask.size() == 0 ? VectorXd::Ones(2 * hid) : mask;
  const VectorXd rm = r.cwiseProduct(keep);
  const double raw_p = sigmoid(output_logit(params, rm));

  BackwardResult res;
  res.p = std::clamp(raw_p, kProbEpsilon, 1.0 - kProbEpsilon);
  res.loss = bce_loss(raw_p, y);
  res.grads = Weights::zeros(params.input_dim, params.hidden);

  const double dz = raw_p - static_cast<double>(y);
  res.grads.w_out = dz * rm;
  res.grads.b_out = dz;
  const VectorXd dr = (dz * params.w.w_out).cwiseProduct(keep);

  MatrixXd dx_f = backprop_direction(params.w.fwd, x, tf, dr.head(hid), res.grads.fwd);
  MatrixXd dx_b = backprop_direction(params.w.bwd, x_rev, tb, dr.tail(hid), res.grads.bwd);
  res.dx = dx_f + reversed_rows(dx_b);
  if (!std::isfinite(res.loss) || !res.grads.all_finite()) {
    throw NumericError("non-finite loss or gradient in backward pass");
  }
  return res;
}

}  // namespace irony
