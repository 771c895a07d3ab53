#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "irony/feats.hpp"
#include "irony/neural.hpp"

namespace irony {

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update on a flat tensor; `t` is the already
// incremented step count (t >= 1).
void adam_update(std::span<double> theta, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, std::int64_t t, const AdamHyper& hyper);

struct AdamState {
  Weights m;
  Weights v;
  std::int64_t t = 0;
  AdamHyper hyper;

  static AdamState for_params(const ModelParams& params, const AdamHyper& hyper = {});
};

// Throws NumericError on a non-finite gradient before touching any parameter.
void adam_step(AdamState& state, ModelParams& params, const Gradients& grads);

// Adam over a set of embedding rows that are updated only when touched; each
// row keeps its own step counter.
class RowAdam {
 public:
  explicit RowAdam(AdamHyper hyper = {}) : hyper_(hyper) {}
  void step(const std::string& key, std::span<double> row, std::span<const double> grad);

 private:
  struct Moments {
    std::vector<double> m, v;
    std::int64_t t = 0;
  };
  AdamHyper hyper_;
  std::unordered_map<std::string, Moments> moments_;
};

// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

// Central differences of `loss` with respect to every entry of `theta`
// (perturbed in place and restored) against `analytic`; returns the largest
// relative error.
double max_relative_error(std::span<double> theta, std::span<const double> analytic,
                          const std::function<double()>& loss, double step);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Finite-difference check of backward() over every parameter with dropout off.
// The perturbed losses are evaluated in long double.
GradCheckReport grad_check(const ModelParams& params, const EncodedExample& example, double step);

struct EarlyStopState {
  double best_metric = -std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int patience = 5;
  int epochs_since_best = 0;
};

enum class StopDecision { kContinue, kStop };

struct EarlyStopUpdate {
  StopDecision decision = StopDecision::kContinue;
  int best_epoch = 0;
  bool improved = false;
};

// An epoch improves when dev_f1 > best + 1e-9 (ties keep the earlier epoch).
// Training stops once `patience` consecutive epochs fail to improve.
EarlyStopUpdate early_stop_update(EarlyStopState& state, int epoch, double dev_f1);

}  // namespace irony
