#pragma once

#include <cstddef>
#include <span>
#include <string>

#include <json.hpp>

namespace irony {

// Binary scores for the positive (ironic, label 1) class. Zero denominators
// yield 0 for precision, recall and F1.
struct MetricsReport {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  std::size_t total() const { return tp + fp + fn + tn; }
};

MetricsReport compute_metrics(std::span<const int> preds, std::span<const int> golds);
MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

double f1_from_pr(double precision, double recall);

// Full-precision JSON: {"accuracy", "precision", "recall", "f1", "tp", "fp", "fn", "tn"}.
nlohmann::json metrics_to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::json& j);

// "acc 0.6375  P 0.6440  R 0.6096  F1 0.6263" (4 decimals, display only).
std::string format_metrics(const MetricsReport& m);

}  // namespace irony
