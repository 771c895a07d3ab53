#include "irony/metrics.hpp"

#include <cstdio>

#include "irony/error.hpp"

namespace irony {

double f1_from_pr(double precision, double recall) {
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  MetricsReport m{tp, fp, fn, tn};
  const std::size_t n = m.total();
  m.accuracy = n == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(n);
  m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.f1 = f1_from_pr(m.precision, m.recall);
  return m;
}

MetricsReport compute_metrics(std::span<const int> preds, std::span<const int> golds) {
  if (preds.size() != golds.size()) {
    throw ValidationError("prediction/gold length mismatch: " + std::to_string(preds.size()) + " vs " +
                          std::to_string(golds.size()));
  }
  if (preds.empty()) throw ValidationError("cannot compute metrics over zero examples");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == 1, g = golds[i] == 1;
    if (p && g) ++tp;
    else if (p) ++fp;
    else if (g) ++fn;
    else ++tn;
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

nlohmann::json metrics_to_json(const MetricsReport& m) {
  return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
          {"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn}};
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  return metrics_from_counts(j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(),
                             j.at("fn").get<std::size_t>(), j.at("tn").get<std::size_t>());
}

std::string format_metrics(const MetricsReport& m) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "acc %.4f  P %.4f  R %.4f  F1 %.4f", m.accuracy, m.precision, m.recall,
                m.f1);
  return buf;
}

}  // namespace irony
