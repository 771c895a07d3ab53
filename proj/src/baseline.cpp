#include "irony/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <list>
#include <map>

#include "irony/error.hpp"
#include "irony/log.hpp"

namespace irony {
namespace {

// LRU cache of rows of the linear kernel K_ij = x_i . x_j.
class KernelCache {
 public:
  KernelCache(std::span<const SparseDoc> X, std::size_t dims, std::size_t megabytes)
      : X_(X), scratch_(dims, 0.0) {
    const std::size_t row_bytes = std::max<std::size_t>(1, X.size() * sizeof(double));
    capacity_ = std::max<std::size_t>(2, megabytes * 1024 * 1024 / row_bytes);
  }

  const std::vector<double>& row(std::size_t i) {
    if (auto it = rows_.find(i); it != rows_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.second);
      return it->second.first;
    }
    if (rows_.size() >= capacity_) {
      rows_.erase(lru_.back());
      lru_.pop_back();
    }
    std::vector<double> out(X_.size());
    for (auto [idx, v] : X_[i].entries) scratch_[idx] = v;
    for (std::size_t t = 0; t < X_.size(); ++t) {
      double s = 0.0;
      for (auto [idx, v] : X_[t].entries) s += scratch_[idx] * v;
      out[t] = s;
    }
    for (auto [idx, v] : X_[i].entries) scratch_[idx] = 0.0;
    lru_.push_front(i);
    auto [pos, _] = rows_.emplace(i, std::make_pair(std::move(out), lru_.begin()));
    return pos->second.first;
  }

 private:
  std::span<const SparseDoc> X_;
  std::vector<double> scratch_;
  std::size_t capacity_;
  std::list<std::size_t> lru_;
  std::unordered_map<std::size_t, std::pair<std::vector<double>, std::list<std::size_t>::iterator>> rows_;
};

}  // namespace

StopwordSet default_stopwords() {
  StopwordSet out;
  for (auto w : bundled_stopwords()) out.emplace(w);
  return out;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stopword file " + path.string());
  StopwordSet out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    out.insert(ascii_lower(line));
  }
  return out;
}

std::vector<std::string> baseline_tokens(std::string_view raw, const StopwordSet& stopwords,
                                         const PrepConfig& prep) {
  TokenSeq seq = tokenize(ascii_lower(preprocess(raw, prep)));
  std::vector<std::string> out;
  for (auto& tok : seq.tokens) {
    if (!stopwords.contains(tok)) out.push_back(std::move(tok));
  }
  return out;
}

double SparseDoc::norm() const {
  double s = 0.0;
  for (auto [_, v] : entries) s += v * v;
  return std::sqrt(s);
}

double dot(const SparseDoc& a, const SparseDoc& b) {
  double s = 0.0;
  auto i = a.entries.begin(), j = b.entries.begin();
  while (i != a.entries.end() && j != b.entries.end()) {
    if (i->first < j->first) ++i;
    else if (j->first < i->first) ++j;
    else s += (i++)->second * (j++)->second;
  }
  return s;
}

std::pair<TfidfVectorizer, std::vector<SparseDoc>> TfidfVectorizer::fit_transform(
    const std::vector<std::vector<std::string>>& docs) {
  TfidfVectorizer vec;
  std::vector<std::size_t> df;
  for (const auto& doc : docs) {
    std::unordered_set<std::uint32_t> seen;
    for (const auto& tok : doc) {
      auto [it, inserted] = vec.index_.emplace(tok, static_cast<std::uint32_t>(vec.terms_.size()));
      if (inserted) {
        vec.terms_.push_back(tok);
        df.push_back(0);
      }
      if (seen.insert(it->second).second) ++df[it->second];
    }
  }
  const double n = static_cast<double>(docs.size());
  vec.idf_.resize(df.size());
  for (std::size_t t = 0; t < df.size(); ++t) {
    vec.idf_[t] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[t]))) + 1.0;
  }
  std::vector<SparseDoc> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) out.push_back(vec.transform(doc));
  return {std::move(vec), std::move(out)};
}

std::optional<std::uint32_t> TfidfVectorizer::index_of(const std::string& term) const {
  auto it = index_.find(term);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SparseDoc TfidfVectorizer::transform(const std::vector<std::string>& doc) const {
  std::map<std::uint32_t, double> counts;
  for (const auto& tok : doc) {
    if (auto it = index_.find(tok); it != index_.end()) counts[it->second] += 1.0;
  }
  SparseDoc out;
  for (auto [idx, tf] : counts) out.entries.emplace_back(idx, tf * idf_[idx]);
  const double nrm = out.norm();
  if (nrm > 0.0) {
    for (auto& e : out.entries) e.second /= nrm;
  }
  return out;
}

double LinearSvmModel::decision(const SparseDoc& x) const {
  double s = b;
  for (auto [idx, v] : x.entries) {
    if (idx < w.size()) s += w[idx] * v;
  }
  return s;
}

double svm_objective(const LinearSvmModel& model, std::span<const SparseDoc> X, std::span<const int> y,
                     double C) {
  double reg = 0.0;
  for (double v : model.w) reg += v * v;
  double hinge = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double yi = y[i] == 1 ? 1.0 : -1.0;
    hinge += std::max(0.0, 1.0 - yi * model.decision(X[i]));
  }
  return 0.5 * reg + C * hinge;
}

LinearSvmModel svm_train(std::span<const SparseDoc> X, std::span<const int> labels, double C,
                         const SvmOptions& opts) {
  if (X.size() != labels.size()) throw ValidationError("svm_train: feature/label count mismatch");
  if (!(C > 0.0)) throw ValidationError("svm_train: C must be positive");
  const std::size_t n = X.size();
  std::vector<double> y(n);
  bool has_pos = false, has_neg = false;
  std::size_t dims = 0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = labels[i] == 1 ? 1.0 : -1.0;
    (labels[i] == 1 ? has_pos : has_neg) = true;
    for (auto [idx, _] : X[i].entries) dims = std::max<std::size_t>(dims, idx + 1);
  }
  if (!has_pos || !has_neg) throw ValidationError("svm_train needs at least one example of each class");

  constexpr double kTau = 1e-12;
  KernelCache kernel(X, dims, opts.cache_megabytes);
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = dot(X[i], X[i]);

  // Dual: min 0.5 a'Qa - e'a, Q_ij = y_i y_j K_ij, 0 <= a <= C, y'a = 0.
  std::vector<double> alpha(n, 0.0), grad(n, -1.0);
  auto in_up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0); };
  auto in_low = [&](std::size_t t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C); };

  std::size_t iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * grad[t] >= gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    }
    if (i == n) break;
    const auto& Ki = kernel.row(i);
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best_obj = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      gmax2 = std::max(gmax2, y[t] * grad[t]);
      const double b = gmax + y[t] * grad[t];
      if (b > 0) {
        double a = diag[i] + diag[t] - 2.0 * Ki[t];
        if (a <= 0) a = kTau;
        if (-(b * b) / a <= best_obj) {
          best_obj = -(b * b) / a;
          j = t;
        }
      }
    }
    if (gmax + gmax2 < opts.tol || j == n) break;

    const std::vector<double> Ki_copy = Ki;  // the next lookup may evict row i
    const auto& Kj = kernel.row(j);
    const double yi = y[i], yj = y[j];
    const double old_i = alpha[i], old_j = alpha[j];
    const double qij = yi * yj * Ki_copy[j];
    if (yi != yj) {
      double quad = diag[i] + diag[j] + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
      }
      if (diff > 0) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
      } else {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
      }
    } else {
      double quad = diag[i] + diag[j] - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
      } else {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (yi * Ki_copy[t] * di + yj * Kj[t] * dj);
    }
  }
  if (iter == opts.max_iterations) log::warn("svm_train: reached the iteration limit before converging");

  LinearSvmModel model;
  model.C = C;
  model.w.assign(dims, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] == 0.0) continue;
    for (auto [idx, v] : X[i].entries) model.w[idx] += alpha[i] * y[i] * v;
  }

  // rho from free support vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, free_sum = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= C) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      free_sum += yg;
    }
  }
  const double rho = n_free > 0 ? free_sum / static_cast<double>(n_free) : (ub + lb) / 2.0;
  model.b = -rho;
  log::debug("svm_train: " + std::to_string(iter) + " SMO iterations, " + std::to_string(n_free) +
             " free support vectors");
  return model;
}

BaselineResult baseline_run(const std::vector<Tweet>& train, const std::vector<Tweet>& dev,
                            const BaselineConfig& cfg) {
  if (dev.empty()) throw ValidationError("baseline: empty development set");
  if (train.empty()) throw ValidationError("baseline: empty training set");
  std::vector<std::vector<std::string>> train_docs;
  std::vector<int> train_y;
  for (const auto& t : train) {
    train_docs.push_back(baseline_tokens(t.raw, cfg.stopwords, cfg.prep));
    train_y.push_back(t.label);
  }
  auto [vectorizer, X] = TfidfVectorizer::fit_transform(train_docs);
  LinearSvmModel model = svm_train(X, train_y, cfg.C, cfg.svm);

  std::vector<int> preds, golds;
  for (const auto& t : dev) {
    preds.push_back(model.predict(vectorizer.transform(baseline_tokens(t.raw, cfg.stopwords, cfg.prep))));
    golds.push_back(t.label);
  }
  BaselineResult res;
  res.metrics = compute_metrics(preds, golds);
  res.vocabulary_size = vectorizer.vocabulary_size();
  res.objective = svm_objective(model, X, train_y, cfg.C);
  return res;
}

}  // namespace irony
