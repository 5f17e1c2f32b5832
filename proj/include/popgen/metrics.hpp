#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "popgen/common.hpp"

namespace popgen {

// ---------------------------------------------------------------------------
// Classification metrics
// ---------------------------------------------------------------------------

struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::int64_t> counts;  // row-major, C_ij = true i predicted j

  std::size_t dim() const { return labels.size(); }
  std::int64_t at(std::size_t i, std::size_t j) const {
    return counts[i * dim() + j];
  }
  std::int64_t support(std::size_t i) const {
    std::int64_t s = 0;
    for (std::size_t j = 0; j < dim(); ++j) s += at(i, j);
    return s;
  }
  std::int64_t predicted_total(std::size_t j) const {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < dim(); ++i) s += at(i, j);
    return s;
  }
  std::int64_t total() const {
    std::int64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }
  double row_error(std::size_t i) const {
    const std::int64_t s = support(i);
    return s == 0 ? 0.0
                  : static_cast<double>(s - at(i, i)) / static_cast<double>(s);
  }
};

struct ClassificationScore {
  double accuracy = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  double rmse = 0.0;
};

struct ClusteringScore {
  double ri = 0.0;
  double ari = 0.0;
  double nmi = 0.0;
  double acc = 0.0;
};

inline ConfusionMatrix confusion_matrix(
    const std::vector<std::size_t>& y_true,
    const std::vector<std::size_t>& y_pred,
    const std::vector<std::string>& vocabulary) {
  if (y_true.size() != y_pred.size())
    throw data_error("LengthMismatch", "confusion_matrix input lengths");
  ConfusionMatrix cm;
  cm.labels = vocabulary;
  cm.counts.assign(vocabulary.size() * vocabulary.size(), 0);
  for (std::size_t k = 0; k < y_true.size(); ++k) {
    if (y_true[k] >= vocabulary.size() || y_pred[k] >= vocabulary.size())
      throw data_error("UnknownLabel", "label index outside vocabulary");
    ++cm.counts[y_true[k] * vocabulary.size() + y_pred[k]];
  }
  return cm;
}

// Weighted precision / recall / F_beta, weights = true-class support / N.
// Zero-division convention: PPV=0 for never-predicted classes, TPR=0 for
// empty classes, F=0 when P+R=0.
struct WeightedPrf {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

inline WeightedPrf weighted_prf(const ConfusionMatrix& cm, double beta = 1.0) {
  const std::int64_t n = cm.total();
  if (n == 0) throw data_error("EmptyMatrix", "weighted_prf on empty matrix");
  WeightedPrf out;
  const double b2 = beta * beta;
  for (std::size_t l = 0; l < cm.dim(); ++l) {
    const std::int64_t support = cm.support(l);
    if (support == 0) continue;
    const std::int64_t predicted = cm.predicted_total(l);
    const double tp = static_cast<double>(cm.at(l, l));
    const double ppv = predicted == 0 ? 0.0 : tp / static_cast<double>(predicted);
    const double tpr = tp / static_cast<double>(support);
    const double f = (ppv + tpr) == 0.0
                         ? 0.0
                         : (1.0 + b2) * ppv * tpr / (b2 * ppv + tpr);
    const double w = static_cast<double>(support) / static_cast<double>(n);
    out.precision += w * ppv;
    out.recall += w * tpr;
    out.f += w * f;
  }
  return out;
}

inline double accuracy(const std::vector<std::size_t>& y_true,
                       const std::vector<std::size_t>& y_pred) {
  if (y_true.size() != y_pred.size())
    throw data_error("LengthMismatch", "accuracy input lengths");
  if (y_true.empty()) throw data_error("EmptyMatrix", "accuracy on empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i)
    if (y_true[i] == y_pred[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

inline double rmse(const std::vector<std::size_t>& y_true,
                   const std::vector<std::size_t>& y_pred) {
  if (y_true.size() != y_pred.size())
    throw data_error("LengthMismatch", "rmse input lengths");
  if (y_true.empty()) throw data_error("EmptyMatrix", "rmse on empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double d = static_cast<double>(y_true[i]) -
                     static_cast<double>(y_pred[i]);
    total += d * d;
  }
  return std::sqrt(total / static_cast<double>(y_true.size()));
}

inline ClassificationScore classification_score(
    const std::vector<std::size_t>& y_true,
    const std::vector<std::size_t>& y_pred,
    const std::vector<std::string>& vocabulary, double beta = 1.0) {
  const auto cm = confusion_matrix(y_true, y_pred, vocabulary);
  const auto prf = weighted_prf(cm, beta);
  ClassificationScore s;
  s.accuracy = accuracy(y_true, y_pred);
  s.weighted_precision = prf.precision;
  s.weighted_recall = prf.recall;
  s.weighted_f1 = prf.f;
  s.rmse = rmse(y_true, y_pred);
  return s;
}

// ---------------------------------------------------------------------------
// Clustering metrics
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
inline std::vector<std::size_t> normalize_labels(const std::vector<T>& raw,
                                                 std::size_t& k_out) {
  std::vector<T> vocab(raw);
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  k_out = vocab.size();
  std::vector<std::size_t> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    out[i] = static_cast<std::size_t>(
        std::lower_bound(vocab.begin(), vocab.end(), raw[i]) - vocab.begin());
  return out;
}

struct Contingency {
  std::size_t ka = 0, kb = 0;
  std::vector<std::int64_t> counts;  // ka x kb
  std::vector<std::int64_t> a_sizes, b_sizes;
  std::int64_t n = 0;
};

template <typename T>
inline Contingency contingency(const std::vector<T>& a,
                               const std::vector<T>& b) {
  if (a.size() != b.size())
    throw data_error("LengthMismatch", "partition lengths differ");
  Contingency c;
  const auto na = normalize_labels(a, c.ka);
  const auto nb = normalize_labels(b, c.kb);
  c.counts.assign(c.ka * c.kb, 0);
  c.a_sizes.assign(c.ka, 0);
  c.b_sizes.assign(c.kb, 0);
  for (std::size_t i = 0; i < na.size(); ++i) {
    ++c.counts[na[i] * c.kb + nb[i]];
    ++c.a_sizes[na[i]];
    ++c.b_sizes[nb[i]];
  }
  c.n = static_cast<std::int64_t>(a.size());
  return c;
}

inline double choose2(std::int64_t n) {
  return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
}

// Minimum-cost perfect assignment on a square cost matrix; returns, for each
// column, the assigned row.
inline std::vector<int> hungarian(const std::vector<double>& cost,
                                  int n) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_of_col(n);
  for (int j = 1; j <= n; ++j) row_of_col[j - 1] = p[j] - 1;
  return row_of_col;
}

}  // namespace detail

// Pair-counting Rand index: fraction of point pairs on which the two
// partitions agree.
template <typename T>
inline double rand_index(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() < 2)
    throw data_error("TooFewPoints", "rand_index needs n >= 2");
  const auto c = detail::contingency(a, b);
  double sum_nij = 0.0;
  for (auto v : c.counts) sum_nij += detail::choose2(v);
  double sum_a = 0.0, sum_b = 0.0;
  for (auto v : c.a_sizes) sum_a += detail::choose2(v);
  for (auto v : c.b_sizes) sum_b += detail::choose2(v);
  const double pairs = detail::choose2(c.n);
  const double tp = sum_nij;
  const double fp = sum_b - sum_nij;  // same in b, different in a
  const double fn = sum_a - sum_nij;  // same in a, different in b
  const double tn = pairs - tp - fp - fn;
  return (tp + tn) / pairs;
}

// Hubert-Arabie adjusted Rand index. For the degenerate case (zero
// denominator, e.g. both partitions trivial) returns 1 when the partitions
// are identical up to relabeling, else 0.
template <typename T>
inline double adjusted_rand_index(const std::vector<T>& a,
                                  const std::vector<T>& b) {
  if (a.size() < 2)
    throw data_error("TooFewPoints", "adjusted_rand_index needs n >= 2");
  const auto c = detail::contingency(a, b);
  double sum_nij = 0.0;
  for (auto v : c.counts) sum_nij += detail::choose2(v);
  double sum_a = 0.0, sum_b = 0.0;
  for (auto v : c.a_sizes) sum_a += detail::choose2(v);
  for (auto v : c.b_sizes) sum_b += detail::choose2(v);
  const double pairs = detail::choose2(c.n);
  const double expected = sum_a * sum_b / pairs;
  const double maximum = 0.5 * (sum_a + sum_b);
  if (std::abs(maximum - expected) < 1e-12) {
    // Identical up to relabeling iff each row and column holds exactly one
    // nonzero contingency cell.
    const bool identical =
        c.ka == c.kb &&
        std::count_if(c.counts.begin(), c.counts.end(),
                      [](std::int64_t v) { return v > 0; }) ==
            static_cast<std::ptrdiff_t>(c.ka);
    return identical ? 1.0 : 0.0;
  }
  return (sum_nij - expected) / (maximum - expected);
}

// Mutual information normalized by the arithmetic-mean entropy; natural log
// internally.
template <typename T>
inline double nmi(const std::vector<T>& a, const std::vector<T>& b) {
  const auto c = detail::contingency(a, b);
  if (c.n == 0) throw data_error("TooFewPoints", "nmi on empty input");
  const double n = static_cast<double>(c.n);
  double h_a = 0.0, h_b = 0.0, mi = 0.0;
  for (auto v : c.a_sizes)
    if (v > 0) h_a -= v / n * std::log(v / n);
  for (auto v : c.b_sizes)
    if (v > 0) h_b -= v / n * std::log(v / n);
  if (h_a == 0.0 && h_b == 0.0) return 1.0;  // both single-cluster
  for (std::size_t i = 0; i < c.ka; ++i)
    for (std::size_t j = 0; j < c.kb; ++j) {
      const std::int64_t nij = c.counts[i * c.kb + j];
      if (nij == 0) continue;
      mi += nij / n *
            std::log(nij * n /
                     (static_cast<double>(c.a_sizes[i]) *
                      static_cast<double>(c.b_sizes[j])));
    }
  const double denom = 0.5 * (h_a + h_b);
  return std::max(0.0, mi) / denom;
}

// Best one-to-one cluster-to-class matching accuracy, via optimal assignment
// on the (zero-padded square) contingency matrix.
template <typename T>
inline double clustering_accuracy(const std::vector<T>& truth,
                                  const std::vector<T>& assignment) {
  const auto c = detail::contingency(truth, assignment);
  if (c.n == 0)
    throw data_error("LengthMismatch", "clustering_accuracy on empty input");
  const int k = static_cast<int>(std::max(c.ka, c.kb));
  std::vector<double> cost(static_cast<std::size_t>(k) * k, 0.0);
  for (std::size_t i = 0; i < c.ka; ++i)
    for (std::size_t j = 0; j < c.kb; ++j)
      cost[i * k + j] = -static_cast<double>(c.counts[i * c.kb + j]);
  const auto row_of_col = detail::hungarian(cost, k);
  double matched = 0.0;
  for (int j = 0; j < k; ++j) {
    const int i = row_of_col[j];
    if (i < static_cast<int>(c.ka) && j < static_cast<int>(c.kb))
      matched += static_cast<double>(c.counts[i * c.kb + j]);
  }
  return matched / static_cast<double>(c.n);
}

inline double generalizability(double loss_train, double loss_validation) {
  if (loss_validation <= 0.0)
    throw numeric_error("ZeroValidationLoss",
                        "validation loss must be positive");
  return loss_train / loss_validation;
}

template <typename T>
inline ClusteringScore clustering_score(const std::vector<T>& truth,
                                        const std::vector<T>& assignment) {
  ClusteringScore s;
  s.ri = rand_index(truth, assignment);
  s.ari = adjusted_rand_index(truth, assignment);
  s.nmi = nmi(truth, assignment);
  s.acc = clustering_accuracy(truth, assignment);
  return s;
}

}  // namespace popgen
