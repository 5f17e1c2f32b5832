#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "popgen/metrics.hpp"

using namespace popgen;

TEST_CASE("confusion matrix layout: rows true, columns predicted") {
  const std::vector<std::size_t> yt = {0, 0, 1, 1, 1, 2};
  const std::vector<std::size_t> yp = {0, 1, 1, 1, 0, 2};
  const auto cm = confusion_matrix(yt, yp, {"A", "B", "C"});
  CHECK(cm.at(0, 0) == 1);
  CHECK(cm.at(0, 1) == 1);
  CHECK(cm.at(1, 0) == 1);
  CHECK(cm.at(1, 1) == 2);
  CHECK(cm.at(2, 2) == 1);
  CHECK(cm.support(1) == 3);
  CHECK(cm.predicted_total(0) == 2);
  CHECK(cm.total() == 6);
  CHECK_THROWS_WITH_AS(confusion_matrix({0}, {0, 1}, {"A", "B"}),
                       doctest::Contains("LengthMismatch"), Error);
  CHECK_THROWS_WITH_AS(confusion_matrix({5}, {0}, {"A", "B"}),
                       doctest::Contains("UnknownLabel"), Error);
}

TEST_CASE("per-class error rates match published-style fractions") {
  // three classes with supports 61, 94, 91 and 2, 8, 10 off-diagonal errors
  ConfusionMatrix cm;
  cm.labels = {"A", "B", "C"};
  cm.counts = {59, 1, 1,    //
               5,  86, 3,   //
               4,  6,  81};
  CHECK(cm.support(0) == 61);
  CHECK(cm.support(1) == 94);
  CHECK(cm.support(2) == 91);
  CHECK(cm.row_error(0) == doctest::Approx(2.0 / 61.0));   // 0.0328
  CHECK(cm.row_error(1) == doctest::Approx(8.0 / 94.0));   // 0.0851
  CHECK(cm.row_error(2) == doctest::Approx(10.0 / 91.0));  // 0.1099
  CHECK(cm.row_error(0) == doctest::Approx(0.0328).epsilon(2e-3));
  CHECK(cm.row_error(1) == doctest::Approx(0.0851).epsilon(2e-3));
  CHECK(cm.row_error(2) == doctest::Approx(0.1099).epsilon(2e-3));
}

TEST_CASE("weighted precision/recall/F1 match an external implementation") {
  // frozen from scikit-learn precision_recall_fscore_support(average=
  // 'weighted', zero_division=0)
  const std::vector<std::size_t> yt = {0, 0, 0, 1, 1, 2};
  const std::vector<std::size_t> yp = {0, 0, 1, 1, 1, 2};
  const auto cm = confusion_matrix(yt, yp, {"A", "B", "C"});
  const auto prf = weighted_prf(cm);
  CHECK(prf.precision == doctest::Approx(0.8888888888888888));
  CHECK(prf.recall == doctest::Approx(0.8333333333333334));
  CHECK(prf.f == doctest::Approx(0.8333333333333334));
}

TEST_CASE("zero-division conventions give 0, not NaN") {
  // class B never predicted, class C empty
  const std::vector<std::size_t> yt = {0, 0, 1};
  const std::vector<std::size_t> yp = {0, 0, 0};
  const auto cm = confusion_matrix(yt, yp, {"A", "B", "C"});
  const auto prf = weighted_prf(cm);
  CHECK(std::isfinite(prf.precision));
  CHECK(std::isfinite(prf.recall));
  CHECK(std::isfinite(prf.f));
  // recall = (2/3)*1 + (1/3)*0 = 2/3
  CHECK(prf.recall == doctest::Approx(2.0 / 3.0));
  // B contributes 0 precision with weight 1/3; A has ppv 2/3
  CHECK(prf.precision == doctest::Approx((2.0 / 3.0) * (2.0 / 3.0)));
}

TEST_CASE("f-beta generalizes f1") {
  const std::vector<std::size_t> yt = {0, 0, 0, 1};
  const std::vector<std::size_t> yp = {0, 1, 1, 1};
  const auto cm = confusion_matrix(yt, yp, {"A", "B"});
  const auto f1 = weighted_prf(cm, 1.0);
  const auto f2 = weighted_prf(cm, 2.0);
  // beta = 2 weighs recall higher; recompute one class by hand
  const double ppv_a = 1.0, tpr_a = 1.0 / 3.0;
  const double f2_a = 5.0 * ppv_a * tpr_a / (4.0 * ppv_a + tpr_a);
  const double ppv_b = 1.0 / 3.0, tpr_b = 1.0;
  const double f2_b = 5.0 * ppv_b * tpr_b / (4.0 * ppv_b + tpr_b);
  CHECK(f2.f == doctest::Approx(0.75 * f2_a + 0.25 * f2_b));
  CHECK(f2.f != doctest::Approx(f1.f));
}

TEST_CASE("accuracy and rmse on class indices") {
  const std::vector<std::size_t> yt = {0, 1, 2, 3};
  const std::vector<std::size_t> yp = {0, 1, 3, 1};
  CHECK(accuracy(yt, yp) == doctest::Approx(0.5));
  // errors: 0, 0, 1, 2 -> sqrt(5/4)
  CHECK(rmse(yt, yp) == doctest::Approx(std::sqrt(5.0 / 4.0)));
  CHECK(rmse(yt, yt) == 0.0);
  CHECK_THROWS_AS(rmse({}, {}), Error);
}

TEST_CASE("rand index pair-counting examples") {
  // frozen from scikit-learn rand_score
  CHECK(rand_index<std::size_t>({0, 0, 1, 1}, {0, 1, 0, 1}) ==
        doctest::Approx(1.0 / 3.0));
  CHECK(rand_index<std::size_t>({0, 0, 1}, {0, 1, 2}) ==
        doctest::Approx(2.0 / 3.0));
  CHECK(rand_index<std::size_t>({0, 0, 1, 1}, {1, 1, 0, 0}) ==
        doctest::Approx(1.0));
  CHECK_THROWS_WITH_AS(rand_index<std::size_t>({0}, {0}),
                       doctest::Contains("TooFewPoints"), Error);
}

TEST_CASE("adjusted rand index examples and invariances") {
  // frozen from scikit-learn adjusted_rand_score
  CHECK(adjusted_rand_index<std::size_t>({0, 0, 1, 1}, {0, 1, 0, 1}) ==
        doctest::Approx(-0.5));
  CHECK(adjusted_rand_index<std::size_t>({0, 0, 1, 1}, {0, 0, 0, 1}) ==
        doctest::Approx(0.0));
  // perfect up to relabeling
  CHECK(adjusted_rand_index<std::string>({"a", "a", "b", "b"},
                                         {"y", "y", "x", "x"}) ==
        doctest::Approx(1.0));
  // symmetric
  const std::vector<std::size_t> a = {0, 0, 1, 1, 2, 2, 0};
  const std::vector<std::size_t> b = {0, 1, 1, 1, 2, 0, 0};
  CHECK(adjusted_rand_index(a, b) == doctest::Approx(adjusted_rand_index(b, a)));
  // degenerate cases: both trivial partitions
  CHECK(adjusted_rand_index<std::size_t>({0, 0, 0}, {1, 1, 1}) == 1.0);
  CHECK(adjusted_rand_index<std::size_t>({0, 1, 2}, {5, 3, 1}) == 1.0);
  CHECK(adjusted_rand_index<std::size_t>({0, 0, 0}, {0, 1, 2}) == 0.0);
}

TEST_CASE("random partitions have near-zero expected ari") {
  Rng rng = make_rng(17);
  std::uniform_int_distribution<std::size_t> lab(0, 2);
  double sum = 0.0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    std::vector<std::size_t> a(100), b(100);
    for (auto& x : a) x = lab(rng);
    for (auto& x : b) x = lab(rng);
    sum += adjusted_rand_index(a, b);
  }
  CHECK(std::abs(sum / trials) < 0.05);
}

TEST_CASE("nmi examples") {
  // frozen from scikit-learn normalized_mutual_info_score with the
  // arithmetic-mean denominator
  CHECK(nmi<std::size_t>({0, 0, 1, 1}, {0, 0, 0, 1}) ==
        doctest::Approx(0.3437110184854508));
  CHECK(nmi<std::size_t>({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(nmi<std::size_t>({0, 0, 0, 0}, {0, 0, 0, 0}) == 1.0);
  // independent partitions -> zero information
  CHECK(nmi<std::size_t>({0, 0, 1, 1}, {0, 1, 0, 1}) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("clustering accuracy equals brute-force best permutation") {
  auto brute_force = [](const std::vector<std::size_t>& truth,
                        const std::vector<std::size_t>& assignment) {
    std::size_t k = 0;
    for (auto v : truth) k = std::max(k, v + 1);
    for (auto v : assignment) k = std::max(k, v + 1);
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 0.0;
    do {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < truth.size(); ++i)
        if (perm[assignment[i]] == truth[i]) ++hits;
      best = std::max(best,
                      static_cast<double>(hits) /
                          static_cast<double>(truth.size()));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  };

  Rng rng = make_rng(91);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + trial % 5;  // up to 6 clusters
    const std::size_t n = 5 + trial % 20;
    std::uniform_int_distribution<std::size_t> lab(0, k - 1);
    std::vector<std::size_t> truth(n), assignment(n);
    for (auto& v : truth) v = lab(rng);
    for (auto& v : assignment) v = lab(rng);
    CHECK(clustering_accuracy(truth, assignment) ==
          doctest::Approx(brute_force(truth, assignment)));
  }
  // unequal cluster counts also work (rectangular padded internally)
  CHECK(clustering_accuracy<std::size_t>({0, 1, 2, 2}, {0, 0, 1, 1}) ==
        doctest::Approx(brute_force({0, 1, 2, 2}, {0, 0, 1, 1})));
}

TEST_CASE("generalizability ratio") {
  CHECK(generalizability(0.4, 0.5) == doctest::Approx(0.8));
  CHECK(generalizability(0.5, 0.5) == doctest::Approx(1.0));
  CHECK_THROWS_WITH_AS(generalizability(0.1, 0.0),
                       doctest::Contains("ZeroValidationLoss"), Error);
}

TEST_CASE("clustering_score bundles the four metrics consistently") {
  const std::vector<std::size_t> truth = {0, 0, 0, 1, 1, 2, 2, 2};
  const std::vector<std::size_t> assignment = {1, 1, 0, 2, 2, 0, 0, 0};
  const auto s = clustering_score(truth, assignment);
  CHECK(s.ri == doctest::Approx(rand_index(truth, assignment)));
  CHECK(s.ari == doctest::Approx(adjusted_rand_index(truth, assignment)));
  CHECK(s.nmi == doctest::Approx(nmi(truth, assignment)));
  CHECK(s.acc == doctest::Approx(clustering_accuracy(truth, assignment)));
  CHECK(s.acc == doctest::Approx(7.0 / 8.0));
}
