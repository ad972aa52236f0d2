#include <cmath>
#include <cstdlib>
#include <numeric>

#include <gtest/gtest.h>

#include "noisyfp/error.hpp"
#include "noisyfp/exact.hpp"
#include "test_util.hpp"

namespace noisyfp {
namespace {

using testing::from_edges;
using testing::labeled;
using testing::random_noisy;

// Tuple-by-tuple enumeration of [m]^p, independent of the bitset DFS.
std::uint64_t enumerate_cliques(const Dataset& ds, unsigned p, Relation rel) {
  const std::size_t m = ds.size();
  std::vector<NodeIndex> t(p, 1);
  std::uint64_t count = 0;
  while (true) {
    bool clique = true;
    for (unsigned a = 0; a < p && clique; ++a) {
      for (unsigned b = a + 1; b < p && clique; ++b) clique = ds.similar(t[a], t[b], rel);
    }
    count += clique ? 1 : 0;
    unsigned pos = 0;
    while (pos < p && t[pos] == m) t[pos++] = 1;
    if (pos == p) return count;
    ++t[pos];
  }
}

Dataset permuted(const Dataset& ds, const std::vector<NodeIndex>& to, const std::vector<NodePair>& flips) {
  std::vector<std::int64_t> labels(ds.size());
  for (NodeIndex i = 1; i <= ds.size(); ++i) labels[to[i] - 1] = ds.label(i);
  std::vector<NodePair> moved;
  for (auto [a, b] : flips) moved.emplace_back(to[a], to[b]);
  return labeled(labels, moved);
}

TEST(ExactFpTest, Examples) {
  EXPECT_EQ(exact_fp(labeled({1, 1, 2}), 2), 5u);
  EXPECT_EQ(exact_fp(labeled({1, 2, 3, 4, 5}), 3), 5u);
  EXPECT_EQ(exact_fp(labeled({1, 1, 1, 2}), 3), 28u);
  EXPECT_DOUBLE_EQ(frequency_moment(labeled({1, 1, 1, 2}), 1.5), std::pow(3.0, 1.5) + 1);
}

TEST(ExactFpTest, Errors) {
  Dataset unlabeled({Item(Labeled{1})}, SimilarityOracle::label_with_flips());
  EXPECT_THROW(exact_fp(unlabeled, 2), MissingGroundTruth);
  EXPECT_THROW(eta_p(unlabeled, 2), MissingGroundTruth);
  EXPECT_THROW(clique_set_differences(unlabeled, 2), MissingGroundTruth);
  EXPECT_THROW(degree_moment(unlabeled, 2, Relation::kGroundTruth), MissingGroundTruth);
  EXPECT_THROW(exact_fp(labeled({1}), 0), ConfigError);
  EXPECT_THROW(eta_p(labeled({1}), 0.5), ConfigError);
  std::vector<std::int64_t> big(1 << 16, 7);
  EXPECT_THROW(exact_fp(labeled(big), 5), ConfigError);  // 2^80
}

TEST(CliqueCountTest, Examples) {
  // Relation {(1,1),(1,2),(2,2)} on two nodes: every triple is a clique.
  EXPECT_EQ(count_ordered_p_cliques(from_edges(2, {{1, 2}}), 3), 8u);
  EXPECT_EQ(count_ordered_p_cliques(labeled({1, 2, 3, 4}), 2), 4u);
  const auto aab = labeled({1, 1, 2});
  EXPECT_EQ(count_ordered_p_cliques(aab, 2), 5u);
  EXPECT_EQ(count_ordered_p_cliques(aab, 2, Relation::kGroundTruth), exact_fp(aab, 2));
}

TEST(CliqueCountTest, MatchesTupleEnumeration) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    auto ds = random_noisy(3 + seed % 9, 1 + seed % 4, seed % 7, seed);
    for (unsigned p = 1; p <= 4; ++p) {
      for (auto rel : {Relation::kObserved, Relation::kGroundTruth}) {
        EXPECT_EQ(count_ordered_p_cliques(ds, p, rel), enumerate_cliques(ds, p, rel));
      }
    }
  }
}

TEST(CliqueCountTest, BudgetGuard) {
  auto ds = random_noisy(100, 5, 0, 1);
  EXPECT_THROW(count_ordered_p_cliques(ds, 5, Relation::kObserved, 1000000), BudgetExceeded);
  EXPECT_NO_THROW(count_ordered_p_cliques(ds, 3, Relation::kObserved, 1000000));
  EXPECT_EQ(brute_force_budget(), 1000000000u);
  ::setenv("NOISYFP_BRUTE_FORCE_BUDGET", "50", 1);
  EXPECT_EQ(brute_force_budget(), 50u);
  EXPECT_THROW(count_ordered_p_cliques(labeled({1, 2, 3, 4, 5, 6, 7, 8}), 2), BudgetExceeded);
  ::unsetenv("NOISYFP_BRUTE_FORCE_BUDGET");
}

TEST(CliqueDifferencesTest, Examples) {
  const auto same = labeled({1, 1, 2, 3, 3});
  EXPECT_EQ(clique_set_differences(same, 3), (CliqueDifferences{0, 0}));
  EXPECT_EQ(clique_set_differences(labeled({1, 2}, {{1, 2}}), 2), (CliqueDifferences{2, 0}));
  EXPECT_EQ(clique_set_differences(labeled({1, 1}, {{1, 2}}), 2), (CliqueDifferences{0, 2}));
}

TEST(CliqueDifferencesTest, MatchesSetArithmetic) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto ds = random_noisy(4 + seed % 6, 2, 4, seed + 11);
    for (unsigned p = 1; p <= 3; ++p) {
      const auto d = clique_set_differences(ds, p);
      // |A \ B| = |A| - |A ∩ B|; count the intersection by enumeration.
      std::uint64_t both = 0;
      const std::size_t m = ds.size();
      std::vector<NodeIndex> t(p, 1);
      while (true) {
        bool in_s = true, in_t = true;
        for (unsigned a = 0; a < p; ++a) {
          for (unsigned b = a + 1; b < p; ++b) {
            in_s = in_s && ds.similar(t[a], t[b]);
            in_t = in_t && ds.similar(t[a], t[b], Relation::kGroundTruth);
          }
        }
        both += in_s && in_t ? 1 : 0;
        unsigned pos = 0;
        while (pos < p && t[pos] == m) t[pos++] = 1;
        if (pos == p) break;
        ++t[pos];
      }
      EXPECT_EQ(d.observed_only, enumerate_cliques(ds, p, Relation::kObserved) - both);
      EXPECT_EQ(d.ground_truth_only, enumerate_cliques(ds, p, Relation::kGroundTruth) - both);
    }
  }
}

TEST(EtaTest, Examples) {
  EXPECT_EQ(eta_p(labeled({1, 1, 2, 2, 2}), 2), 0.0);
  EXPECT_EQ(eta_p(labeled({1, 2}, {{1, 2}}), 2), 1.0);
  EXPECT_EQ(eta_p(random_noisy(20, 3, 15, 4), 1), 0.0);
  EXPECT_EQ(mismatch_sum(labeled({1, 2}, {{1, 2}}), 2), 2u);
}

TEST(EtaTest, InvariantUnderConsistentReordering) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t m = 15;
    auto ds = random_noisy(m, 4, 10, seed);
    auto flips = testing::flips_of(ds);
    std::vector<NodeIndex> to(m + 1);
    std::iota(to.begin(), to.end(), 0);
    SplitMix64 rng(seed);
    for (std::size_t i = m; i > 1; --i) std::swap(to[i], to[1 + uniform_below(rng, i)]);
    auto moved = permuted(ds, to, flips);
    for (double p : {1.5, 2.0, 3.0}) EXPECT_DOUBLE_EQ(eta_p(moved, p), eta_p(ds, p));
  }
}

TEST(EtaTest, FalsePositiveNeverDecreasesEta) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto ds = random_noisy(12, 4, 3, seed);
    auto flips = testing::flips_of(ds);
    std::vector<std::int64_t> labels(ds.labels().begin(), ds.labels().end());
    for (NodeIndex i = 1; i <= 12; ++i) {
      for (NodeIndex j = i + 1; j <= 12; ++j) {
        if (ds.similar(i, j) || labels[i - 1] == labels[j - 1]) continue;
        auto more = flips;
        more.emplace_back(i, j);
        EXPECT_GE(eta_p(labeled(labels, more), 2), eta_p(ds, 2));
        EXPECT_GE(eta_p(labeled(labels, more), 3), eta_p(ds, 3));
      }
    }
  }
}

TEST(DegreeMomentTest, Examples) {
  EXPECT_EQ(degree_moment_exact(labeled({1, 1, 2}), 2, Relation::kGroundTruth), 5u);
  EXPECT_EQ(degree_moment_exact(labeled({1, 2, 3, 4, 5, 6}), 4), 6u);
  EXPECT_EQ(degree_moment_exact(from_edges(4, {{1, 2}, {1, 3}, {1, 4}}), 2), 10u);
  EXPECT_DOUBLE_EQ(degree_moment(from_edges(4, {{1, 2}, {1, 3}, {1, 4}}), 2.5),
                   std::pow(4.0, 1.5) + 3 * std::pow(2.0, 1.5));
}

TEST(FactTest, CliquesFrequencyAndDegreeMomentAgreeOnClusterGraphs) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto ds = random_noisy(10 + seed, 1 + seed % 6, 0, seed);
    for (unsigned p = 1; p <= 3; ++p) {
      const auto fp = exact_fp(ds, p);
      EXPECT_EQ(count_ordered_p_cliques(ds, p, Relation::kGroundTruth), fp);
      EXPECT_EQ(count_ordered_p_cliques(ds, p), fp);
      EXPECT_EQ(degree_moment_exact(ds, p, Relation::kGroundTruth), fp);
    }
  }
}

TEST(LemmaTest, SetDifferenceBounds) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto ds = random_noisy(8 + seed % 20, 2 + seed % 5, seed % 12, seed);
    for (unsigned p = 2; p <= 3; ++p) {
      const auto d = clique_set_differences(ds, p);
      const auto fp = exact_fp(ds, p);
      const auto mismatch = mismatch_sum(ds, p);
      // Integer forms of diff <= eta*F_p and diff <= (p/2)*eta*F_p.
      EXPECT_LE(d.observed_only, mismatch);
      EXPECT_LE(2 * d.ground_truth_only, p * mismatch);
      EXPECT_NEAR(eta_p(ds, p), static_cast<double>(mismatch) / fp, 1e-12);
    }
  }
}

TEST(ExactReportTest, Fields) {
  auto ds = labeled({1, 2}, {{1, 2}});
  const auto r = exact_report(ds, 2);
  EXPECT_EQ(r.m, 2u);
  EXPECT_EQ(*r.f_p, 2.0);
  EXPECT_EQ(*r.k_p_sigma, 4u);
  EXPECT_EQ(*r.k_p_tau, 2u);
  EXPECT_EQ(*r.diff_sigma_minus_tau, 2u);
  EXPECT_EQ(*r.diff_tau_minus_sigma, 0u);
  EXPECT_EQ(*r.eta_p, 1.0);
  EXPECT_EQ(r.degree_moment_sigma, 4.0);
  EXPECT_EQ(*r.degree_moment_tau, 2.0);

  const auto skipped = exact_report(ds, 2, true);
  EXPECT_FALSE(skipped.k_p_sigma.has_value());
  const auto real = exact_report(ds, 1.5);
  EXPECT_FALSE(real.k_p_tau.has_value());
  EXPECT_TRUE(real.eta_p.has_value());

  Dataset unlabeled({Item(Labeled{1})}, SimilarityOracle::label_with_flips());
  const auto bare = exact_report(unlabeled, 2);
  EXPECT_FALSE(bare.f_p.has_value());
  EXPECT_EQ(*bare.k_p_sigma, 1u);
}

}  // namespace
}  // namespace noisyfp
