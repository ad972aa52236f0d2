#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "noisyfp/dataset_io.hpp"
#include "noisyfp/error.hpp"
#include "noisyfp/exact.hpp"
#include "noisyfp/generators.hpp"
#include "test_util.hpp"

namespace noisyfp {
namespace {

using testing::flips_of;
using testing::labeled;

std::vector<std::int64_t> labels_of(const Dataset& ds) { return {ds.labels().begin(), ds.labels().end()}; }

TEST(GenClusterTest, Orders) {
  EXPECT_EQ(labels_of(gen_cluster({2, 3, 1})), (std::vector<std::int64_t>{0, 0, 1, 1, 1, 2}));
  EXPECT_EQ(labels_of(gen_cluster({2, 3, 1}, ClusterOrder::kInterleaved)),
            (std::vector<std::int64_t>{0, 1, 2, 0, 1, 1}));
  auto shuffled = labels_of(gen_cluster({2, 3, 1}, ClusterOrder::kShuffled, 5));
  EXPECT_EQ(shuffled, labels_of(gen_cluster({2, 3, 1}, ClusterOrder::kShuffled, 5)));
  std::ranges::sort(shuffled);
  EXPECT_EQ(shuffled, (std::vector<std::int64_t>{0, 0, 1, 1, 1, 2}));
  EXPECT_THROW(parse_cluster_order("random"), ConfigError);
}

TEST(GenClusterTest, MomentsAndNoNoise) {
  const auto ds = gen_cluster(std::vector<std::size_t>(10, 20));
  EXPECT_EQ(ds.size(), 200u);
  EXPECT_EQ(exact_fp(ds, 2), 4000u);
  EXPECT_EQ(eta_p(ds, 2), 0.0);
  EXPECT_TRUE(gen_cluster({}).size() == 0);
}

TEST(GenPerturbedTest, SingleFlipExample) {
  const auto ds = gen_perturbed(gen_cluster({1, 1}), std::vector<NodePair>{{1, 2}});
  EXPECT_TRUE(ds.similar(1, 2));
  EXPECT_DOUBLE_EQ(eta_p(ds, 2), 1.0);
}

TEST(GenPerturbedTest, RandomFlipsAreNewAndDistinct) {
  const auto base = labeled({1, 1, 2, 2, 3, 4, 5, 5}, {{1, 3}});
  const auto ds = gen_perturbed(base, 10, 7);
  const auto flips = flips_of(ds);
  EXPECT_EQ(flips.size(), 11u);
  EXPECT_TRUE(std::ranges::find(flips, NodePair{1, 3}) != flips.end());
  EXPECT_EQ(std::set<NodePair>(flips.begin(), flips.end()).size(), flips.size());
  EXPECT_THROW(gen_perturbed(base, 100, 7), ConfigError);  // only 28 pairs exist
}

TEST(GenPerturbedTest, TargetEtaIsReached) {
  const auto base = gen_cluster(std::vector<std::size_t>(10, 10));
  std::size_t added = 0;
  const auto ds = gen_target_eta(base, 2, 0.05, 3, &added);
  const double eta = eta_p(ds, 2);
  EXPECT_GE(eta, 0.05);
  EXPECT_LT(eta, 0.06);
  EXPECT_EQ(flips_of(ds).size(), added);
  // Exactly one flip too few stays below the target.
  auto fewer = flips_of(ds);
  fewer.pop_back();
  EXPECT_LT(eta_p(gen_perturbed(base, fewer), 2), 0.05);
}

TEST(GenPerturbedTest, LemmaBoundsOnRandomFlips) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto ds = gen_perturbed(gen_cluster({5, 4, 3, 1, 1}, ClusterOrder::kShuffled, seed), 6, seed);
    for (unsigned p : {2u, 3u}) {
      const auto diff = clique_set_differences(ds, p);
      const double mass = static_cast<double>(mismatch_sum(ds, p));
      EXPECT_LE(diff.observed_only, mass);
      EXPECT_LE(diff.ground_truth_only, p / 2.0 * mass);
    }
  }
}

TEST(DisjTest, Structure) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto no = gen_disj(30, 4, DisjKind::kNo, seed);
    EXPECT_FALSE(no.i_star);
    std::map<std::size_t, int> owners;
    for (const auto& set : no.sets) {
      EXPECT_TRUE(std::ranges::is_sorted(set));
      for (auto e : set) ++owners[e];
    }
    EXPECT_EQ(owners.size(), 30u);
    for (auto [e, c] : owners) EXPECT_EQ(c, 1) << e;

    const auto yes = gen_disj(30, 4, DisjKind::kYes, seed);
    ASSERT_TRUE(yes.i_star);
    for (std::size_t e = 1; e <= 30; ++e) {
      int c = 0;
      for (std::size_t p = 0; p < 4; ++p) c += yes.holds(p, e) ? 1 : 0;
      EXPECT_EQ(c, e == *yes.i_star ? 4 : 1);
    }
  }
}

ReductionParams small_params(Construction c) {
  ReductionParams params;
  params.p = 2;
  params.epsilon = 0.2;
  params.k = 2;
  params.t_override = 2;
  params.n_override = 4;
  params.construction = c;
  return params;
}

TEST(ReductionTest, ResolvedParameters) {
  const auto r = resolve_reduction(ReductionParams{});
  EXPECT_EQ(r.t, 160u);
  EXPECT_EQ(r.n, 62u);
  EXPECT_EQ(r.per_player, 4u);
  EXPECT_EQ(r.s, 244u);
  EXPECT_EQ(r.items, 9920u);
  ReductionParams bad;
  bad.epsilon = 0.4;
  EXPECT_THROW(resolve_reduction(bad), ConfigError);
  bad.epsilon = 0.2;
  bad.t_override = 5;  // not a multiple of k = 40
  EXPECT_THROW(resolve_reduction(bad), ConfigError);
  bad = ReductionParams{};
  bad.p = 1;
  EXPECT_THROW(resolve_reduction(bad), ConfigError);
  EXPECT_THROW(parse_construction("dense"), ConfigError);
  EXPECT_EQ(parse_construction(to_string(Construction::kCompact)), Construction::kCompact);
}

TEST(ReductionTest, SmallInstanceMoments) {
  for (auto c : {Construction::kSymDiff, Construction::kCompact}) {
    const auto params = small_params(c);
    const auto yes = reduce_disj_to_dataset(gen_disj(4, 2, DisjKind::kYes, 1), params, 1);
    const auto no = reduce_disj_to_dataset(gen_disj(4, 2, DisjKind::kNo, 1), params, 1);
    EXPECT_EQ(yes.dataset.size(), 8u);
    EXPECT_EQ(exact_fp(yes.dataset, 2), 10u);  // (n-1)t + t^2
    EXPECT_EQ(exact_fp(no.dataset, 2), 8u);
  }
}

TEST(ReductionTest, LayoutTagsAndPartition) {
  ReductionParams params = small_params(Construction::kSymDiff);
  params.k = 3;
  params.t_override = 6;
  params.n_override = 5;
  const auto inst = gen_disj(5, 3, DisjKind::kYes, 4);
  const auto out = reduce_disj_to_dataset(inst, params, 4);
  ASSERT_EQ(out.dataset.size(), 30u);
  std::size_t q = 0;
  for (std::int64_t e = 1; e <= 5; ++e) {
    for (std::int64_t p = 0; p < 3; ++p) {
      for (std::int64_t j = 1; j <= 2; ++j, ++q) {
        EXPECT_EQ(out.dataset.tags()[q], (ItemTag{e, p, j}));
        EXPECT_EQ(out.partition.site_of(q + 1), static_cast<std::size_t>(p));
        const bool clique = static_cast<std::size_t>(e) == *inst.i_star;
        if (clique) EXPECT_EQ(out.dataset.label(q + 1), e);
      }
    }
  }
  for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(out.partition.nodes(s).size(), 10u);
  EXPECT_TRUE(out.y.empty());
  const auto rep = verify_property1(out.dataset, inst);
  EXPECT_TRUE(rep.all());
}

TEST(ReductionTest, SymDiffHoldsPropertyOne) {
  ReductionParams params = small_params(Construction::kSymDiff);
  params.k = 4;
  params.t_override = 8;
  params.n_override = 6;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (auto kind : {DisjKind::kYes, DisjKind::kNo}) {
      const auto inst = gen_disj(6, 4, kind, seed);
      const auto rep = verify_property1(reduce_disj_to_dataset(inst, params, seed).dataset, inst);
      EXPECT_TRUE(rep.all()) << "seed=" << seed;
      EXPECT_EQ(rep.pairs_checked[0] + rep.pairs_checked[1] + rep.pairs_checked[2] + rep.pairs_checked[3],
                48u * 47u / 2u);
      EXPECT_EQ(rep.pairs_checked[1], kind == DisjKind::kYes ? 6u * 4u : 0u);
    }
  }
}

TEST(ReductionTest, CompactNeedsDistinctOffsets) {
  ReductionParams params = small_params(Construction::kCompact);
  params.t_override = 4;  // two slots per player
  const auto inst = gen_disj(4, 2, DisjKind::kYes, 2);
  params.forced_y = std::vector<std::int64_t>{3, 3};
  const auto clash = verify_property1(reduce_disj_to_dataset(inst, params, 2).dataset, inst);
  // Equal offsets: cross-player items in different slots agree mod n.
  EXPECT_FALSE(clash.holds(2));
  EXPECT_EQ(clash.violations[1], 2u);
  EXPECT_EQ(clash.pairs_checked[1], 4u);
  EXPECT_TRUE(clash.holds(1) && clash.holds(3) && clash.holds(4));
  params.forced_y = std::vector<std::int64_t>{1, 4};
  const auto out = reduce_disj_to_dataset(inst, params, 2);
  EXPECT_EQ(out.y, (std::vector<std::int64_t>{1, 4}));
  EXPECT_TRUE(verify_property1(out.dataset, inst).all());
  params.forced_y = std::vector<std::int64_t>{0, 4};
  EXPECT_THROW(reduce_disj_to_dataset(inst, params, 2), ConfigError);
  params.forced_y = std::vector<std::int64_t>{1};
  EXPECT_THROW(reduce_disj_to_dataset(inst, params, 2), ConfigError);
  EXPECT_THROW(reduce_disj_to_dataset(gen_disj(5, 2, DisjKind::kYes, 2), small_params(Construction::kCompact), 2),
               ConfigError);
}

TEST(ReductionTest, JsonLinesRoundTrip) {
  for (auto c : {Construction::kSymDiff, Construction::kCompact}) {
    ReductionParams params = small_params(c);
    params.k = 3;
    params.t_override = 6;
    params.n_override = 5;
    const auto out = reduce_disj_to_dataset(gen_disj(5, 3, DisjKind::kYes, 8), params, 8);
    std::stringstream first;
    write_dataset(first, out.dataset);
    const auto back = read_dataset(first);
    std::stringstream second;
    write_dataset(second, back);
    EXPECT_EQ(first.str(), second.str());
    EXPECT_TRUE(std::ranges::equal(back.tags(), out.dataset.tags()));
    for (NodeIndex i = 1; i <= back.size(); ++i) {
      for (NodeIndex j = i + 1; j <= back.size(); ++j) EXPECT_EQ(back.similar(i, j), out.dataset.similar(i, j));
    }
  }
}

TEST(AdversaryTest, PaperInstance) {
  const auto adv = gen_kpartite_adversary(1024, 32, 4, 3);
  EXPECT_EQ(adv.clique_size, 32u);
  EXPECT_EQ(exact_fp(adv.dataset, 2), 992u + 1024u);
  EXPECT_DOUBLE_EQ(eta_p(adv.dataset, 2), 32.0 * (32 - 25) / 2016.0);
  for (std::size_t s = 0; s < 4; ++s) {
    std::size_t members = 0;
    for (auto i : adv.partition.nodes(s)) members += adv.dataset.label(i) == 0 ? 1 : 0;
    EXPECT_EQ(members, 8u);
    EXPECT_EQ(adv.partition.nodes(s).size(), 256u);
  }
  for (auto a : adv.clique) {
    for (auto b : adv.clique) {
      EXPECT_EQ(adv.dataset.similar(a, b), a == b || adv.partition.site_of(a) != adv.partition.site_of(b));
    }
  }
}

TEST(AdversaryTest, EdgeCases) {
  const auto k_only = gen_kpartite_adversary(10, 4, 4, 1);
  EXPECT_EQ(k_only.clique_size, 4u);
  EXPECT_EQ(flips_of(k_only.dataset).size(), 0u);
  EXPECT_EQ(eta_p(k_only.dataset, 2), 0.0);
  const auto none = gen_kpartite_adversary(10, 0, 3, 1);
  EXPECT_EQ(exact_fp(none.dataset, 2), 10u);
  EXPECT_EQ(gen_kpartite_adversary(40, 30, 4, 1).clique_size, 32u);
  EXPECT_THROW(gen_kpartite_adversary(30, 30, 4, 1), ConfigError);
  EXPECT_THROW(gen_kpartite_adversary(30, 3, 0, 1), ConfigError);
}

}  // namespace
}  // namespace noisyfp
