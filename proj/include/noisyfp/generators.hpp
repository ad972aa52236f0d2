#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "noisyfp/dataset.hpp"
#include "noisyfp/distsim.hpp"

namespace noisyfp {

enum class ClusterOrder { kGrouped, kInterleaved, kShuffled };

ClusterOrder parse_cluster_order(const std::string& name);

/// Noiseless dataset with one clique per entry of `sizes`. Item payload ids
/// equal the ground-truth labels (0, 1, ... per clique).
Dataset gen_cluster(const std::vector<std::size_t>& sizes, ClusterOrder order = ClusterOrder::kGrouped,
                    std::uint64_t seed = 0);

/// The base dataset with its observed relation inverted on `flips`.
/// Requires a LabelWithFlips base; existing flips are kept.
Dataset gen_perturbed(const Dataset& base, const std::vector<NodePair>& flips);

/// `count` distinct random pairs, none already flipped in the base.
Dataset gen_perturbed(const Dataset& base, std::size_t count, std::uint64_t seed);

/// Adds random flips one at a time until eta_p reaches `target_eta`.
/// `flips_added` receives the number of new pairs.
Dataset gen_target_eta(const Dataset& base, double p, double target_eta, std::uint64_t seed,
                       std::size_t* flips_added = nullptr);

enum class DisjKind { kNo, kYes };

/// Multiparty set disjointness: k subsets of [n], pairwise disjoint (NO) or
/// sharing exactly one element i_star and otherwise disjoint (YES).
struct DisjInstance {
  std::size_t n = 0;
  std::size_t k = 0;
  DisjKind kind = DisjKind::kNo;
  std::optional<std::size_t> i_star;
  std::vector<std::vector<std::size_t>> sets;  // sets[κ], elements in 1..n ascending

  bool holds(std::size_t player, std::size_t element) const;
};

/// Every element other than i_star goes to one uniformly random player.
DisjInstance gen_disj(std::size_t n, std::size_t k, DisjKind kind, std::uint64_t seed);

enum class Construction { kSymDiff, kCompact };

Construction parse_construction(const std::string& name);
std::string to_string(Construction construction);

struct ReductionParams {
  unsigned p = 2;
  double epsilon = 0.2;
  std::size_t m = 10000;
  std::size_t k = 40;
  Construction construction = Construction::kSymDiff;
  std::optional<std::size_t> t_override;  // must be a positive multiple of k
  std::optional<std::size_t> n_override;
  std::optional<std::vector<std::int64_t>> forced_y;  // COMPACT: Y per player, in 1..n
};

struct ResolvedReduction {
  unsigned p = 2;
  double epsilon = 0;
  std::size_t k = 0;
  std::size_t t = 0;           // items per element, a multiple of k
  std::size_t n = 0;           // DISJ universe size
  std::size_t s = 0;           // SYM-DIFF ground set size per element, a multiple of t/k
  std::size_t per_player = 0;  // t / k
  std::size_t items = 0;       // n * t
  Construction construction = Construction::kSymDiff;
};

/// t = ceil((10 ε m)^{1/p}) rounded to the nearest multiple of k (at least k),
/// n = floor(m / t), s = ceil(3 t² ln t / k²) rounded up to a multiple of t/k.
/// Throws ConfigError unless ε ∈ (0, 1/3) and p ≥ 2.
ResolvedReduction resolve_reduction(const ReductionParams& params);

struct ReductionOutput {
  Dataset dataset;
  SitePartition partition;  // item -> its creating player
  ResolvedReduction params;
  std::vector<std::int64_t> y;  // COMPACT offsets per player; empty for SYM-DIFF
};

/// Each player creates t/k items per element. Items are ordered by element,
/// then player, then slot, and tagged (element, player, slot). Ground truth
/// joins the items of i_star into one clique; all other items are singletons.
ReductionOutput reduce_disj_to_dataset(const DisjInstance& inst, const ReductionParams& params,
                                       std::uint64_t seed);

struct Property1Report {
  // Clauses: 1 same element and player -> dissimilar; 2 shared element,
  // different players -> similar; 3 element not shared by both -> dissimilar;
  // 4 different elements -> dissimilar.
  std::array<std::uint64_t, 4> pairs_checked{};
  std::array<std::uint64_t, 4> violations{};
  std::vector<std::pair<NodePair, int>> examples;  // first violations, with clause

  bool holds(int clause) const { return violations.at(clause - 1) == 0; }
  bool all() const;
};

/// Exhaustive scan over all item pairs. Requires item tags.
Property1Report verify_property1(const Dataset& ds, const DisjInstance& inst);

struct AdversaryOutput {
  Dataset dataset;
  SitePartition partition;
  std::size_t clique_size = 0;  // after padding to a multiple of k
  std::vector<NodeIndex> clique;
};

/// One ground-truth clique split evenly over k sites with every within-site
/// clique edge removed, plus singletons. The clique is padded up to a
/// multiple of k; ConfigError when that exceeds m.
AdversaryOutput gen_kpartite_adversary(std::size_t m, std::size_t clique_size, std::size_t k,
                                       std::uint64_t seed);

}  // namespace noisyfp
