#include "noisyfp/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "noisyfp/error.hpp"
#include "noisyfp/exact.hpp"
#include "noisyfp/rng.hpp"

namespace noisyfp {

namespace {

std::uint64_t pair_key(NodeIndex i, NodeIndex j) {
  if (i > j) std::swap(i, j);
  return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(j);
}

const LabelWithFlips& label_oracle(const Dataset& ds) {
  const auto* lf = std::get_if<LabelWithFlips>(&ds.oracle().kind());
  if (lf == nullptr) throw ConfigError("perturbation needs a label_with_flips dataset");
  if (!ds.has_ground_truth()) throw MissingGroundTruth();
  return *lf;
}

Dataset with_flips(const Dataset& base, std::vector<NodePair> flips) {
  std::vector<Item> items(base.items().begin(), base.items().end());
  std::vector<std::int64_t> labels(base.labels().begin(), base.labels().end());
  return Dataset(std::move(items), SimilarityOracle::label_with_flips(FlipSet(std::move(flips))),
                 std::move(labels));
}

NodePair random_pair(SplitMix64& rng, std::size_t m) {
  const NodeIndex i = uniform_below(rng, m) + 1;
  NodeIndex j = uniform_below(rng, m - 1) + 1;
  if (j >= i) ++j;
  return {std::min(i, j), std::max(i, j)};
}

}  // namespace

ClusterOrder parse_cluster_order(const std::string& name) {
  if (name == "grouped") return ClusterOrder::kGrouped;
  if (name == "interleaved") return ClusterOrder::kInterleaved;
  if (name == "shuffled" || name == "seeded-shuffle") return ClusterOrder::kShuffled;
  throw ConfigError("unknown cluster order '" + name + "'");
}

Dataset gen_cluster(const std::vector<std::size_t>& sizes, ClusterOrder order, std::uint64_t seed) {
  std::vector<std::int64_t> labels;
  switch (order) {
    case ClusterOrder::kGrouped:
    case ClusterOrder::kShuffled:
      for (std::size_t c = 0; c < sizes.size(); ++c) labels.insert(labels.end(), sizes[c], c);
      break;
    case ClusterOrder::kInterleaved: {
      auto left = sizes;
      bool any = true;
      while (any) {
        any = false;
        for (std::size_t c = 0; c < left.size(); ++c) {
          if (left[c] == 0) continue;
          --left[c];
          labels.push_back(static_cast<std::int64_t>(c));
          any = true;
        }
      }
      break;
    }
  }
  if (order == ClusterOrder::kShuffled) {
    SplitMix64 rng(derive_seed(seed, StreamTag::kGenerator));
    for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[uniform_below(rng, i)]);
  }
  std::vector<Item> items;
  items.reserve(labels.size());
  for (auto l : labels) items.emplace_back(Labeled{l});
  return Dataset(std::move(items), SimilarityOracle::label_with_flips(), std::move(labels));
}

Dataset gen_perturbed(const Dataset& base, const std::vector<NodePair>& flips) {
  const auto& lf = label_oracle(base);
  std::vector<NodePair> all(lf.flips.pairs().begin(), lf.flips.pairs().end());
  all.insert(all.end(), flips.begin(), flips.end());
  return with_flips(base, std::move(all));
}

Dataset gen_perturbed(const Dataset& base, std::size_t count, std::uint64_t seed) {
  const auto& lf = label_oracle(base);
  const std::size_t m = base.size();
  const std::uint64_t capacity = m < 2 ? 0 : static_cast<std::uint64_t>(m) * (m - 1) / 2;
  if (lf.flips.size() + count > capacity) throw ConfigError("more flips requested than node pairs");
  std::unordered_set<std::uint64_t> used;
  for (const auto& [a, b] : lf.flips.pairs()) used.insert(pair_key(a, b));
  std::vector<NodePair> added;
  SplitMix64 rng(derive_seed(seed, StreamTag::kGenerator, 1));
  while (added.size() < count) {
    const auto pr = random_pair(rng, m);
    if (used.insert(pair_key(pr.first, pr.second)).second) added.push_back(pr);
  }
  return gen_perturbed(base, added);
}

Dataset gen_target_eta(const Dataset& base, double p, double target_eta, std::uint64_t seed,
                       std::size_t* flips_added) {
  const auto& lf = label_oracle(base);
  if (!(p >= 1.0)) throw ConfigError("p must be at least 1");
  if (!(target_eta >= 0.0)) throw ConfigError("target eta must be non-negative");
  const std::size_t m = base.size();
  const auto labels = base.labels();

  // |B^σ ∪ B^τ| and |B^σ ∩ B^τ| per node, kept up to date as flips are added.
  std::unordered_map<std::int64_t, std::uint64_t> freq;
  for (auto l : labels) ++freq[l];
  std::vector<std::uint64_t> uni(m), inter(m);
  for (std::size_t i = 0; i < m; ++i) uni[i] = inter[i] = freq[labels[i]];
  std::unordered_set<std::uint64_t> used;
  auto apply = [&](NodeIndex a, NodeIndex b) {
    if (labels[a - 1] == labels[b - 1]) {
      --inter[a - 1];
      --inter[b - 1];
    } else {
      ++uni[a - 1];
      ++uni[b - 1];
    }
  };
  for (const auto& [a, b] : lf.flips.pairs()) {
    used.insert(pair_key(a, b));
    apply(a, b);
  }
  auto term = [&](std::size_t i) {
    return std::pow(static_cast<double>(uni[i]), p - 1) - std::pow(static_cast<double>(inter[i]), p - 1);
  };
  double mismatch = 0;
  for (std::size_t i = 0; i < m; ++i) mismatch += term(i);
  const double fp = frequency_moment(base, p);

  const std::uint64_t capacity = m < 2 ? 0 : static_cast<std::uint64_t>(m) * (m - 1) / 2;
  std::vector<NodePair> added;
  SplitMix64 rng(derive_seed(seed, StreamTag::kGenerator, 2));
  while (mismatch / fp < target_eta) {
    if (used.size() >= capacity) throw ConfigError("target eta is not reachable by flipping pairs");
    const auto [a, b] = random_pair(rng, m);
    if (!used.insert(pair_key(a, b)).second) continue;
    mismatch -= term(a - 1) + term(b - 1);
    apply(a, b);
    mismatch += term(a - 1) + term(b - 1);
    added.emplace_back(a, b);
  }
  if (flips_added != nullptr) *flips_added = added.size();
  return gen_perturbed(base, added);
}

bool DisjInstance::holds(std::size_t player, std::size_t element) const {
  const auto& set = sets.at(player);
  return std::binary_search(set.begin(), set.end(), element);
}

DisjInstance gen_disj(std::size_t n, std::size_t k, DisjKind kind, std::uint64_t seed) {
  if (k == 0) throw ConfigError("DISJ needs at least one player");
  if (kind == DisjKind::kYes && n == 0) throw ConfigError("a YES instance needs n >= 1");
  DisjInstance inst;
  inst.n = n;
  inst.k = k;
  inst.kind = kind;
  inst.sets.assign(k, {});
  SplitMix64 rng(derive_seed(seed, StreamTag::kGenerator, 3));
  if (kind == DisjKind::kYes) inst.i_star = uniform_below(rng, n) + 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (inst.i_star == i) {
      for (auto& set : inst.sets) set.push_back(i);
    } else {
      inst.sets[uniform_below(rng, k)].push_back(i);
    }
  }
  return inst;
}

Construction parse_construction(const std::string& name) {
  if (name == "sym-diff") return Construction::kSymDiff;
  if (name == "compact") return Construction::kCompact;
  throw ConfigError("unknown construction '" + name + "' (expected sym-diff or compact)");
}

std::string to_string(Construction construction) {
  return construction == Construction::kSymDiff ? "sym-diff" : "compact";
}

ResolvedReduction resolve_reduction(const ReductionParams& params) {
  if (params.p < 2) throw ConfigError("reductions need p >= 2");
  if (!(params.epsilon > 0.0 && params.epsilon < 1.0 / 3.0)) {
    throw ConfigError("reductions need epsilon in (0, 1/3)");
  }
  if (params.k == 0) throw ConfigError("k must be at least 1");
  ResolvedReduction r;
  r.p = params.p;
  r.epsilon = params.epsilon;
  r.k = params.k;
  r.construction = params.construction;
  if (params.t_override) {
    r.t = *params.t_override;
    if (r.t == 0 || r.t % r.k != 0) throw ConfigError("t must be a positive multiple of k");
  } else {
    if (params.m == 0) throw ConfigError("m must be positive");
    const double raw = std::ceil(std::pow(10.0 * params.epsilon * static_cast<double>(params.m),
                                          1.0 / params.p));
    const auto blocks = std::max<long long>(1, std::llround(raw / static_cast<double>(r.k)));
    r.t = static_cast<std::size_t>(blocks) * r.k;
  }
  r.n = params.n_override ? *params.n_override : params.m / r.t;
  if (r.n == 0) throw ConfigError("m is smaller than t; no element fits");
  r.per_player = r.t / r.k;
  const double tt = static_cast<double>(r.t);
  const double kk = static_cast<double>(r.k);
  auto s = static_cast<std::size_t>(std::ceil(3.0 * tt * tt * std::log(tt) / (kk * kk)));
  s = std::max(s, r.per_player);
  r.s = (s + r.per_player - 1) / r.per_player * r.per_player;
  r.items = r.n * r.t;
  return r;
}

ReductionOutput reduce_disj_to_dataset(const DisjInstance& inst, const ReductionParams& params,
                                       std::uint64_t seed) {
  const auto r = resolve_reduction(params);
  if (inst.k != r.k || inst.n != r.n) {
    throw ConfigError("DISJ instance has n=" + std::to_string(inst.n) + ", k=" +
                      std::to_string(inst.k) + " but the reduction expects n=" +
                      std::to_string(r.n) + ", k=" + std::to_string(r.k));
  }
  const auto k = static_cast<std::int64_t>(r.k);
  const auto n = static_cast<std::int64_t>(r.n);

  std::vector<SplitMix64> player_rng;
  for (std::size_t kap = 0; kap < r.k; ++kap) {
    player_rng.emplace_back(derive_seed(seed, StreamTag::kGenerator, 100 + kap));
  }
  std::vector<std::int64_t> y;
  if (r.construction == Construction::kCompact) {
    if (params.forced_y) {
      y = *params.forced_y;
      if (y.size() != r.k) throw ConfigError("forced Y needs one value per player");
      for (auto v : y) {
        if (v < 1 || v > n) throw ConfigError("forced Y values must lie in 1..n");
      }
    } else {
      for (auto& rng : player_rng) y.push_back(static_cast<std::int64_t>(uniform_below(rng, r.n)) + 1);
    }
  }

  std::vector<Item> items;
  std::vector<std::int64_t> labels;
  std::vector<ItemTag> tags;
  std::vector<std::size_t> site_of;
  items.reserve(r.items);
  const std::size_t z = r.s / r.per_player;  // ground elements per SYM-DIFF item
  std::vector<std::int64_t> perm(r.s);
  for (std::size_t i = 1; i <= r.n; ++i) {
    for (std::size_t kap = 0; kap < r.k; ++kap) {
      const bool member = inst.holds(kap, i);
      const std::int64_t b = member ? k + 1 : static_cast<std::int64_t>(kap) + 1;
      if (r.construction == Construction::kSymDiff) {
        std::iota(perm.begin(), perm.end(), 1);
        if (member) {
          auto& rng = player_rng[kap];
          for (std::size_t q = perm.size(); q > 1; --q) std::swap(perm[q - 1], perm[uniform_below(rng, q)]);
        }
      }
      for (std::size_t j = 1; j <= r.per_player; ++j) {
        if (r.construction == Construction::kSymDiff) {
          std::vector<std::int64_t> block;
          block.reserve(z);
          for (std::size_t q = (j - 1) * z; q < j * z; ++q) {
            block.push_back(pack_triple(static_cast<std::int64_t>(i), b, perm[q]));
          }
          items.emplace_back(IntSet(std::move(block)));
        } else {
          items.emplace_back(Triple(static_cast<std::int64_t>(i), b,
                                    static_cast<std::int64_t>(j) * n + y[kap]));
        }
        const bool in_clique = inst.i_star == i;
        labels.push_back(in_clique ? static_cast<std::int64_t>(i)
                                   : n + static_cast<std::int64_t>(items.size()));
        tags.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(kap),
                        static_cast<std::int64_t>(j)});
        site_of.push_back(kap);
      }
    }
  }
  auto oracle = r.construction == Construction::kSymDiff ? SimilarityOracle::set_intersection(1)
                                                         : SimilarityOracle::tuple_rule(n);
  return ReductionOutput{Dataset(std::move(items), std::move(oracle), std::move(labels), std::move(tags)),
                         SitePartition(r.k, std::move(site_of)), r, std::move(y)};
}

bool Property1Report::all() const {
  return std::all_of(violations.begin(), violations.end(), [](auto v) { return v == 0; });
}

Property1Report verify_property1(const Dataset& ds, const DisjInstance& inst) {
  if (!ds.has_tags()) throw ConfigError("verify_property1 needs per-item tags");
  const auto tags = ds.tags();
  const auto items = ds.items();
  const auto& oracle = ds.oracle();
  Property1Report report;
  constexpr std::size_t kMaxExamples = 20;
  for (std::size_t u = 0; u < items.size(); ++u) {
    const auto& tu = tags[u];
    for (std::size_t v = u + 1; v < items.size(); ++v) {
      const auto& tv = tags[v];
      int clause;
      bool want_similar = false;
      if (tu.element != tv.element) {
        clause = 4;
      } else if (tu.player == tv.player) {
        clause = 1;
      } else if (inst.holds(tu.player, tu.element) && inst.holds(tv.player, tv.element)) {
        clause = 2;
        want_similar = true;
      } else {
        clause = 3;
      }
      ++report.pairs_checked[clause - 1];
      if (oracle.similar(u + 1, items[u], v + 1, items[v]) != want_similar) {
        ++report.violations[clause - 1];
        if (report.examples.size() < kMaxExamples) report.examples.push_back({{u + 1, v + 1}, clause});
      }
    }
  }
  return report;
}

AdversaryOutput gen_kpartite_adversary(std::size_t m, std::size_t clique_size, std::size_t k,
                                       std::uint64_t seed) {
  if (k == 0) throw ConfigError("k must be at least 1");
  const std::size_t c = (clique_size + k - 1) / k * k;
  if (c > m) throw ConfigError("clique of " + std::to_string(c) + " does not fit in m=" + std::to_string(m));
  SplitMix64 rng(derive_seed(seed, StreamTag::kGenerator, 4));
  std::vector<NodeIndex> order(m);
  std::iota(order.begin(), order.end(), 1);
  for (std::size_t q = 0; q < c; ++q) std::swap(order[q], order[q + uniform_below(rng, m - q)]);
  std::vector<NodeIndex> clique(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(c));
  std::sort(clique.begin(), clique.end());

  std::vector<bool> in_clique(m + 1, false);
  for (auto i : clique) in_clique[i] = true;
  std::vector<std::size_t> site_of(m);
  std::vector<std::int64_t> labels(m);
  std::size_t rest = 0;
  for (NodeIndex i = 1; i <= m; ++i) {
    if (!in_clique[i]) {
      site_of[i - 1] = rest++ % k;
      labels[i - 1] = static_cast<std::int64_t>(i);
    }
  }
  for (std::size_t r = 0; r < c; ++r) {
    site_of[clique[r] - 1] = r % k;
    labels[clique[r] - 1] = 0;
  }
  std::vector<NodePair> flips;
  for (std::size_t a = 0; a < c; ++a) {
    for (std::size_t b = a + 1; b < c; ++b) {
      if (a % k == b % k) flips.emplace_back(clique[a], clique[b]);
    }
  }
  std::vector<Item> items;
  items.reserve(m);
  for (auto l : labels) items.emplace_back(Labeled{l});
  Dataset ds(std::move(items), SimilarityOracle::label_with_flips(FlipSet(std::move(flips))),
             std::move(labels));
  return AdversaryOutput{std::move(ds), SitePartition(k, std::move(site_of)), c, std::move(clique)};
}

}  // namespace noisyfp
