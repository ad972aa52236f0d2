#include "noisyfp/exact.hpp"

#include <bit>
#include <cmath>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "noisyfp/error.hpp"

namespace noisyfp {

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw ConfigError("exact integer arithmetic overflowed 64 bits");
  }
  return out;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) {
    throw ConfigError("exact integer arithmetic overflowed 64 bits");
  }
  return out;
}

std::uint64_t ipow(std::uint64_t base, unsigned exp) {
  std::uint64_t out = 1;
  for (unsigned e = 0; e < exp; ++e) out = checked_mul(out, base);
  return out;
}

// Dense symmetric adjacency with self loops, one bitset row per node. This
// is the cached-adjacency mode reserved for the exact oracles.
class BitMatrix {
 public:
  explicit BitMatrix(std::size_t m) : m_(m), words_((m + 63) / 64), bits_(m * words_, 0) {}

  void set(std::size_t i, std::size_t j) {
    bits_[i * words_ + j / 64] |= std::uint64_t{1} << (j % 64);
  }
  const std::uint64_t* row(std::size_t i) const { return bits_.data() + i * words_; }
  std::size_t words() const { return words_; }
  std::size_t size() const { return m_; }

 private:
  std::size_t m_;
  std::size_t words_;
  std::vector<std::uint64_t> bits_;
};

enum class Graph { kObserved, kGroundTruth, kBoth };

BitMatrix build_adjacency(const Dataset& ds, Graph graph) {
  const auto m = ds.size();
  BitMatrix adj(m);
  for (std::size_t i = 0; i < m; ++i) {
    adj.set(i, i);
    for (std::size_t j = i + 1; j < m; ++j) {
      bool edge = false;
      switch (graph) {
        case Graph::kObserved:
          edge = ds.similar(i + 1, j + 1);
          break;
        case Graph::kGroundTruth:
          edge = ds.label(i + 1) == ds.label(j + 1);
          break;
        case Graph::kBoth:
          edge = ds.label(i + 1) == ds.label(j + 1) && ds.similar(i + 1, j + 1);
          break;
      }
      if (edge) {
        adj.set(i, j);
        adj.set(j, i);
      }
    }
  }
  return adj;
}

// Counts tuples (v_depth..v_p) extending a partial clique whose common
// neighbourhood is `candidates`.
std::uint64_t count_extensions(const BitMatrix& adj, const std::vector<std::uint64_t>& candidates,
                               unsigned remaining) {
  std::uint64_t total = 0;
  if (remaining == 1) {
    for (auto w : candidates) total += static_cast<std::uint64_t>(std::popcount(w));
    return total;
  }
  std::vector<std::uint64_t> next(candidates.size());
  for (std::size_t w = 0; w < candidates.size(); ++w) {
    auto bits = candidates[w];
    while (bits != 0) {
      const auto v = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
      bits &= bits - 1;
      const auto* row = adj.row(v);
      bool any = false;
      for (std::size_t k = 0; k < next.size(); ++k) {
        next[k] = candidates[k] & row[k];
        any = any || next[k] != 0;
      }
      if (any) total = checked_add(total, count_extensions(adj, next, remaining - 1));
    }
  }
  return total;
}

std::uint64_t count_cliques(const BitMatrix& adj, unsigned p) {
  std::vector<std::uint64_t> all(adj.words(), ~std::uint64_t{0});
  if (adj.size() % 64 != 0 && !all.empty()) {
    all.back() = (std::uint64_t{1} << (adj.size() % 64)) - 1;
  }
  if (adj.size() == 0) return 0;
  return count_extensions(adj, all, p);
}

void check_budget(std::size_t m, unsigned p, std::uint64_t budget) {
  if (p == 0) throw ConfigError("p must be a positive integer");
  long double work = 1;
  for (unsigned e = 0; e < p; ++e) work *= static_cast<long double>(m);
  if (work > static_cast<long double>(budget)) {
    throw BudgetExceeded("clique enumeration needs m^p = " + std::to_string(m) + "^" +
                         std::to_string(p) + " > budget " + std::to_string(budget));
  }
}

std::map<std::int64_t, std::uint64_t> label_frequencies(const Dataset& ds) {
  std::map<std::int64_t, std::uint64_t> freq;
  for (auto label : ds.labels()) ++freq[label];
  return freq;
}

struct NodeOverlap {
  std::vector<std::uint64_t> union_size;
  std::vector<std::uint64_t> intersection_size;
};

NodeOverlap neighborhood_overlaps(const Dataset& ds) {
  const auto m = ds.size();
  const auto labels = ds.labels();
  NodeOverlap out{std::vector<std::uint64_t>(m, 1), std::vector<std::uint64_t>(m, 1)};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const bool s = ds.similar(i + 1, j + 1);
      const bool t = labels[i] == labels[j];
      if (s || t) {
        ++out.union_size[i];
        ++out.union_size[j];
      }
      if (s && t) {
        ++out.intersection_size[i];
        ++out.intersection_size[j];
      }
    }
  }
  return out;
}

std::vector<std::uint64_t> degrees(const Dataset& ds, Relation relation) {
  const auto m = ds.size();
  std::vector<std::uint64_t> d(m, 1);
  if (relation == Relation::kGroundTruth) {
    const auto freq = label_frequencies(ds);
    for (std::size_t i = 0; i < m; ++i) d[i] = freq.at(ds.labels()[i]);
    return d;
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (ds.similar(i + 1, j + 1)) {
        ++d[i];
        ++d[j];
      }
    }
  }
  return d;
}

void check_real_p(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw ConfigError("p must be a real number >= 1");
}

}  // namespace

bool is_integral(double p) { return p >= 1.0 && p <= 64.0 && std::floor(p) == p; }

std::uint64_t brute_force_budget() {
  if (const char* env = std::getenv("NOISYFP_BRUTE_FORCE_BUDGET")) {
    char* end = nullptr;
    const auto value = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) return value;
    throw ConfigError(std::string("NOISYFP_BRUTE_FORCE_BUDGET is not a positive integer: ") + env);
  }
  return 1'000'000'000ULL;
}

std::uint64_t exact_fp(const Dataset& ds, unsigned p) {
  if (p == 0) throw ConfigError("p must be a positive integer");
  std::uint64_t total = 0;
  for (const auto& [label, f] : label_frequencies(ds)) total = checked_add(total, ipow(f, p));
  return total;
}

double frequency_moment(const Dataset& ds, double p) {
  check_real_p(p);
  double total = 0;
  for (const auto& [label, f] : label_frequencies(ds)) {
    total += std::pow(static_cast<double>(f), p);
  }
  return total;
}

std::uint64_t count_ordered_p_cliques(const Dataset& ds, unsigned p, Relation relation,
                                      std::uint64_t budget) {
  check_budget(ds.size(), p, budget);
  const auto graph = relation == Relation::kObserved ? Graph::kObserved : Graph::kGroundTruth;
  return count_cliques(build_adjacency(ds, graph), p);
}

CliqueDifferences clique_set_differences(const Dataset& ds, unsigned p, std::uint64_t budget) {
  if (!ds.has_ground_truth()) throw MissingGroundTruth();
  check_budget(ds.size(), p, budget);
  const auto sigma = count_cliques(build_adjacency(ds, Graph::kObserved), p);
  const auto tau = count_cliques(build_adjacency(ds, Graph::kGroundTruth), p);
  const auto both = count_cliques(build_adjacency(ds, Graph::kBoth), p);
  return {sigma - both, tau - both};
}

std::uint64_t mismatch_sum(const Dataset& ds, unsigned p) {
  if (p == 0) throw ConfigError("p must be a positive integer");
  const auto overlap = neighborhood_overlaps(ds);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    total = checked_add(total, ipow(overlap.union_size[i], p - 1) -
                                   ipow(overlap.intersection_size[i], p - 1));
  }
  return total;
}

double eta_p(const Dataset& ds, double p) {
  check_real_p(p);
  if (!ds.has_ground_truth()) throw MissingGroundTruth();
  if (ds.size() == 0) return 0.0;
  if (is_integral(p)) {
    const auto up = static_cast<unsigned>(p);
    return static_cast<double>(mismatch_sum(ds, up)) / static_cast<double>(exact_fp(ds, up));
  }
  const auto overlap = neighborhood_overlaps(ds);
  double total = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    total += std::pow(static_cast<double>(overlap.union_size[i]), p - 1) -
             std::pow(static_cast<double>(overlap.intersection_size[i]), p - 1);
  }
  return total / frequency_moment(ds, p);
}

std::uint64_t degree_moment_exact(const Dataset& ds, unsigned p, Relation relation) {
  if (p == 0) throw ConfigError("p must be a positive integer");
  std::uint64_t total = 0;
  for (auto d : degrees(ds, relation)) total = checked_add(total, ipow(d, p - 1));
  return total;
}

double degree_moment(const Dataset& ds, double p, Relation relation) {
  check_real_p(p);
  if (is_integral(p)) {
    return static_cast<double>(degree_moment_exact(ds, static_cast<unsigned>(p), relation));
  }
  double total = 0;
  for (auto d : degrees(ds, relation)) total += std::pow(static_cast<double>(d), p - 1);
  return total;
}

ExactReport exact_report(const Dataset& ds, double p, bool skip_cliques, std::uint64_t budget) {
  check_real_p(p);
  ExactReport report;
  report.p = p;
  report.m = ds.size();
  const bool integral = is_integral(p);
  report.degree_moment_sigma = degree_moment(ds, p, Relation::kObserved);
  if (ds.has_ground_truth()) {
    report.f_p = integral ? static_cast<double>(exact_fp(ds, static_cast<unsigned>(p)))
                          : frequency_moment(ds, p);
    report.eta_p = eta_p(ds, p);
    report.degree_moment_tau = degree_moment(ds, p, Relation::kGroundTruth);
  }
  if (integral && !skip_cliques) {
    const auto up = static_cast<unsigned>(p);
    report.k_p_sigma = count_ordered_p_cliques(ds, up, Relation::kObserved, budget);
    if (ds.has_ground_truth()) {
      report.k_p_tau = count_ordered_p_cliques(ds, up, Relation::kGroundTruth, budget);
      const auto diff = clique_set_differences(ds, up, budget);
      report.diff_sigma_minus_tau = diff.observed_only;
      report.diff_tau_minus_sigma = diff.ground_truth_only;
    }
  }
  return report;
}

}  // namespace noisyfp
