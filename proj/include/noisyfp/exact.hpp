#pragma once

#include <cstdint>
#include <optional>

#include "noisyfp/dataset.hpp"

namespace noisyfp {

/// Limit on m^p for clique enumeration. Default 10^9; overridden by the
/// NOISYFP_BRUTE_FORCE_BUDGET environment variable.
std::uint64_t brute_force_budget();

/// F_p of the ground truth: sum over labels of (frequency)^p. Exact integer
/// arithmetic; throws ConfigError on 64-bit overflow.
std::uint64_t exact_fp(const Dataset& ds, unsigned p);

/// F_p for real p >= 1 (double precision).
double frequency_moment(const Dataset& ds, double p);

/// |K_p| under the chosen relation: tuples in [m]^p whose entries are
/// pairwise similar (repeats allowed). Throws BudgetExceeded when m^p > budget.
std::uint64_t count_ordered_p_cliques(const Dataset& ds, unsigned p,
                                      Relation relation = Relation::kObserved,
                                      std::uint64_t budget = brute_force_budget());

struct CliqueDifferences {
  std::uint64_t observed_only = 0;      // |K_p^σ \ K_p^τ|
  std::uint64_t ground_truth_only = 0;  // |K_p^τ \ K_p^σ|
  friend bool operator==(const CliqueDifferences&, const CliqueDifferences&) = default;
};

CliqueDifferences clique_set_differences(const Dataset& ds, unsigned p,
                                         std::uint64_t budget = brute_force_budget());

/// sum_i (|B_i^σ ∪ B_i^τ|^{p-1} - |B_i^σ ∩ B_i^τ|^{p-1}), exact for integral p.
std::uint64_t mismatch_sum(const Dataset& ds, unsigned p);

/// Mismatch ambiguity: mismatch_sum / F_p(τ). Real p >= 1.
double eta_p(const Dataset& ds, double p);

/// sum_i d_i^{p-1} under the chosen relation, exact for integral p.
std::uint64_t degree_moment_exact(const Dataset& ds, unsigned p,
                                  Relation relation = Relation::kObserved);
double degree_moment(const Dataset& ds, double p,
                     Relation relation = Relation::kObserved);

struct ExactReport {
  double p = 0;
  std::size_t m = 0;
  std::optional<double> f_p;
  std::optional<std::uint64_t> k_p_sigma;
  std::optional<std::uint64_t> k_p_tau;
  std::optional<std::uint64_t> diff_sigma_minus_tau;
  std::optional<std::uint64_t> diff_tau_minus_sigma;
  std::optional<double> eta_p;
  double degree_moment_sigma = 0;
  std::optional<double> degree_moment_tau;
};

/// Everything the oracles can say about a dataset. Ground-truth fields are
/// empty without labels; clique fields are empty for non-integral p or when
/// `skip_cliques` is set. Budget overruns propagate as BudgetExceeded.
ExactReport exact_report(const Dataset& ds, double p, bool skip_cliques = false,
                         std::uint64_t budget = brute_force_budget());

/// True when p is a positive integer small enough for the exact paths.
bool is_integral(double p);

}  // namespace noisyfp
