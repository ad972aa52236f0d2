#include "noisyfp/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "noisyfp/error.hpp"
#include "noisyfp/exact.hpp"

namespace noisyfp {

Protocol parse_protocol(const std::string& name) {
  if (name == "alg3") return Protocol::kAlg3;
  if (name == "alg4") return Protocol::kAlg4;
  if (name == "naive") return Protocol::kNaive;
  throw ConfigError("unknown protocol '" + name + "' (expected alg3, alg4 or naive)");
}

std::string to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::kAlg3:
      return "alg3";
    case Protocol::kAlg4:
      return "alg4";
    case Protocol::kNaive:
      return "naive";
  }
  return "?";
}

namespace {

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
}

std::size_t checked_ceil(double x, const char* what) {
  if (!(x < 0x1.0p62)) throw ConfigError(std::string(what) + " overflows; adjust the constants");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(x)));
}

// d^{p-1}. Integral p stays in exact integers so sampling weights are exact.
std::uint64_t int_power(std::uint64_t d, unsigned e) {
  std::uint64_t out = 1;
  for (unsigned i = 0; i < e; ++i) {
    if (__builtin_mul_overflow(out, d, &out)) throw ConfigError("degree power overflows 64 bits");
  }
  return out;
}

double real_power(std::uint64_t d, double p) {
  return is_integral(p) ? static_cast<double>(int_power(d, static_cast<unsigned>(p) - 1))
                        : std::pow(static_cast<double>(d), p - 1.0);
}

// Cumulative weights with inversion sampling; integer weights are sampled
// exactly, real weights through a uniform double.
class WeightedIndex {
 public:
  explicit WeightedIndex(bool exact) : exact_(exact) {}

  void add(std::uint64_t w_int, double w_real) {
    if (exact_) {
      if (__builtin_add_overflow(total_int_, w_int, &total_int_)) {
        throw ConfigError("weight total overflows 64 bits");
      }
      cum_int_.push_back(total_int_);
    } else {
      total_real_ += w_real;
      cum_real_.push_back(total_real_);
    }
  }

  bool empty_mass() const { return exact_ ? total_int_ == 0 : !(total_real_ > 0); }

  std::size_t draw(SplitMix64& rng) const {
    if (exact_) {
      const auto u = uniform_below(rng, total_int_);
      return static_cast<std::size_t>(std::upper_bound(cum_int_.begin(), cum_int_.end(), u) -
                                      cum_int_.begin());
    }
    const double u = uniform_unit(rng) * total_real_;
    auto pos = static_cast<std::size_t>(std::upper_bound(cum_real_.begin(), cum_real_.end(), u) -
                                        cum_real_.begin());
    return std::min(pos, cum_real_.size() - 1);
  }

 private:
  bool exact_;
  std::uint64_t total_int_ = 0;
  double total_real_ = 0;
  std::vector<std::uint64_t> cum_int_;
  std::vector<double> cum_real_;
};

// D_local^(κ) of one site, sent as a count for integral p and a real
// otherwise.
Payload local_moment_payload(const Site& site, double p) {
  Payload out;
  if (is_integral(p)) {
    std::uint64_t sum = 0;
    for (auto d : site.local_degrees()) {
      if (__builtin_add_overflow(sum, int_power(d, static_cast<unsigned>(p) - 1), &sum)) {
        throw ConfigError("local degree moment overflows 64 bits");
      }
    }
    out.counts.push_back(sum);
  } else {
    double sum = 0;
    for (auto d : site.local_degrees()) sum += real_power(d, p);
    out.reals.push_back(sum);
  }
  return out;
}

double payload_scalar(const Payload& payload) {
  return payload.counts.empty() ? payload.reals.at(0) : static_cast<double>(payload.counts.at(0));
}

// Round in which the coordinator broadcasts the distinct sampled nodes and
// every site answers with its local degree of each. Returns per-site
// replies indexed [site][position in `nodes`].
std::vector<std::vector<std::uint64_t>> degree_round(CoordinatorSim& sim,
                                                     const std::vector<NodeIndex>& nodes,
                                                     const std::vector<Item>& items) {
  sim.begin_round();
  std::vector<std::vector<std::uint64_t>> replies(sim.k());
  for (std::size_t s = 0; s < sim.k(); ++s) {
    Payload query;
    query.nodes = nodes;
    query.items = items;
    const auto received = sim.send(kCoordinator, static_cast<int>(s), std::move(query));
    Payload reply;
    reply.counts.reserve(received.nodes.size());
    for (std::size_t q = 0; q < received.nodes.size(); ++q) {
      reply.counts.push_back(sim.site(s).degree_of(received.nodes[q], received.items[q]));
    }
    replies[s] = sim.send(static_cast<int>(s), kCoordinator, std::move(reply)).counts;
  }
  return replies;
}

}  // namespace

std::size_t alg3_t(std::size_t m, double p, double epsilon, double scale_c) {
  if (!(p >= 1.0)) throw ConfigError("p must be at least 1");
  check_epsilon(epsilon);
  if (!(scale_c > 0.0)) throw ConfigError("scale_c must be positive");
  return checked_ceil(scale_c * std::pow(static_cast<double>(m), 1.0 - 1.0 / p) /
                          (epsilon * epsilon),
                      "t");
}

std::size_t alg4_t(std::size_t k, double p, double epsilon) {
  check_epsilon(epsilon);
  return checked_ceil(36.0 * std::pow(4.0, p) * std::pow(static_cast<double>(k), p - 1.0) /
                          std::pow(epsilon, p + 1.0),
                      "t");
}

double alg4_theta(std::size_t k, double p, double epsilon) {
  check_epsilon(epsilon);
  return 2.0 * std::pow(4.0 * static_cast<double>(k) / epsilon, p - 1.0);
}

std::vector<NodeIndex> convert_sample(std::span<const NodeIndex> s_prime, std::size_t m,
                                      std::size_t target, SplitMix64& rng) {
  if (s_prime.size() < target) {
    throw ConfigError("cannot convert " + std::to_string(s_prime.size()) + " sampled nodes into " +
                      std::to_string(target) + " draws");
  }
  if (m == 0 && target > 0) throw ConfigError("m must be positive");
  std::vector<NodeIndex> pool(s_prime.begin(), s_prime.end());
  std::size_t used = 0;  // pool[0..used) holds the elements handed out so far
  std::unordered_map<std::uint64_t, NodeIndex> assigned;
  std::vector<NodeIndex> out;
  out.reserve(target);
  for (std::size_t q = 0; q < target; ++q) {
    const auto j = uniform_below(rng, m);
    auto [it, fresh] = assigned.try_emplace(j, 0);
    if (fresh) {
      const auto pick = used + uniform_below(rng, pool.size() - used);
      std::swap(pool[used], pool[pick]);
      it->second = pool[used++];
    }
    out.push_back(it->second);
  }
  return out;
}

EstimateReport alg3_general(const Dataset& ds, const SitePartition& partition,
                            const DistParams& params, std::uint64_t seed) {
  const std::size_t m = ds.size();
  if (m == 0) throw ConfigError("dataset is empty");
  if (params.ell == 0) throw ConfigError("ell must be positive");
  const std::size_t t = params.t_override ? *params.t_override
                                          : alg3_t(m, params.p, params.epsilon, params.scale_c);
  if (t == 0) throw ConfigError("t must be positive");
  if (!(params.p >= 1.0)) throw ConfigError("p must be at least 1");
  check_epsilon(params.epsilon);
  const std::size_t target = t * params.ell;
  if (target / params.ell != t) throw ConfigError("t * ell overflows");

  CoordinatorSim sim(ds, partition, seed);
  EstimateReport report;
  report.protocol = Protocol::kAlg3;
  report.t = t;
  report.ell = params.ell;
  report.seed = seed;

  // Round 1: broadcast m, collect Bernoulli samples.
  sim.begin_round();
  std::vector<NodeIndex> s_prime;
  std::unordered_map<NodeIndex, Item> items;
  for (std::size_t s = 0; s < sim.k(); ++s) {
    Payload announce;
    announce.counts.push_back(m);
    const auto got = sim.send(kCoordinator, static_cast<int>(s), std::move(announce));
    const double prob = std::min(
        1.0, 2.0 * static_cast<double>(target) / static_cast<double>(got.counts.at(0)));
    auto& site = sim.site(s);
    Payload sample;
    for (auto i : site.nodes()) {
      if (prob >= 1.0 || uniform_unit(site.rng()) < prob) {
        sample.nodes.push_back(i);
        sample.items.push_back(site.item(i));
      }
    }
    const auto delivered = sim.send(static_cast<int>(s), kCoordinator, std::move(sample));
    for (std::size_t x = 0; x < delivered.nodes.size(); ++x) {
      s_prime.push_back(delivered.nodes[x]);
      items.emplace(delivered.nodes[x], delivered.items[x]);
    }
  }
  std::sort(s_prime.begin(), s_prime.end());
  report.sample_size = s_prime.size();
  if (s_prime.size() < target) {
    report.failed = true;
    report.log = sim.take_log();
    return report;
  }

  // Round 2: global degrees of the converted sample.
  const auto sample = convert_sample(s_prime, m, target, sim.coordinator_rng());
  std::vector<NodeIndex> distinct = sample;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<Item> distinct_items;
  distinct_items.reserve(distinct.size());
  for (auto i : distinct) distinct_items.push_back(items.at(i));
  const auto replies = degree_round(sim, distinct, distinct_items);

  std::vector<double> weight(distinct.size());
  for (std::size_t x = 0; x < distinct.size(); ++x) {
    std::uint64_t d = 0;
    for (const auto& r : replies) d += r.at(x);
    weight[x] = real_power(d, params.p);
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < params.ell; ++g) {
    double sum = 0;
    for (std::size_t q = g * t; q < (g + 1) * t; ++q) {
      const auto pos = std::lower_bound(distinct.begin(), distinct.end(), sample[q]) - distinct.begin();
      sum += weight[pos];
    }
    best = std::min(best, static_cast<double>(m) / static_cast<double>(t) * sum);
  }
  report.estimate = best;
  report.distinct_sampled = distinct.size();
  report.log = sim.take_log();
  return report;
}

EstimateReport alg4_low_noise(const Dataset& ds, const SitePartition& partition,
                              const DistParams& params, std::uint64_t seed) {
  if (ds.size() == 0) throw ConfigError("dataset is empty");
  if (!(params.p >= 2.0)) throw ConfigError("Algorithm 4 needs p >= 2");
  check_epsilon(params.epsilon);
  const std::size_t k = partition.k();
  const std::size_t t = params.t_override ? *params.t_override : alg4_t(k, params.p, params.epsilon);
  const double theta = params.theta_override ? *params.theta_override
                                             : alg4_theta(k, params.p, params.epsilon);
  if (t == 0) throw ConfigError("t must be positive");
  const bool exact = is_integral(params.p);

  CoordinatorSim sim(ds, partition, seed);
  EstimateReport report;
  report.protocol = Protocol::kAlg4;
  report.t = t;
  report.theta = theta;
  report.seed = seed;

  // Round 1: local degree moments.
  sim.begin_round();
  std::vector<Payload> moments(k);
  WeightedIndex site_choice(exact);
  double d_local = 0;
  for (std::size_t s = 0; s < k; ++s) {
    moments[s] = sim.send(static_cast<int>(s), kCoordinator, local_moment_payload(sim.site(s), params.p));
    const double v = payload_scalar(moments[s]);
    site_choice.add(moments[s].counts.empty() ? 0 : moments[s].counts[0], v);
    d_local += v;
  }
  if (site_choice.empty_mass()) throw InvariantViolation("D_local is zero on a non-empty dataset");

  // Round 2: site counts out, weighted node samples back.
  sim.begin_round();
  std::vector<std::uint64_t> per_site(k, 0);
  for (std::size_t q = 0; q < t; ++q) ++per_site[site_choice.draw(sim.coordinator_rng())];
  std::vector<NodeIndex> sample;
  std::vector<std::size_t> origin;
  std::unordered_map<NodeIndex, Item> items;
  for (std::size_t s = 0; s < k; ++s) {
    Payload count;
    count.counts.push_back(per_site[s]);
    const auto got = sim.send(kCoordinator, static_cast<int>(s), std::move(count));
    auto& site = sim.site(s);
    const auto want = got.counts.at(0);
    Payload nodes;
    if (want > 0) {
      WeightedIndex node_choice(exact);
      for (auto d : site.local_degrees()) {
        node_choice.add(exact ? int_power(d, static_cast<unsigned>(params.p) - 1) : 0,
                        real_power(d, params.p));
      }
      if (site.nodes().empty() || node_choice.empty_mass()) {
        throw InvariantViolation("site " + std::to_string(s) + " asked for samples without mass");
      }
      for (std::uint64_t q = 0; q < want; ++q) {
        const auto i = site.nodes()[node_choice.draw(site.rng())];
        nodes.nodes.push_back(i);
        nodes.items.push_back(site.item(i));
      }
    }
    const auto delivered = sim.send(static_cast<int>(s), kCoordinator, std::move(nodes));
    for (std::size_t x = 0; x < delivered.nodes.size(); ++x) {
      sample.push_back(delivered.nodes[x]);
      origin.push_back(s);
      items.emplace(delivered.nodes[x], delivered.items[x]);
    }
  }
  report.sample_size = sample.size();

  // Round 3: global degrees of the sampled nodes.
  std::vector<NodeIndex> distinct = sample;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<Item> distinct_items;
  distinct_items.reserve(distinct.size());
  for (auto i : distinct) distinct_items.push_back(items.at(i));
  const auto replies = degree_round(sim, distinct, distinct_items);

  double sum = 0;
  for (std::size_t q = 0; q < sample.size(); ++q) {
    const auto pos = std::lower_bound(distinct.begin(), distinct.end(), sample[q]) - distinct.begin();
    std::uint64_t d = 0;
    for (const auto& r : replies) d += r.at(pos);
    const std::uint64_t d_own = replies.at(origin[q]).at(pos);  // d_local of the sampled node
    const double ratio = real_power(d, params.p) / real_power(d_own, params.p);
    if (ratio <= theta) {
      const double summand = d_local * ratio;
      report.max_summand = std::max(report.max_summand, summand);
      sum += summand;
    }
  }
  report.estimate = sum / static_cast<double>(t);
  report.distinct_sampled = distinct.size();
  report.log = sim.take_log();
  return report;
}

EstimateReport naive_local_baseline(const Dataset& ds, const SitePartition& partition, double p) {
  if (!(p >= 1.0)) throw ConfigError("p must be at least 1");
  CoordinatorSim sim(ds, partition, 0);
  EstimateReport report;
  report.protocol = Protocol::kNaive;
  sim.begin_round();
  double total = 0;
  for (std::size_t s = 0; s < sim.k(); ++s) {
    total += payload_scalar(sim.send(static_cast<int>(s), kCoordinator, local_moment_payload(sim.site(s), p)));
  }
  report.estimate = total;
  report.log = sim.take_log();
  return report;
}

double median_boost(std::span<const double> runs) {
  if (runs.empty() || runs.size() % 2 == 0) {
    throw ConfigError("median_boost needs an odd number of runs, got " + std::to_string(runs.size()));
  }
  std::vector<double> v(runs.begin(), runs.end());
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

EstimateReport run_protocol(Protocol protocol, const Dataset& ds, const SitePartition& partition,
                            const DistParams& params, std::uint64_t seed) {
  switch (protocol) {
    case Protocol::kAlg3:
      return alg3_general(ds, partition, params, seed);
    case Protocol::kAlg4:
      return alg4_low_noise(ds, partition, params, seed);
    case Protocol::kNaive:
      return naive_local_baseline(ds, partition, params.p);
  }
  throw ConfigError("unknown protocol");
}

EstimateReport alg3_with_retries(const Dataset& ds, const SitePartition& partition,
                                 const DistParams& params, std::uint64_t seed,
                                 unsigned max_retries, unsigned* retries) {
  unsigned attempt = 0;
  while (true) {
    const auto run_seed = attempt == 0 ? seed : derive_seed(seed, StreamTag::kTrial, attempt);
    auto report = alg3_general(ds, partition, params, run_seed);
    if (!report.failed || attempt == max_retries) {
      if (retries != nullptr) *retries = attempt;
      return report;
    }
    ++attempt;
  }
}

}  // namespace noisyfp
