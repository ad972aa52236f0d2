#include "noisyfp/streaming.hpp"

#include <algorithm>
#include <deque>
#include <cmath>
#include <functional>
#include <limits>

namespace noisyfp {

std::vector<double> run_samplers_naive(DatasetStream& stream, unsigned p, std::size_t count,
                                       std::uint64_t seed) {
  std::vector<CliqueSampler<>> samplers;
  samplers.reserve(count);
  for (std::size_t s = 0; s < count; ++s) samplers.emplace_back(p, SplitMix64(sampler_seed(seed, s)));
  while (auto element = stream.next()) {
    for (auto& sampler : samplers) sampler.step(stream.oracle(), *element->item, element->index);
  }
  std::vector<double> out;
  out.reserve(count);
  for (const auto& sampler : samplers) out.push_back(sampler.finish());
  return out;
}

namespace {

constexpr std::uint32_t kNoNode = std::numeric_limits<std::uint32_t>::max();

struct HeapEntry {
  std::uint64_t next;
  std::uint32_t sampler;
  bool operator>(const HeapEntry& o) const {
    return next != o.next ? next > o.next : sampler > o.sampler;
  }
};

struct NodeRef {
  std::uint32_t id;
  std::uint32_t generation;
};

// A live prefix (i_1..i_depth) shared by every sampler currently holding it.
// `counter` is r_{depth+1}; `heap` holds the samplers' next acceptance
// counts for level depth+1.
struct PrefixNode {
  NodeIndex index = 0;
  std::optional<Item> item;
  unsigned depth = 0;
  std::uint32_t parent = kNoNode;
  std::uint64_t counter = 0;
  std::uint32_t live = 0;
  std::uint32_t generation = 0;
  std::size_t created_at = 0;
  bool alive = false;
  std::vector<HeapEntry> heap;
  std::vector<NodeRef> children;
};

class PooledEngine {
 public:
  PooledEngine(DatasetStream& stream, unsigned p, std::size_t count, std::uint64_t seed,
               bool deferred)
      : stream_(stream),
        deferred_(deferred),
        p_(p),
        m_(stream.length()),
        count_(count),
        stride_(2 * p + 1),
        state_(count * stride_),
        calendar_(stream.length() + 2) {
    for (std::size_t s = 0; s < count; ++s) {
      auto* w = &state_[s * stride_];
      w[0] = sampler_seed(seed, s);
      for (unsigned l = 1; l <= p; ++l) w[l] = 1;
      for (unsigned d = 1; d < p; ++d) w[p + d] = kNoNode;
      w[2 * p] = 0;
    }
    // With p = 1 and deferral the output is m regardless of the stream.
    if (!(deferred_ && p == 1)) {
      for (std::uint32_t s = 0; s < count; ++s) calendar_[1].push_back(s);
    }
  }

  std::vector<double> run(PooledRunStats* stats) {
    while (auto element = stream_.next()) {
      step(element->index, *element->item);
    }
    std::vector<double> out(count_);
    if (stream_.consumed() == 0) throw ConfigError("no estimate exists for an empty stream");
    std::vector<NodeIndex> idx(p_);
    for (std::size_t s = 0; s < count_; ++s) {
      for (unsigned d = 1; d < p_; ++d) idx[d - 1] = nodes_[node_at(s, d)].index;
      if (deferred_) {
        // Only whether i_p equals i_{p-1} matters to mult; any later offer is
        // a strictly larger index, stood in for here by prefix index + pick.
        const NodeIndex prefix = p_ > 1 ? idx[p_ - 2] : 0;
        const std::uint64_t offered = p_ > 1 ? nodes_[node_at(s, p_ - 1)].counter : m_;
        SplitMix64 rng(state_[s * stride_]);
        idx[p_ - 1] = prefix + uniform_below(rng, offered) + (p_ > 1 ? 0 : 1);
      } else {
        idx[p_ - 1] = last_idx(s);
      }
      // Same multiplication order as CliqueSampler::finish.
      double product = static_cast<double>(mult(idx));
      product *= static_cast<double>(m_);
      for (unsigned d = 1; d < p_; ++d) product *= static_cast<double>(nodes_[node_at(s, d)].counter);
      out[s] = product;
    }
    if (stats != nullptr) {
      stats->oracle_calls = oracle_calls_;
      stats->peak_prefix_nodes = peak_nodes_;
    }
    return out;
  }

 private:
  // Sampler s occupies one record of stride_ words:
  // [rng state, next_1..next_p, node_1..node_{p-1}, last index].
  std::uint64_t& next_at(std::size_t s, unsigned level) { return state_[s * stride_ + level]; }
  std::uint64_t& node_at(std::size_t s, unsigned depth) { return state_[s * stride_ + p_ + depth]; }
  std::uint64_t& last_idx(std::size_t s) { return state_[s * stride_ + 2 * p_]; }

  std::uint64_t draw_next(std::size_t s, std::uint64_t count) {
    auto& word = state_[s * stride_];
    SplitMix64 rng(word);
    const auto next = next_acceptance(count, uniform_open_closed(rng));
    word = rng.state();
    return next;
  }

  std::uint32_t allocate(NodeIndex index, const Item& item, unsigned depth, std::uint32_t parent,
                         std::size_t step) {
    std::uint32_t id;
    if (!free_.empty()) {
      id = free_.back();
      free_.pop_back();
    } else {
      id = static_cast<std::uint32_t>(nodes_.size());
      nodes_.emplace_back();
    }
    auto& n = nodes_[id];
    n.index = index;
    n.item = item;
    n.depth = depth;
    n.parent = parent;
    n.counter = 1;  // the creating item is similar to itself
    n.live = 0;
    n.created_at = step;
    n.alive = true;
    n.heap.clear();
    n.children.clear();
    ++live_nodes_;
    peak_nodes_ = std::max(peak_nodes_, live_nodes_);
    return id;
  }

  void release(std::uint32_t id) {
    auto& n = nodes_[id];
    n.alive = false;
    ++n.generation;
    n.item.reset();
    n.heap.clear();
    n.heap.shrink_to_fit();
    n.children.clear();
    n.children.shrink_to_fit();
    free_.push_back(id);
    --live_nodes_;
  }

  bool valid(const NodeRef& ref) const {
    const auto& n = nodes_[ref.id];
    return n.alive && n.generation == ref.generation;
  }

  // Removes sampler s from its prefix nodes at depths >= from_depth.
  void detach(std::size_t s, unsigned from_depth) {
    for (unsigned d = p_ - 1; d >= from_depth && d >= 1; --d) {
      auto& id = node_at(s, d);
      if (id == kNoNode) continue;
      if (--nodes_[id].live == 0) release(static_cast<std::uint32_t>(id));
      id = kNoNode;
    }
  }

  void push(std::uint32_t node_id, std::size_t s, std::uint64_t next, std::size_t step) {
    auto& n = nodes_[node_id];
    // The counter can still grow by at most the number of unread items.
    if (next > n.counter + (m_ - step)) return;
    n.heap.push_back({next, static_cast<std::uint32_t>(s)});
    std::push_heap(n.heap.begin(), n.heap.end(), std::greater<>{});
  }

  // Sampler s just accepted the current item at `level`; it enters new prefix
  // nodes at depths level..p-1 (all ending at index j) and draws the next
  // acceptance count of each re-seeded level.
  void cascade(std::size_t s, unsigned level, std::uint32_t parent, NodeIndex j, const Item& item,
               std::vector<std::uint32_t>& fresh_by_depth) {
    for (unsigned d = level; d < p_; ++d) {
      auto& fresh = fresh_by_depth[d];
      if (fresh == kNoNode) {
        fresh = allocate(j, item, d, parent, j);
        if (parent == kNoNode) {
          roots_.push_back({fresh, nodes_[fresh].generation});
        } else {
          nodes_[parent].children.push_back({fresh, nodes_[fresh].generation});
        }
      }
      node_at(s, d) = fresh;
      ++nodes_[fresh].live;
      if (!(deferred_ && d + 1 == p_)) {
        next_at(s, d + 1) = draw_next(s, 1);
        push(fresh, s, next_at(s, d + 1), j);
      }
      parent = fresh;
    }
    last_idx(s) = j;
  }

  void step(NodeIndex j, const Item& item) {
    // Level 1: the stream-wide reservoir, driven by the calendar.
    std::vector<std::uint32_t> fresh(p_, kNoNode);
    auto due = std::move(calendar_[j]);
    calendar_[j].clear();
    for (auto s : due) {
      detach(s, 1);
      next_at(s, 1) = draw_next(s, j);
      if (next_at(s, 1) <= m_) calendar_[next_at(s, 1)].push_back(s);
      cascade(s, 1, kNoNode, j, item, fresh);
    }
    // Deeper levels: walk prefixes that existed before this item.
    visit(roots_, j, item);
  }

  void visit(std::vector<NodeRef>& list, NodeIndex j, const Item& item) {
    std::size_t keep = 0;
    for (std::size_t pos = 0; pos < list.size(); ++pos) {
      const auto ref = list[pos];
      if (!valid(ref)) continue;
      list[keep++] = ref;
      if (nodes_[ref.id].created_at == j) continue;
      auto& n = nodes_[ref.id];
      ++oracle_calls_;
      if (!stream_.oracle().similar(n.index, *n.item, j, item)) continue;
      process(ref.id, j, item);
    }
    list.resize(keep);
  }

  void process(std::uint32_t id, NodeIndex j, const Item& item) {
    const unsigned depth = nodes_[id].depth;
    const unsigned level = depth + 1;
    const auto counter = ++nodes_[id].counter;
    if (deferred_ && level == p_) return;
    std::vector<std::uint32_t> fresh(p_, kNoNode);
    while (!nodes_[id].heap.empty() && nodes_[id].heap.front().next <= counter) {
      auto& heap = nodes_[id].heap;
      std::pop_heap(heap.begin(), heap.end(), std::greater<>{});
      const auto entry = heap.back();
      heap.pop_back();
      const std::size_t s = entry.sampler;
      if (node_at(s, depth) != id || next_at(s, level) != entry.next) continue;  // stale
      if (level < p_) detach(s, level);
      next_at(s, level) = draw_next(s, counter);
      push(id, s, next_at(s, level), j);
      if (level < p_) {
        cascade(s, level, id, j, item, fresh);
      } else {
        last_idx(s) = j;
      }
    }
    if (level < p_) visit(nodes_[id].children, j, item);
  }

  DatasetStream& stream_;
  bool deferred_;
  unsigned p_;
  std::size_t m_;
  std::size_t count_;
  std::size_t stride_;
  std::vector<std::uint64_t> state_;
  std::vector<std::vector<std::uint32_t>> calendar_;
  std::deque<PrefixNode> nodes_;  // stable addresses while children are visited
  std::vector<std::uint32_t> free_;
  std::vector<NodeRef> roots_;
  std::size_t live_nodes_ = 0;
  std::size_t peak_nodes_ = 0;
  std::uint64_t oracle_calls_ = 0;
};

std::uint64_t factorial(unsigned p) {
  std::uint64_t f = 1;
  for (unsigned i = 2; i <= p; ++i) f *= i;
  return f;
}

}  // namespace

std::vector<double> run_samplers_pooled(DatasetStream& stream, unsigned p, std::size_t count,
                                        std::uint64_t seed, PooledRunStats* stats) {
  if (p == 0) throw ConfigError("p must be a positive integer");
  if (count >= kNoNode) throw ConfigError("too many samplers for the pooled engine");
  if (stream.length() == 0) throw ConfigError("no estimate exists for an empty stream");
  PooledEngine engine(stream, p, count, seed, false);
  return engine.run(stats);
}

std::vector<double> run_samplers_deferred(DatasetStream& stream, unsigned p, std::size_t count,
                                          std::uint64_t seed, PooledRunStats* stats) {
  if (p == 0) throw ConfigError("p must be a positive integer");
  if (count >= kNoNode) throw ConfigError("too many samplers for the pooled engine");
  if (stream.length() == 0) throw ConfigError("no estimate exists for an empty stream");
  PooledEngine engine(stream, p, count, seed, true);
  return engine.run(stats);
}

std::size_t samplers_per_group(unsigned p, std::size_t m, double epsilon, double scale_c) {
  if (p == 0 || p > 20) throw ConfigError("p must be an integer in [1, 20]");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  if (!(scale_c > 0.0)) throw ConfigError("scale_c must be positive");
  const double t = scale_c * static_cast<double>(factorial(p)) *
                   std::pow(static_cast<double>(m), 1.0 - 1.0 / p) / (epsilon * epsilon);
  if (!(t < 0x1.0p62)) throw ConfigError("t overflows; lower scale_c");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t)));
}

double min_of_group_means(std::span<const double> values, std::size_t per_group,
                          std::vector<double>* means) {
  if (per_group == 0 || values.empty() || values.size() % per_group != 0) {
    throw ConfigError("values do not split into equal non-empty groups");
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g * per_group < values.size(); ++g) {
    double sum = 0;
    for (std::size_t i = 0; i < per_group; ++i) sum += values[g * per_group + i];
    const double mean = sum / static_cast<double>(per_group);
    if (means != nullptr) means->push_back(mean);
    best = std::min(best, mean);
  }
  return best;
}

StreamEstimateReport streaming_estimate(const Dataset& ds, const StreamParams& params) {
  if (ds.size() == 0) throw ConfigError("no estimate exists for an empty stream");
  if (params.ell == 0) throw ConfigError("ell must be positive");
  const std::size_t t = params.t_override ? *params.t_override
                                          : samplers_per_group(params.p, ds.size(), params.epsilon,
                                                               params.scale_c);
  if (params.t_override && (t == 0 || !(params.epsilon > 0.0 && params.epsilon < 1.0))) {
    throw ConfigError("t must be positive and epsilon must lie in (0, 1)");
  }
  const std::size_t total = t * params.ell;
  if (total / params.ell != t || total > params.max_samplers) {
    throw ConfigError("ell * t = " + std::to_string(t) + " * " + std::to_string(params.ell) +
                      " samplers exceeds the limit; lower scale_c or ell");
  }
  DatasetStream stream(ds);
  std::vector<double> values;
  switch (params.engine) {
    case SamplerEngine::kPooled:
      values = run_samplers_pooled(stream, params.p, total, params.seed);
      break;
    case SamplerEngine::kNaive:
      values = run_samplers_naive(stream, params.p, total, params.seed);
      break;
    case SamplerEngine::kDeferred:
      values = run_samplers_deferred(stream, params.p, total, params.seed);
      break;
  }
  StreamEstimateReport report;
  report.groups = params.ell;
  report.per_group = t;
  report.samplers = total;
  report.seed = params.seed;
  report.memory_words = static_cast<std::uint64_t>(total) * 3 * params.p;
  report.estimate = min_of_group_means(values, t, &report.group_means);
  return report;
}

}  // namespace noisyfp
