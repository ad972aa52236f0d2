#include <algorithm>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "noisyfp/distsim.hpp"
#include "noisyfp/error.hpp"
#include "test_util.hpp"

namespace noisyfp {
namespace {

using testing::labeled;

std::vector<std::vector<NodeIndex>> sites_of(const SitePartition& part) {
  std::vector<std::vector<NodeIndex>> out;
  for (std::size_t s = 0; s < part.k(); ++s) out.emplace_back(part.nodes(s).begin(), part.nodes(s).end());
  return out;
}

TEST(PartitionTest, RoundRobinAndContiguous) {
  using V = std::vector<std::vector<NodeIndex>>;
  EXPECT_EQ(sites_of(partition_dataset(5, 2, PartitionScheme::kRoundRobin)), (V{{1, 3, 5}, {2, 4}}));
  EXPECT_EQ(sites_of(partition_dataset(10, 3, PartitionScheme::kContiguous)),
            (V{{1, 2, 3, 4}, {5, 6, 7}, {8, 9, 10}}));
  // More sites than nodes leaves some empty.
  EXPECT_EQ(sites_of(partition_dataset(2, 4, PartitionScheme::kRoundRobin)), (V{{1}, {2}, {}, {}}));
}

TEST(PartitionTest, HashIsSeededAndCovers) {
  const auto a = partition_dataset(500, 7, PartitionScheme::kHash, 11);
  const auto b = partition_dataset(500, 7, PartitionScheme::kHash, 11);
  const auto c = partition_dataset(500, 7, PartitionScheme::kHash, 12);
  EXPECT_TRUE(std::ranges::equal(a.assignment(), b.assignment()));
  EXPECT_FALSE(std::ranges::equal(a.assignment(), c.assignment()));
  std::size_t total = 0;
  for (std::size_t s = 0; s < 7; ++s) {
    total += a.nodes(s).size();
    EXPECT_GT(a.nodes(s).size(), 40u);  // 500/7 ≈ 71 expected
  }
  EXPECT_EQ(total, 500u);
}

TEST(PartitionTest, Errors) {
  EXPECT_THROW(partition_dataset(5, 0, PartitionScheme::kRoundRobin), ConfigError);
  EXPECT_THROW(partition_dataset(5, 2, PartitionScheme::kExplicit), ConfigError);
  EXPECT_THROW(SitePartition(2, {0, 2}), ConfigError);
  EXPECT_THROW(parse_partition_scheme("striped"), ConfigError);
  for (auto s : {PartitionScheme::kRoundRobin, PartitionScheme::kContiguous, PartitionScheme::kHash,
                 PartitionScheme::kExplicit}) {
    EXPECT_EQ(parse_partition_scheme(to_string(s)), s);
  }
}

TEST(PartitionCsvTest, RoundTrip) {
  const auto part = partition_dataset(37, 5, PartitionScheme::kHash, 3);
  std::stringstream buf;
  write_partition_csv(buf, part);
  const auto back = read_partition_csv(buf, 37, 5);
  EXPECT_TRUE(std::ranges::equal(part.assignment(), back.assignment()));
}

TEST(PartitionCsvTest, RejectsMalformedMaps) {
  auto read = [](const std::string& text, std::size_t m, std::size_t k) {
    std::istringstream in(text);
    return read_partition_csv(in, m, k);
  };
  EXPECT_NO_THROW(read("node,site\n2,1\n1,0\n", 2, 2));
  EXPECT_THROW(read("id,site\n1,0\n", 1, 1), ConfigError);
  EXPECT_THROW(read("node,site\n1,0\n1,1\n", 2, 2), ConfigError);  // twice
  EXPECT_THROW(read("node,site\n1,0\n", 2, 2), ConfigError);       // node 2 missing
  EXPECT_THROW(read("node,site\n1,2\n2,0\n", 2, 2), ConfigError);  // site out of range
  EXPECT_THROW(read("node,site\n3,0\n", 2, 2), ConfigError);       // node out of range
  EXPECT_THROW(read("node,site\n1;0\n", 1, 1), ConfigError);
}

TEST(RoundLogTest, RejectsInconsistentMessages) {
  RoundLog log(2);
  Payload p;
  p.counts = {1, 2};
  EXPECT_THROW(log.record({1, 0, kCoordinator, 3, p}), InvariantViolation);
  Payload mismatched;
  mismatched.nodes = {1, 2};
  mismatched.items = {Item(Labeled{1})};
  EXPECT_THROW(log.record({1, 0, kCoordinator, 2, mismatched}), InvariantViolation);
  EXPECT_EQ(log.total_words(), 0u);
}

TEST(RoundLogTest, Accounting) {
  RoundLog log(3);
  Payload two;
  two.counts = {5, 6};
  Payload one;
  one.reals = {0.5};
  log.record({1, kCoordinator, 0, 2, two});
  log.record({1, 2, kCoordinator, 1, one});
  log.record({3, 0, kCoordinator, 1, one});
  EXPECT_EQ(log.total_words(), 4u);
  EXPECT_EQ(log.rounds_used(), 3u);
  EXPECT_EQ(log.words_per_site(), (std::vector<std::uint64_t>{3, 0, 1}));
  std::ostringstream csv;
  log.write_csv(csv);
  EXPECT_EQ(csv.str(), "round,from,to,words\n1,C,0,2\n1,2,C,1\n3,0,C,1\n");
  const auto j = nlohmann::json::parse(log.summary_json());
  EXPECT_EQ(j["total_words"], 4);
  EXPECT_EQ(j["rounds"], 3);
  EXPECT_EQ(j["per_site_words"], nlohmann::json({3, 0, 1}));
}

TEST(CoordinatorSimTest, MessagesGoThroughTheLedger) {
  const auto ds = labeled({1, 1, 2, 3});
  const auto part = partition_dataset(4, 2, PartitionScheme::kRoundRobin);
  CoordinatorSim sim(ds, part, 9);
  Payload p;
  p.counts = {1};
  EXPECT_THROW(sim.send(0, kCoordinator, p), InvariantViolation);  // before round 1
  EXPECT_EQ(sim.begin_round(), 1u);
  EXPECT_THROW(sim.send(0, 1, p), InvariantViolation);
  EXPECT_THROW(sim.send(kCoordinator, kCoordinator, p), InvariantViolation);
  Payload nodes;
  nodes.nodes = {1, 3};
  nodes.items = {ds.item(1), ds.item(3)};
  const auto got = sim.send(0, kCoordinator, nodes);
  EXPECT_EQ(got.nodes, nodes.nodes);
  EXPECT_EQ(sim.begin_round(), 2u);
  sim.send(kCoordinator, 1, p);
  EXPECT_EQ(sim.log().total_words(), 3u);
  EXPECT_EQ(sim.log().rounds_used(), 2u);
  EXPECT_EQ(sim.log().messages().size(), 2u);
}

TEST(CoordinatorSimTest, SitesSeeOnlyTheirOwnItems) {
  const auto ds = labeled({1, 1, 1, 2, 2});
  const auto part = partition_dataset(5, 2, PartitionScheme::kRoundRobin);  // {1,3,5} {2,4}
  CoordinatorSim sim(ds, part, 1);
  EXPECT_NO_THROW(sim.site(0).item(3));
  EXPECT_THROW(sim.site(0).item(2), InvariantViolation);
  EXPECT_EQ(sim.site(0).local_degrees(), (std::vector<std::uint64_t>{2, 2, 1}));
  EXPECT_EQ(sim.site(1).local_degrees(), (std::vector<std::uint64_t>{1, 1}));
  // A foreign item shown to a site is compared against its own nodes only.
  EXPECT_EQ(sim.site(1).degree_of(1, ds.item(1)), 1u);
  EXPECT_EQ(sim.site(0).degree_of(4, ds.item(4)), 1u);
  EXPECT_THROW(CoordinatorSim(ds, partition_dataset(4, 2, PartitionScheme::kRoundRobin), 1), ConfigError);
}

TEST(CoordinatorSimTest, SiteStreamsAreIndependentOfK) {
  const auto ds = labeled({1, 2, 3, 4});
  CoordinatorSim a(ds, partition_dataset(4, 2, PartitionScheme::kRoundRobin), 5);
  CoordinatorSim b(ds, partition_dataset(4, 3, PartitionScheme::kRoundRobin), 5);
  EXPECT_EQ(a.site(1).rng()(), b.site(1).rng()());
  EXPECT_NE(a.site(0).rng()(), a.site(1).rng()());
}

}  // namespace
}  // namespace noisyfp
