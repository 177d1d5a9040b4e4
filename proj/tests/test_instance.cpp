#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "test_support.hpp"
#include "tsg/tsg.hpp"

using namespace tsg;

namespace {

std::uint64_t bits(double x) {
  std::uint64_t b;
  std::memcpy(&b, &x, sizeof b);
  return b;
}

void expect_same_instance(const Instance& a, const Instance& b) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(bits(a.budget()), bits(b.budget()));
  EXPECT_EQ(a.seed(), b.seed());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.items()[i].id, b.items()[i].id);
    EXPECT_EQ(bits(a.items()[i].cost), bits(b.items()[i].cost));
    EXPECT_TRUE(a.items()[i].dist == b.items()[i].dist) << "item " << a.items()[i].id;
  }
}

Instance mixed_instance() {
  return Instance({{1, 1.0 / 3.0, ValueDistribution::bernoulli(0.1)},
                   {2, 2.5, ValueDistribution::exponential(std::sqrt(2.0))},
                   {3, 7.0, pareto_from_mean(0.7, 1.05)},
                   {4, 30.0, ValueDistribution::deterministic(0.1 + 0.2)},
                   {-5, 1e-3, ValueDistribution::empirical({0.0, 0.5, 1.0 / 7.0})}},
                  30.0, 0xFFFFFFFFFFFFFFFFULL);
}

}  // namespace

TEST(ReplicationCount, Examples) {
  EXPECT_EQ(replication_count(7.0, 30.0), 4);
  EXPECT_EQ(replication_count(30.0, 30.0), 1);
  EXPECT_EQ(replication_count(1.0, 30.0), 30);
}

TEST(ReplicationCount, CostAboveBudgetIsInfeasible) {
  EXPECT_THROW(replication_count(30.5, 30.0), InfeasibleItemError);
  EXPECT_THROW(replication_count(0.0, 30.0), InvalidParameterError);
}

TEST(ReplicationCount, BracketsBudgetOverCost) {
  RandomStream rng(1, 0, Purpose::kVerify);
  for (int t = 0; t < 10000; ++t) {
    const double budget = 0.1 + 100.0 * rng.uniform();
    const double cost = budget * (1e-4 + (1.0 - 1e-4) * rng.uniform());
    const auto k = replication_count(cost, budget);
    ASSERT_GE(k, 1);
    ASSERT_LE(static_cast<double>(k), budget / cost);
    ASSERT_LT(budget / cost, static_cast<double>(k + 1));
  }
}

TEST(DistMean, Examples) {
  EXPECT_DOUBLE_EQ(dist_mean(ValueDistribution::bernoulli(0.3)), 0.3);
  EXPECT_DOUBLE_EQ(dist_mean(ValueDistribution::deterministic(2.5)), 2.5);
  EXPECT_DOUBLE_EQ(dist_mean(ValueDistribution::empirical({1, 2, 3})), 2.0);
  EXPECT_DOUBLE_EQ(dist_mean(ValueDistribution::exponential(1.5)), 1.5);
}

TEST(Distribution, RejectsOutOfRangeParameters) {
  EXPECT_THROW(ValueDistribution::bernoulli(1.1), InvalidParameterError);
  EXPECT_THROW(ValueDistribution::bernoulli(-0.1), InvalidParameterError);
  EXPECT_THROW(ValueDistribution::exponential(0.0), InvalidParameterError);
  EXPECT_THROW(ValueDistribution::pareto(1.0, 1.0), InvalidParameterError);
  EXPECT_THROW(ValueDistribution::pareto(2.0, 0.0), InvalidParameterError);
  EXPECT_THROW(ValueDistribution::deterministic(-1.0), InvalidParameterError);
  EXPECT_THROW(ValueDistribution::empirical({}), InvalidParameterError);
  EXPECT_THROW(ValueDistribution::empirical({1.0, -2.0}), InvalidParameterError);
}

TEST(SampleValues, Examples) {
  RandomStream rng(0, 0, Purpose::kVerify);
  EXPECT_EQ(sample_values(ValueDistribution::deterministic(1.0), 3, rng), (std::vector<double>{1.0, 1.0, 1.0}));
  EXPECT_EQ(sample_values(ValueDistribution::bernoulli(1.0), 2, rng), (std::vector<double>{1.0, 1.0}));
  EXPECT_TRUE(sample_values(ValueDistribution::bernoulli(0.5), 0, rng).empty());

  RandomStream big(7, 0, Purpose::kVerify);
  const auto xs = sample_values(ValueDistribution::bernoulli(0.5), 100000, big);
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  EXPECT_NEAR(mean, 0.5, 0.01);
}

TEST(SampleValues, BitIdenticalUnderFixedSeed) {
  const auto d = ValueDistribution::exponential(0.8);
  RandomStream a(99, 3, Purpose::kEstimation);
  RandomStream b(99, 3, Purpose::kEstimation);
  const auto xa = sample_values(d, 500, a);
  const auto xb = sample_values(d, 500, b);
  for (std::size_t i = 0; i < xa.size(); ++i) ASSERT_EQ(bits(xa[i]), bits(xb[i]));
}

TEST(SampleValues, FrozenDrawsOfDocumentedGenerator) {
  // Reference values from an independent Python transcription of the
  // documented key derivation and SplitMix64 output function.
  RandomStream rng(2024, 1, Purpose::kEstimation);
  EXPECT_EQ(rng.key(), 12927033667878480665ULL);
  EXPECT_EQ(rng.uniform(), 0.5395261229459319);
  EXPECT_EQ(rng.uniform(), 0.7013734143416431);
  EXPECT_EQ(rng.uniform(), 0.9308496129257141);
  RandomStream again(2024, 1, Purpose::kEstimation);
  EXPECT_EQ(sample_values(ValueDistribution::bernoulli(0.5), 3, again), (std::vector<double>{0.0, 0.0, 0.0}));
  RandomStream exp_stream(2024, 1, Purpose::kEstimation);
  EXPECT_DOUBLE_EQ(sample_value(ValueDistribution::exponential(1.0), exp_stream), -std::log1p(-0.5395261229459319));
}

TEST(SampleValues, EmpiricalMeanConverges) {
  // Property: mean of Empirical(sample_values(d, N)) approaches dist_mean(d).
  const std::vector<ValueDistribution> dists{ValueDistribution::bernoulli(0.3), ValueDistribution::exponential(2.0),
                                             pareto_from_mean(1.0, 3.0), ValueDistribution::empirical({0, 1, 5})};
  const std::vector<double> sd{std::sqrt(0.21), 2.0, std::sqrt(1.0 / 3.0),
                               std::sqrt((0.0 + 1.0 + 25.0) / 3.0 - 4.0)};
  for (std::size_t i = 0; i < dists.size(); ++i) {
    RandomStream rng(5, i, Purpose::kVerify);
    const auto xs = sample_values(dists[i], 100000, rng);
    const double m = dist_mean(ValueDistribution::empirical(xs));
    EXPECT_NEAR(m, dist_mean(dists[i]), 3.0 * sd[i] / std::sqrt(1e5)) << dists[i].tag();
  }
}

TEST(ParetoFromMean, Examples) {
  EXPECT_DOUBLE_EQ(pareto_from_mean(1.0, 2.0).as<ParetoTypeI>().scale, 0.5);
  EXPECT_DOUBLE_EQ(pareto_from_mean(2.0, 3.0).as<ParetoTypeI>().scale, 4.0 / 3.0);
  EXPECT_NEAR(dist_mean(pareto_from_mean(0.7, 1.5)), 0.7, 1e-15);
  EXPECT_THROW(pareto_from_mean(1.0, 1.0), InvalidParameterError);
  EXPECT_THROW(pareto_from_mean(1.0, 0.5), InvalidParameterError);
}

TEST(Support, FiniteAndMaxima) {
  const auto b = finite_support(ValueDistribution::bernoulli(0.25));
  ASSERT_TRUE(b);
  ASSERT_EQ(b->size(), 2u);
  EXPECT_EQ((*b)[0].value, 0.0);
  EXPECT_EQ((*b)[1].probability, 0.25);
  EXPECT_EQ(finite_support(ValueDistribution::bernoulli(1.0))->size(), 1u);
  const auto e = finite_support(ValueDistribution::empirical({2, 1, 2}));
  ASSERT_TRUE(e);
  ASSERT_EQ(e->size(), 2u);
  EXPECT_DOUBLE_EQ((*e)[1].probability, 2.0 / 3.0);
  EXPECT_FALSE(finite_support(ValueDistribution::exponential(1.0)));
  EXPECT_EQ(support_max(ValueDistribution::bernoulli(0.5)), 1.0);
  EXPECT_EQ(support_max(ValueDistribution::empirical({3, 9, 1})), 9.0);
  EXPECT_TRUE(std::isinf(support_max(pareto_from_mean(1.0, 2.0))));
  EXPECT_NEAR(truncation_point(ValueDistribution::exponential(1.0), 1.0 - 1e-6), std::log(1e6), 1e-6);
}

TEST(Instance, ValidatesItems) {
  const auto d = ValueDistribution::deterministic(1.0);
  EXPECT_THROW(Instance({{1, 31.0, d}}, 30.0), InfeasibleItemError);
  EXPECT_THROW(Instance({{1, 1.0, d}, {1, 2.0, d}}, 30.0), InvalidParameterError);
  EXPECT_THROW(Instance({{1, -1.0, d}}, 30.0), InvalidParameterError);
  EXPECT_THROW(Instance({{1, 1.0, d}}, 0.0), InvalidParameterError);
  const Instance ok({{4, 7.0, d}, {2, 30.0, d}}, 30.0);
  EXPECT_EQ(ok.k(4), 4);
  EXPECT_EQ(ok.k(2), 1);
  EXPECT_THROW(ok.item(3), UnknownItemError);
  const ItemSet both{4, 2};
  EXPECT_FALSE(ok.feasible(both));
  EXPECT_DOUBLE_EQ(ok.cost_of(both), 37.0);
}

TEST(InstanceIo, TextRoundTripIsBitExact) {
  const Instance inst = mixed_instance();
  const std::string text = instance_to_text(inst);
  expect_same_instance(inst, instance_from_text(text));
  EXPECT_EQ(instance_to_text(instance_from_text(text)), text);
}

TEST(InstanceIo, JsonRoundTripIsBitExact) {
  const Instance inst = mixed_instance();
  const std::string text = instance_to_json(inst).dump();
  std::istringstream is(text);
  expect_same_instance(inst, read_instance(is));
}

TEST(InstanceIo, ReadsCommentsAndBlankLines) {
  std::istringstream is("# generated\n\ntsg-instance 1\nbudget 10 # B\nitem 1 2.5 bernoulli 0.5\n");
  const Instance inst = read_instance(is);
  EXPECT_EQ(inst.size(), 1u);
  EXPECT_EQ(inst.k(1), 4);
}

TEST(InstanceIo, ErrorsCarryLineNumbers) {
  try {
    instance_from_text("tsg-instance 1\nbudget 10\nitem 1 abc bernoulli 0.5\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  try {
    instance_from_text("tsg-instance 1\nbudget 10\nitem 1 1 gamma 0.5\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  EXPECT_THROW(instance_from_text("budget 10\n"), ParseError);
  EXPECT_THROW(instance_from_text("tsg-instance 1\nitem 1 1 bernoulli 0.5\n"), ParseError);
  EXPECT_THROW(instance_from_text("tsg-instance 1\nbudget 1\nitem 1 2 bernoulli 0.5\n"), InfeasibleItemError);
  std::istringstream bad_json("{\"items\": 3}");
  EXPECT_THROW(read_instance(bad_json), ParseError);
}
