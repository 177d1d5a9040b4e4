#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "test_support.hpp"
#include "tsg/tsg.hpp"

using namespace tsg;

namespace {

double eval(const ValueFunction& g, std::vector<double> x) { return g(std::span<const double>(x)); }

std::vector<ValueFunction> all_variants() {
  return {ValueFunction::modular(),
          ValueFunction::power(0.5),
          ValueFunction::power(1.0),
          ValueFunction::saturating(2.0, 1.5),
          ValueFunction::top_r(1),
          ValueFunction::top_r(3),
          ValueFunction::ces(2.0),
          ValueFunction::ces(3.5),
          ValueFunction::success(SuccessCurve::kMin),
          ValueFunction::success(SuccessCurve::kExp),
          ValueFunction::parse("0.5*max+2*sqrt")};
}

std::vector<double> random_vector(RandomStream& rng, std::size_t max_len) {
  std::vector<double> v(rng.below(max_len + 1));
  for (double& x : v) x = rng.uniform() < 0.1 ? 0.0 : 3.0 * rng.uniform();
  return v;
}

// Non-symmetric map x -> x_1^2, used as a negative control.
struct FirstSquared {
  double operator()(std::span<const double> x) const { return x.empty() ? 0.0 : x[0] * x[0]; }
};

// (sum x)^2: symmetric and monotone but convex, so diminishing returns fail.
struct SumSquared {
  double operator()(std::span<const double> x) const {
    double s = 0.0;
    for (double v : x) s += v;
    return s * s;
  }
};

}  // namespace

TEST(Evaluate, Examples) {
  EXPECT_DOUBLE_EQ(eval(ValueFunction::ces(2.0), {3, 4}), 5.0);
  EXPECT_DOUBLE_EQ(eval(ValueFunction::top_r(2), {5, 3, 1}), 8.0);
  EXPECT_DOUBLE_EQ(eval(ValueFunction::success(SuccessCurve::kMin), {0.5, 0.5}), 0.75);
  EXPECT_DOUBLE_EQ(eval(ValueFunction::modular(), {}), 0.0);
  EXPECT_DOUBLE_EQ(eval(ValueFunction::power(0.5), {1, 3}), 2.0);
  EXPECT_DOUBLE_EQ(eval(ValueFunction::saturating(2.0, 1.0), {1}), 1.0);
  EXPECT_DOUBLE_EQ(eval(ValueFunction::success(SuccessCurve::kExp), {std::log(2.0)}), 0.5);
  EXPECT_DOUBLE_EQ(eval(ValueFunction::top_r(3), {4}), 4.0);
}

TEST(Evaluate, NegativeEntryIsDomainError) {
  for (const auto& g : all_variants()) EXPECT_THROW(eval(g, {1.0, -0.5}), DomainError) << g.tag();
}

TEST(Evaluate, EmptyEqualsZeroPadding) {
  for (const auto& g : all_variants()) {
    EXPECT_EQ(eval(g, {}), eval(g, {0, 0, 0})) << g.tag();
    EXPECT_EQ(eval(g, {}), 0.0) << g.tag();
  }
}

TEST(Evaluate, SymmetricToTheBit) {
  RandomStream rng(1, 0, Purpose::kVerify);
  for (const auto& g : all_variants()) {
    for (int t = 0; t < 1000; ++t) {
      auto x = random_vector(rng, 7);
      const double v = eval(g, x);
      for (std::size_t i = x.size(); i > 1; --i) std::swap(x[i - 1], x[rng.below(i)]);
      ASSERT_EQ(v, eval(g, x)) << g.tag();
    }
  }
}

TEST(Evaluate, MonotoneUnderAppending) {
  RandomStream rng(2, 0, Purpose::kVerify);
  for (const auto& g : all_variants()) {
    for (int t = 0; t < 1000; ++t) {
      auto x = random_vector(rng, 7);
      const double before = eval(g, x);
      x.push_back(3.0 * rng.uniform());
      ASSERT_GE(eval(g, x), before) << g.tag();
    }
  }
}

TEST(Evaluate, ZeroPaddingInvariant) {
  RandomStream rng(3, 0, Purpose::kVerify);
  for (const auto& g : all_variants()) {
    for (int t = 0; t < 200; ++t) {
      auto x = random_vector(rng, 6);
      const double v = eval(g, x);
      for (int j = 0; j < 4; ++j) {
        x.push_back(0.0);
        ASSERT_EQ(v, eval(g, x)) << g.tag();
      }
    }
  }
}

TEST(Marginal, Examples) {
  const std::vector<double> ones{1, 1};
  const std::vector<double> five{5};
  EXPECT_DOUBLE_EQ(marginal(ValueFunction::modular(), ones, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(marginal(ValueFunction::top_r(1), five, 3.0), 0.0);
  EXPECT_DOUBLE_EQ(marginal(ValueFunction::top_r(1), five, 7.0), 2.0);
  EXPECT_THROW(marginal(ValueFunction::modular(), ones, -1.0), DomainError);
}

TEST(Curvature, Examples) {
  const auto m = curvature_of(ValueFunction::modular());
  EXPECT_TRUE(m.analytic());
  EXPECT_EQ(*m.alpha, 0.0);
  const auto p1 = curvature_of(ValueFunction::power(1.0));
  EXPECT_TRUE(p1.analytic());
  EXPECT_EQ(*p1.alpha, 0.0);
  const auto max = curvature_of(ValueFunction::top_r(1));
  EXPECT_TRUE(max.analytic());
  EXPECT_EQ(*max.alpha, 1.0);

  RandomStream rng(0, 0, Purpose::kCurvature);
  EXPECT_GE(estimate_curvature(ValueFunction::top_r(1), 10000, rng), 0.99);

  const auto ces = curvature_of(ValueFunction::ces(2.0));
  EXPECT_EQ(ces.source, CurvatureSource::kSampledEstimate);
  EXPECT_GT(*ces.alpha, 0.0);
  EXPECT_LE(*ces.alpha, 1.0);
}

TEST(Curvature, SandwichForAnalyticValues) {
  RandomStream rng(4, 0, Purpose::kVerify);
  for (const auto& g : {ValueFunction::modular(), ValueFunction::power(1.0), ValueFunction::top_r(1)}) {
    const double alpha = *curvature_of(g).alpha;
    for (int t = 0; t < 1000; ++t) {
      std::vector<double> y = random_vector(rng, 6);
      std::vector<double> x;
      for (double v : y) {
        if (rng.below(2)) x.push_back(v);
      }
      const double z = 3.0 * rng.uniform();
      const double mx = marginal(g, x, z);
      const double my = marginal(g, y, z);
      ASSERT_LE((1.0 - alpha) * mx, my + 1e-12) << g.tag();
      ASSERT_LE(my, mx + 1e-9) << g.tag();
    }
  }
}

TEST(DrProperty, Examples) {
  RandomStream rng(5, 0, Purpose::kVerify);
  EXPECT_TRUE(check_dr_property(ValueFunction::modular(), 1000, rng).pass);
  EXPECT_TRUE(check_dr_property(ValueFunction::ces(2.0), 1000, rng).pass);

  const auto first = check_dr_property(FirstSquared{}, 1000, rng);
  EXPECT_FALSE(first.pass);
  ASSERT_TRUE(first.counterexample);

  const auto convex = check_dr_property(SumSquared{}, 1000, rng);
  EXPECT_FALSE(convex.pass);
  ASSERT_TRUE(convex.counterexample);
  EXPECT_EQ(convex.counterexample->kind, DrCounterexample::Kind::kDiminishingReturns);
  EXPECT_LT(convex.counterexample->lhs, convex.counterexample->rhs);
}

TEST(DrProperty, AllVariantsPass) {
  for (const auto& g : all_variants()) {
    RandomStream rng(6, 0, Purpose::kVerify);
    EXPECT_TRUE(check_dr_property(g, 2000, rng).pass) << g.tag();
  }
}

TEST(DrProperty, ValueOrderedReturnsHoldsExceptTopRWithSeveralSlots) {
  // The stronger "larger value, smaller marginal" condition.
  for (const auto& g : all_variants()) {
    RandomStream rng(7, 0, Purpose::kVerify);
    const bool expected_pass = !(g.holds<TopR>() && std::get<TopR>(g.variant()).r > 1) && !g.holds<Combination>();
    EXPECT_EQ(check_value_ordered_returns(g, 5000, rng).pass, expected_pass) << g.tag();
  }
}

TEST(SupNorms, Examples) {
  auto n = g_sup_norms(ValueFunction::modular(), 1.0, 4);
  EXPECT_DOUBLE_EQ(n.g_sup, 4.0);
  EXPECT_DOUBLE_EQ(n.g1_sup, 1.0);
  n = g_sup_norms(ValueFunction::top_r(1), 1.0, 4);
  EXPECT_DOUBLE_EQ(n.g_sup, 1.0);
  EXPECT_DOUBLE_EQ(n.g1_sup, 1.0);
  n = g_sup_norms(ValueFunction::ces(2.0), 1.0, 4);
  EXPECT_DOUBLE_EQ(n.g_sup, 2.0);
  EXPECT_DOUBLE_EQ(n.g1_sup, 1.0);
  n = g_sup_norms(ValueFunction::top_r(2), 3.0, 5);
  EXPECT_DOUBLE_EQ(n.g_sup, 6.0);
  EXPECT_THROW(g_sup_norms(ValueFunction::modular(), support_max(ValueDistribution::exponential(1.0)), 2),
               UnboundedSupportError);
}

TEST(SupNorms, PowerScalingExponent) {
  // k^2 g1_sup^2 / r^2 grows like k^(2(1-a)) for (sum x)^a with a fixed item.
  const double a = 0.5;
  const auto g = ValueFunction::power(a);
  const auto dist = ValueDistribution::bernoulli(0.5);
  std::vector<double> ks{8, 16, 32, 64};
  std::vector<double> logs;
  for (double k : ks) {
    const double r = exact_replicated_value(g, dist, static_cast<std::int64_t>(k));
    const double g1 = g_sup_norms(g, 1.0, static_cast<std::int64_t>(k)).g1_sup;
    logs.push_back(std::log(k * k * g1 * g1 / (r * r)));
  }
  const double slope = (logs.back() - logs.front()) / (std::log(64.0) - std::log(8.0));
  EXPECT_NEAR(slope, 2.0 * (1.0 - a), 0.1 * 2.0 * (1.0 - a));
}

TEST(Parse, TagsRoundTrip) {
  for (const auto& g : all_variants()) {
    const auto again = ValueFunction::parse(g.tag());
    EXPECT_EQ(again.tag(), g.tag());
    EXPECT_DOUBLE_EQ(eval(again, {0.3, 1.7, 0.2}), eval(g, {0.3, 1.7, 0.2}));
  }
  EXPECT_EQ(ValueFunction::parse("sqrt").tag(), "power:0.5");
  EXPECT_EQ(ValueFunction::parse("max").tag(), "topr:1");
  EXPECT_TRUE(ValueFunction::parse("power:1").is_modular());
  EXPECT_DOUBLE_EQ(eval(ValueFunction::parse("2*modular+max"), {1, 3}), 11.0);
}

TEST(Parse, RejectsBadTags) {
  for (const char* bad : {"", "foo", "ces:1", "ces", "power:0", "power:2", "topr:0", "succ:tanh", "sat:1",
                          "ces:abc", "-1*max", "x*max"}) {
    EXPECT_THROW(ValueFunction::parse(bad), ConfigError) << bad;
  }
}
