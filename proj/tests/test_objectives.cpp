// Copyright 2026 The relsdqn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "reference.hpp"
#include "rels/errors.hpp"
#include "rels/objectives.hpp"
#include "testing.hpp"

namespace rels {
namespace {

using testing::Case;
using testing::random_case;
using testing::random_subset;
using testing::rel_tol;

std::shared_ptr<const Graph> graph(std::size_t n, bool directed, std::vector<Edge> edges) {
  return std::make_shared<const Graph>(n, directed, std::move(edges));
}

std::shared_ptr<const Graph> triangle() {
  return graph(3, false, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
}

TEST(MaxCut, Examples) {
  auto o = make_maxcut(triangle());
  EXPECT_EQ(o->value(std::vector<Node>{0}), 2.0);
  EXPECT_EQ(o->value(std::vector<Node>{}), 0.0);
  EXPECT_EQ(o->gain(0, std::vector<Node>{}), 2.0);
  auto path = make_maxcut(graph(3, false, {{0, 1, 1.0}, {1, 2, -1.0}}));
  EXPECT_EQ(path->value(std::vector<Node>{1}), 0.0);
  EXPECT_THROW(make_maxcut(graph(2, true, {{0, 1, 1.0}})), ValidationError);
}

TEST(MaxCut, ComplementSymmetryAndEdgeOrder) {
  Rng rng(5);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Case c = random_case(Application::MaxCut, 25, seed);
    std::vector<Edge> shuffled = c.graph->edges();
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.index(i)]);
    auto permuted = make_maxcut(graph(c.graph->size(), false, shuffled));
    for (int t = 0; t < 10; ++t) {
      const auto v = random_subset(rng, 25);
      std::vector<Node> rest;
      for (Node i = 0; i < 25; ++i) {
        if (std::find(v.begin(), v.end(), i) == v.end()) rest.push_back(i);
      }
      const double f = c.oracle->value(v);
      EXPECT_NEAR(f, c.oracle->value(rest), rel_tol(f));
      EXPECT_NEAR(f, permuted->value(v), rel_tol(f));
    }
  }
}

TEST(MaxCov, Examples) {
  auto star = graph(4, true, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}});
  auto o = make_maxcov(star, 6.0);
  EXPECT_EQ(o->value(std::vector<Node>{0}), 3.0);
  EXPECT_EQ(o->value(std::vector<Node>{}), 0.0);
  EXPECT_EQ(MaxCovOracle::node_cost(8, 6.0), 3.0);
  for (std::size_t d = 0; d < 20; ++d) EXPECT_GE(MaxCovOracle::node_cost(d, 6.0), 1.0);
  EXPECT_THROW(make_maxcov(triangle()), ValidationError);
  EXPECT_THROW(make_maxcov(star, 6.0, {1.0, 1.0}), ValidationError);
}

TEST(MaxCov, InsertionOrderIndependent) {
  Rng rng(8);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Case c = random_case(Application::MaxCov, 30, seed);
    auto v = random_subset(rng, 30, 0.3);
    auto o = c.oracle->clone();
    o->assign(v);
    const double forward_order = o->current_value();
    std::reverse(v.begin(), v.end());
    o->reset();
    for (Node e : v) o->apply_flip(e);
    EXPECT_NEAR(o->current_value(), forward_order, rel_tol(forward_order));
    EXPECT_NEAR(o->current_value(), c.reference(v), rel_tol(forward_order));
  }
}

TEST(MaxCov, NodeWeightFile) {
  const auto dir = std::filesystem::path(RELS_TEST_TMPDIR);
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "weights.txt");
    out << "# node weight\n0 2.5\n3 0.5\n";
  }
  const auto w = load_node_weights((dir / "weights.txt").string(), 4);
  EXPECT_EQ(w, (std::vector<double>{2.5, 1.0, 1.0, 0.5}));
  {
    std::ofstream out(dir / "bad_weights.txt");
    out << "0 1\n9 1\n";
  }
  EXPECT_THROW(load_node_weights((dir / "bad_weights.txt").string(), 4), ParseError);
  auto star = graph(4, true, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}});
  EXPECT_EQ(make_maxcov(star, 6.0, w)->value(std::vector<Node>{0}), 2.5 + 1 + 1 + 0.5 - 1);
}

TEST(MovRec, TwoItemExample) {
  RatingsMatrix r;
  r.ratings = (Eigen::MatrixXd(2, 2) << 1, 0, 0, 1).finished();
  auto o = make_movrec(r, 5.0);
  EXPECT_EQ(o->value(std::vector<Node>{0}), -4.0);
  EXPECT_EQ(o->value(std::vector<Node>{}), 0.0);
}

TEST(MovRec, GainMatchesValueDifference) {
  Rng rng(2);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Case c = random_case(Application::MovRec, 10, seed);
    const std::vector<Node> base{0};
    const double expected =
        c.oracle->value(std::vector<Node>{0, 1}) - c.oracle->value(base);
    EXPECT_NEAR(c.oracle->gain(1, base), expected, rel_tol(expected));
  }
}

TEST(MovRec, ZeroLambdaIsAdditive) {
  RatingsMatrix r;
  r.ratings = Eigen::MatrixXd::Random(12, 6).cwiseAbs();
  auto o = make_movrec(r, 0.0);
  Rng rng(3);
  for (Node e = 0; e < 12; ++e) {
    const double g0 = o->gain(e, std::vector<Node>{});
    for (int t = 0; t < 10; ++t) {
      auto v = random_subset(rng, 12);
      v.erase(std::remove(v.begin(), v.end(), e), v.end());
      EXPECT_NEAR(o->gain(e, v), g0, rel_tol(g0));
    }
  }
}

TEST(MovRec, OnDemandRowsMatchDense) {
  Rng rng(6);
  RatingsMatrix r;
  r.ratings = Eigen::MatrixXd::Zero(40, 9);
  for (Eigen::Index i = 0; i < 40; ++i) {
    for (Eigen::Index u = 0; u < 9; ++u) {
      if (rng.bernoulli(0.5)) r.ratings(i, u) = static_cast<double>(1 + rng.index(5));
    }
  }
  auto dense = make_movrec(r, 5.0);
  auto lazy = make_movrec(r, 5.0, /*dense_limit=*/10);
  for (int t = 0; t < 50; ++t) {
    const auto v = random_subset(rng, 40);
    const double f = dense->value(v);
    EXPECT_NEAR(lazy->value(v), f, rel_tol(f));
    const Node e = static_cast<Node>(rng.index(40));
    EXPECT_NEAR(lazy->gain(e, v), dense->gain(e, v), rel_tol(f));
  }
  for (int t = 0; t < 300; ++t) {
    const Node e = static_cast<Node>(rng.index(40));
    dense->apply_flip(e);
    lazy->apply_flip(e);
  }
  EXPECT_NEAR(lazy->current_value(), dense->current_value(), rel_tol(dense->current_value()));
  EXPECT_LT(lazy->cache_error(), 1e-9);
}

TEST(MovRec, GraphSimilarity) {
  Rng rng(4);
  const Graph g = gen_er(30, 0.2, WeightScheme::UniformReal, 4);
  auto o = make_movrec(g, 5.0);
  for (int t = 0; t < 50; ++t) {
    const auto v = random_subset(rng, 30);
    const double expected = ref::movrec_graph(g, 5.0, v);
    EXPECT_NEAR(o->value(v), expected, rel_tol(expected));
  }
  EXPECT_THROW(make_movrec(gen_er(5, 0.5, WeightScheme::Unit, 1, true)), ValidationError);
}

TEST(InfExp, Examples) {
  auto two = graph(2, false, {{0, 1, 0.25}});
  auto o = make_infexp(two, std::vector<double>{1.0, 1.0});
  EXPECT_EQ(o->value(std::vector<Node>{0}), 0.5);
  EXPECT_EQ(o->value(std::vector<Node>{0, 1}), 0.0);
  EXPECT_EQ(o->value(std::vector<Node>{}), 0.0);
  EXPECT_THROW(make_infexp(graph(2, false, {{0, 1, -0.5}}), std::vector<double>{1, 1}),
               ValidationError);
  EXPECT_THROW(make_infexp(two, std::vector<double>{1.0, -1.0}), ValidationError);
}

TEST(InfExp, CacheAgreesAfterManyFlips) {
  auto g = std::make_shared<const Graph>(gen_ba(20, 4, WeightScheme::UniformReal, 3));
  auto o = make_infexp(g, 2.0, 1.0, 11);
  Rng rng(12);
  for (int t = 0; t < 1000; ++t) {
    o->apply_flip(static_cast<Node>(rng.index(20)));
    ASSERT_LT(o->cache_error(), 1e-9) << "flip " << t;
  }
}

TEST(InfExp, ValueMonotoneInCoefficients) {
  Rng rng(13);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Case c = random_case(Application::InfExp, 20, seed);
    const auto v = random_subset(rng, 20, 0.3);
    double previous = c.oracle->value(v);
    EXPECT_GE(previous, 0.0);
    auto a = c.a;
    for (Node i = 0; i < 20; ++i) {
      a[i] *= 0.5;
      const double f = make_infexp(c.graph, a)->value(v);
      EXPECT_LE(f, previous + 1e-12);
      EXPECT_GE(f, 0.0);
      previous = f;
    }
  }
}

TEST(Lomax, InverseCdf) {
  const auto a = sample_lomax(200000, 2.0, 1.0, 21);
  EXPECT_EQ(a, sample_lomax(200000, 2.0, 1.0, 21));
  for (double x : a) ASSERT_GE(x, 0.0);
  // Median of Lomax(shape 2, scale 1) is 2^(1/2) - 1; P(X <= x) = 1 - (1 + x)^-2.
  auto sorted = a;
  std::nth_element(sorted.begin(), sorted.begin() + 100000, sorted.end());
  EXPECT_NEAR(sorted[100000], std::sqrt(2.0) - 1.0, 0.01);
  const double below_one = static_cast<double>(std::count_if(a.begin(), a.end(), [](double x) {
                             return x <= 1.0;
                           })) / 200000.0;
  EXPECT_NEAR(below_one, 0.75, 5.0 * std::sqrt(0.75 * 0.25 / 200000.0));
  EXPECT_THROW(sample_lomax(3, 0.0, 1.0, 1), ValidationError);
}

class AllApplications : public ::testing::TestWithParam<Application> {};

TEST_P(AllApplications, ValueMatchesReference) {
  Rng rng(31);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Case c = random_case(GetParam(), 10 + seed, seed);
    for (int t = 0; t < 10; ++t) {
      const auto v = random_subset(rng, c.oracle->size(), rng.uniform());
      const double expected = c.reference(v);
      ASSERT_NEAR(c.oracle->value(v), expected, rel_tol(expected)) << "seed " << seed;
    }
    EXPECT_EQ(c.oracle->value(std::vector<Node>{}), 0.0);
  }
}

TEST_P(AllApplications, FlipGainIsValueDifference) {
  Rng rng(32);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Case c = random_case(GetParam(), 5 + seed % 40, seed);
    const std::size_t n = c.oracle->size();
    for (int t = 0; t < 20; ++t) {
      const auto v = random_subset(rng, n, rng.uniform());
      const Node e = static_cast<Node>(rng.index(n));
      const auto w = testing::flipped(v, e);
      const double before = c.oracle->value(v);
      const double after = c.oracle->value(w);
      const double g = c.oracle->gain(e, v);
      ASSERT_NEAR(g, after - before, rel_tol(std::max(std::abs(before), std::abs(after))));
      // Flipping back undoes the difference.
      ASSERT_NEAR(g + c.oracle->gain(e, w), 0.0, rel_tol(before));
    }
  }
}

TEST_P(AllApplications, IncrementalStateTracksRecomputation) {
  Rng rng(33);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Case c = random_case(GetParam(), 30, seed);
    auto& o = *c.oracle;
    for (int t = 0; t < 200; ++t) {
      const Node e = static_cast<Node>(rng.index(30));
      const double predicted = o.gain(e);
      const auto set = o.current_set();
      ASSERT_NEAR(predicted, o.gain(e, set), rel_tol(o.current_value()));
      o.apply_flip(e);
    }
    EXPECT_LT(o.cache_error(), 1e-9);
    EXPECT_NEAR(o.current_value(), c.reference(o.current_set()), rel_tol(o.current_value()));
  }
}

TEST_P(AllApplications, DoubleFlipRestoresState) {
  Rng rng(34);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Case c = random_case(GetParam(), 25, seed);
    auto& o = *c.oracle;
    o.assign(random_subset(rng, 25));
    std::vector<double> gains;
    for (Node e = 0; e < 25; ++e) gains.push_back(o.gain(e));
    const double value = o.current_value();
    const Node x = static_cast<Node>(rng.index(25));
    o.apply_flip(x);
    o.apply_flip(x);
    EXPECT_NEAR(o.current_value(), value, 1e-12 * std::max(1.0, std::abs(value)));
    for (Node e = 0; e < 25; ++e) EXPECT_NEAR(o.gain(e), gains[e], 1e-12 * std::max(1.0, std::abs(gains[e])));
    EXPECT_LT(o.cache_error(), 1e-12);
  }
}

TEST_P(AllApplications, FlipFromEmptyEqualsSingletonValue) {
  Case c = random_case(GetParam(), 15, 4);
  for (Node e = 0; e < 15; ++e) {
    auto o = c.oracle->clone();
    o->reset();
    o->apply_flip(e);
    const double expected = c.oracle->value(std::vector<Node>{e});
    EXPECT_NEAR(o->current_value(), expected, rel_tol(expected));
    EXPECT_EQ(o->current_set(), std::vector<Node>{e});
  }
}

TEST_P(AllApplications, QueryAccountingAndRangeChecks) {
  Case c = random_case(GetParam(), 12, 1);
  auto& o = *c.oracle;
  o.reset_queries();
  o.value(std::vector<Node>{1, 2});
  o.gain(3, std::vector<Node>{1});
  o.gain(4);
  EXPECT_EQ(o.queries(), 3u);
  o.apply_flip(5);
  o.current_value();
  EXPECT_EQ(o.queries(), 3u);
  EXPECT_THROW(o.gain(12), std::out_of_range);
  EXPECT_THROW(o.apply_flip(99), std::out_of_range);
  EXPECT_THROW(o.value(std::vector<Node>{12}), std::out_of_range);
}

TEST_P(AllApplications, ClonesHaveIndependentState) {
  Case c = random_case(GetParam(), 12, 2);
  c.oracle->apply_flip(3);
  auto copy = c.oracle->clone();
  EXPECT_TRUE(copy->contains(3));
  copy->apply_flip(4);
  EXPECT_FALSE(c.oracle->contains(4));
  EXPECT_EQ(copy->application(), GetParam());
}

INSTANTIATE_TEST_SUITE_P(Objectives, AllApplications,
                         ::testing::ValuesIn(kAllApplications),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Applications, NamesRoundTrip) {
  for (Application a : kAllApplications) EXPECT_EQ(parse_application(to_string(a)), a);
  EXPECT_THROW(parse_application("tsp"), ValidationError);
}

}  // namespace
}  // namespace rels
