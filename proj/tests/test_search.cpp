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
#include <iostream>

#include "rels/errors.hpp"
#include "rels/search.hpp"
#include "testing.hpp"

namespace rels {
namespace {

using testing::Case;
using testing::random_case;
using testing::rel_tol;

std::shared_ptr<const Graph> graph(std::size_t n, std::vector<Edge> edges) {
  return std::make_shared<const Graph>(n, false, std::move(edges));
}

// Brute-force optimum by plain enumeration, evaluating every subset with the
// reference evaluator.
double exhaustive_optimum(const Case& c, std::size_t k) {
  const std::size_t n = c.oracle->size();
  double best = c.reference({});
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) > k) continue;
    std::vector<Node> v;
    for (Node e = 0; e < n; ++e) {
      if ((mask >> e) & 1U) v.push_back(e);
    }
    best = std::max(best, c.reference(v));
  }
  return best;
}

void expect_valid(const Solution& s, const Case& c, std::size_t k) {
  EXPECT_LE(s.set.size(), k);
  EXPECT_TRUE(std::is_sorted(s.set.begin(), s.set.end()));
  EXPECT_NEAR(s.value, c.reference(s.set), rel_tol(s.value));
}

TEST(Greedy, ZeroBudgetReturnsEmptySet) {
  for (Application app : kAllApplications) {
    Case c = random_case(app, 10, 1);
    for (const Solution& s : {greedy(*c.oracle, 0), greedy_rev(*c.oracle, 0),
                              greedy_ls(*c.oracle, 0), brute_force_opt(*c.oracle, 0)}) {
      EXPECT_TRUE(s.set.empty());
      EXPECT_EQ(s.value, c.oracle->value(std::vector<Node>{}));
    }
  }
}

TEST(Greedy, TriangleStopsAtZeroGain) {
  auto o = make_maxcut(graph(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}}));
  const Solution s = greedy(*o, 3);
  EXPECT_EQ(s.set, std::vector<Node>{0});
  EXPECT_EQ(s.value, 2.0);
  EXPECT_EQ(brute_force_opt(*o, 3).value, 2.0);
  EXPECT_EQ(brute_force_opt(*o, 7).value, 2.0);
}

TEST(Greedy, LowestIdTieBreak) {
  // Four isolated edges with equal weight: every first gain ties.
  auto o = make_maxcut(graph(8, {{0, 1, 1.0}, {2, 3, 1.0}, {4, 5, 1.0}, {6, 7, 1.0}}));
  EXPECT_EQ(greedy(*o, 2).set, (std::vector<Node>{0, 2}));
}

TEST(Greedy, NeverExceedsExhaustiveOptimum) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Case c;
    c.app = Application::MaxCut;
    c.graph = std::make_shared<const Graph>(gen_er(10, 0.4, WeightScheme::SignedUnit, seed));
    c.oracle = make_maxcut(c.graph);
    const Solution s = greedy(*c.oracle, 4);
    expect_valid(s, c, 4);
    EXPECT_LE(s.value, exhaustive_optimum(c, 4) + 1e-9);
  }
}

TEST(GreedyRev, PathReachesAlternatingCut) {
  auto o = make_maxcut(graph(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}}));
  EXPECT_EQ(greedy_rev(*o, 4).value, 3.0);
  EXPECT_EQ(brute_force_opt(*o, 4).value, 3.0);
}

TEST(GreedyRev, MatchesGreedyAtFlipLocalOptimum) {
  // Star with positive weights: greedy takes the hub and no flip improves.
  auto o = make_maxcut(graph(5, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}, {0, 4, 1.0}}));
  const Solution g = greedy(*o, 3), r = greedy_rev(*o, 3);
  EXPECT_EQ(g.set, r.set);
  EXPECT_EQ(g.value, r.value);
}

TEST(GreedyRev, RecoversFromGreedyMistake) {
  // Greedy takes 0 first (gain 3), but {1, 2} is better (value 4) under k=2.
  auto o = make_maxcut(graph(5, {{0, 3, 3.0}, {0, 1, -1.0}, {0, 2, -1.0},
                                 {1, 4, 2.0}, {2, 4, 2.0}}));
  EXPECT_GE(greedy_rev(*o, 2).value, greedy(*o, 2).value);
}

TEST(GreedyLs, IdenticalToGreedyOnModularInstances) {
  // lambda = 0 makes f additive; with distinct positive item scores greedy is
  // optimal and no deletion or swap improves.
  RatingsMatrix r;
  r.ratings = Eigen::MatrixXd::Zero(8, 1);
  for (int i = 0; i < 8; ++i) r.ratings(i, 0) = 1.0 + i;
  auto o = make_movrec(r, 0.0);
  const Solution g = greedy(*o, 3), ls = greedy_ls(*o, 3), opt = brute_force_opt(*o, 3);
  EXPECT_EQ(g.set, (std::vector<Node>{5, 6, 7}));
  EXPECT_EQ(ls.set, g.set);
  EXPECT_EQ(opt.set, g.set);
  EXPECT_EQ(opt.value, g.value);
}

TEST(GreedyLs, StrictlyImprovesOnSomeInstances) {
  int improved = 0;
  for (Application app : kAllApplications) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Case c = random_case(app, 12, seed);
      if (greedy_ls(*c.oracle, 5).value > greedy(*c.oracle, 5).value + 1e-9) ++improved;
    }
  }
  std::cout << "greedy_ls > greedy on " << improved << "/80 instances\n";
  EXPECT_GT(improved, 0);
}

TEST(GreedyLs, RatioToOptimumOnMaxCov) {
  double greedy_ratio = 0.0, ls_ratio = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Case c;
    c.app = Application::MaxCov;
    c.graph = std::make_shared<const Graph>(gen_er(12, 0.3, WeightScheme::Unit, seed, true));
    c.oracle = make_maxcov(c.graph, 6.0);
    const double opt = exhaustive_optimum(c, 5);
    ASSERT_GT(opt, 0.0);
    const Solution g = greedy(*c.oracle, 5), ls = greedy_ls(*c.oracle, 5);
    expect_valid(ls, c, 5);
    greedy_ratio += g.value / opt / 20.0;
    ls_ratio += ls.value / opt / 20.0;
  }
  std::cout << "maxcov ER(12,0.3) k=5: mean greedy/opt " << greedy_ratio
            << ", mean greedy_ls/opt " << ls_ratio << '\n';
  EXPECT_GE(ls_ratio, greedy_ratio);
  EXPECT_LE(ls_ratio, 1.0 + 1e-12);
}

TEST(GreedyLs, EpsilonOptionOnlyRaisesTheBar) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Case c = random_case(Application::MaxCov, 20, seed);
    const Solution loose = greedy_ls(*c.oracle, 6, {.epsilon = 0.0});
    const Solution strict = greedy_ls(*c.oracle, 6, {.epsilon = 1e6});
    expect_valid(strict, c, 6);
    EXPECT_GE(strict.value, greedy(*c.oracle, 6).value - 1e-9);
    EXPECT_LE(strict.queries, loose.queries);
  }
}

class Dominance : public ::testing::TestWithParam<Application> {};

TEST_P(Dominance, OrderingAgainstGreedyAndOptimum) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    Case c = random_case(GetParam(), 12, seed);
    const std::size_t k = 1 + seed % 6;
    const Solution g = greedy(*c.oracle, k);
    const Solution rev = greedy_rev(*c.oracle, k);
    const Solution ls = greedy_ls(*c.oracle, k);
    const Solution rls = reversible_local_search(*c.oracle, k, 1.0, 0.1);
    const Solution opt = brute_force_opt(*c.oracle, k);
    for (const Solution* s : {&g, &rev, &ls, &rls, &opt}) {
      expect_valid(*s, c, k);
      EXPECT_LE(s->value, opt.value + rel_tol(opt.value));
    }
    EXPECT_NEAR(opt.value, exhaustive_optimum(c, k), rel_tol(opt.value));
    EXPECT_GE(rev.value, g.value - rel_tol(g.value));
    EXPECT_GE(ls.value, g.value - rel_tol(g.value));
  }
}

TEST_P(Dominance, Deterministic) {
  Case c = random_case(GetParam(), 30, 9);
  for (auto run : {+[](const Oracle& o) { return greedy(o, 8); },
                   +[](const Oracle& o) { return greedy_rev(o, 8); },
                   +[](const Oracle& o) { return greedy_ls(o, 8); },
                   +[](const Oracle& o) { return reversible_local_search(o, 8, 1.0, 0.1); }}) {
    const Solution a = run(*c.oracle), b = run(*c.oracle);
    EXPECT_EQ(a.set, b.set);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.queries, b.queries);
  }
}

INSTANTIATE_TEST_SUITE_P(Search, Dominance, ::testing::ValuesIn(kAllApplications),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(ReversibleLocalSearch, GainOnlyScoringPicksBestFlip) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Case c = random_case(Application::MaxCut, 20, seed);
    std::vector<RlsStep> trace;
    reversible_local_search(*c.oracle, 5, 1.0, 0.0, Deadline::never(), &trace);
    ASSERT_EQ(trace.size(), 10u);
    for (const RlsStep& s : trace) {
      for (double g : s.gains) ASSERT_LE(g, s.gains[s.chosen]);
    }
  }
}

TEST(ReversibleLocalSearch, AgeOnlyScoringStartsAtElementZero) {
  Case c = random_case(Application::MaxCov, 15, 3);
  std::vector<RlsStep> trace;
  reversible_local_search(*c.oracle, 4, 0.0, 1.0, Deadline::never(), &trace);
  EXPECT_EQ(trace.front().chosen, 0u);
  // Ages reset on the chosen element, so the next pick is the next-oldest id.
  EXPECT_EQ(trace[1].chosen, 1u);
}

TEST(ReversibleLocalSearch, TraceReplay) {
  for (Application app : kAllApplications) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Case c = random_case(app, 16, seed);
      const std::size_t k = 2 + seed % 5;
      std::vector<RlsStep> trace;
      const Solution s = reversible_local_search(*c.oracle, k, 1.0, 0.3, Deadline::never(), &trace);
      expect_valid(s, c, k);
      ASSERT_EQ(trace.size(), 2 * k);
      EXPECT_EQ(s.queries, 2 * k * 16);
      // Replay the flips on a fresh copy and check each recorded quantity.
      auto o = c.oracle->clone();
      o->reset();
      std::vector<double> ages(16, 0.0);
      double best = 0.0;
      for (const RlsStep& st : trace) {
        for (Node e = 0; e < 16; ++e) {
          ages[e] += 1.0;
          ASSERT_NEAR(st.gains[e], o->gain(e), 1e-9);
          ASSERT_EQ(st.ages[e], ages[e]);
          ASSERT_NEAR(st.scores[e], st.gains[e] + 0.3 * ages[e], 1e-12);
          ASSERT_LE(st.scores[e], st.scores[st.chosen]);
          if (st.scores[e] == st.scores[st.chosen]) {
            ASSERT_GE(e, st.chosen);
          }
        }
        ASSERT_EQ(st.size_before, o->current_size());
        const bool expect_flip = st.gains[st.chosen] > 0.0 || o->current_size() <= k;
        ASSERT_EQ(st.flipped, expect_flip);
        if (st.flipped) {
          o->apply_flip(st.chosen);
          ages[st.chosen] = 0.0;
          if (o->current_size() <= k) best = std::max(best, o->current_value());
        } else {
          ASSERT_TRUE(o->contains(st.removed));
          for (Node e = 0; e < 16; ++e) {
            if (o->contains(e)) {
              ASSERT_LE(st.scores[e], st.scores[st.removed]);
            }
          }
          o->apply_flip(st.removed);
        }
      }
      EXPECT_NEAR(s.value, best, rel_tol(best));
    }
  }
}

TEST(ReversibleLocalSearch, BeatsGreedyOnMostSmallMaxCutInstances) {
  int at_least = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto o = make_maxcut(std::make_shared<const Graph>(
        gen_er(12, 0.3, WeightScheme::SignedUnit, seed)));
    if (reversible_local_search(*o, 4, 1.0, 0.1).value >= greedy(*o, 4).value) ++at_least;
  }
  std::cout << "rls(1,0.1) >= greedy on " << at_least << "/50 ER(12,0.3) MaxCut seeds\n";
  EXPECT_GE(at_least, 40);
}

TEST(ReversibleLocalSearch, RejectsZeroBudget) {
  Case c = random_case(Application::MaxCut, 5, 1);
  EXPECT_THROW(reversible_local_search(*c.oracle, 0, 1.0, 0.1), ValidationError);
}

TEST(BruteForce, RejectsLargeGroundSets) {
  Case c = random_case(Application::MaxCut, 25, 1);
  EXPECT_THROW(brute_force_opt(*c.oracle, 3), ValidationError);
}

TEST(Deadlines, ExpiredDeadlineFlagsTimeout) {
  Case c = random_case(Application::MaxCov, 40, 2);
  const Deadline past = Deadline::after(0.0);
  for (const Solution& s : {greedy(*c.oracle, 10, past), greedy_rev(*c.oracle, 10, past),
                            greedy_ls(*c.oracle, 10, {}, past),
                            reversible_local_search(*c.oracle, 10, 1.0, 0.1, past)}) {
    EXPECT_TRUE(s.timed_out);
    expect_valid(s, c, 10);
  }
  EXPECT_FALSE(greedy(*c.oracle, 10, Deadline::after(3600.0)).timed_out);
}

}  // namespace
}  // namespace rels
