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

// Random problem instances paired with their reference evaluators.

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <vector>

#include "reference.hpp"
#include "rels/graph.hpp"
#include "rels/objectives.hpp"
#include "rels/qnet.hpp"
#include "rels/rng.hpp"

namespace rels {

// Readable parameter values in test names and failure messages.
inline void PrintTo(Application app, std::ostream* os) { *os << to_string(app); }

}  // namespace rels

namespace rels::testing {

struct Case {
  Application app = Application::MaxCut;
  std::shared_ptr<const Graph> graph;
  Eigen::MatrixXd ratings;
  std::vector<double> weights;  // MaxCov node weights
  std::vector<double> a;        // InfExp coefficients
  double q = 6.0;
  double lambda = 5.0;
  std::unique_ptr<Oracle> oracle;

  double reference(const std::vector<Node>& v) const {
    switch (app) {
      case Application::MaxCut: return ref::maxcut(*graph, v);
      case Application::MaxCov: return ref::maxcov(*graph, v, q, weights);
      case Application::MovRec: return ref::movrec(ratings, lambda, v);
      case Application::InfExp: return ref::infexp(*graph, a, v);
    }
    return 0.0;
  }
};

// Varied small instances: weights, densities and constants change with the
// seed.
inline Case random_case(Application app, std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 99));
  Case c;
  c.app = app;
  switch (app) {
    case Application::MaxCut: {
      const auto scheme = rng.bernoulli(0.5) ? WeightScheme::SignedUnit : WeightScheme::UniformReal;
      c.graph = std::make_shared<const Graph>(gen_er(n, rng.uniform(0.1, 0.6), scheme, seed));
      c.oracle = make_maxcut(c.graph);
      break;
    }
    case Application::MaxCov: {
      c.graph = std::make_shared<const Graph>(
          gen_er(n, rng.uniform(0.05, 0.4), WeightScheme::Unit, seed, true));
      c.q = static_cast<double>(rng.index(8));
      if (rng.bernoulli(0.5)) {
        for (std::size_t i = 0; i < n; ++i) c.weights.push_back(rng.uniform(0.1, 3.0));
      }
      c.oracle = make_maxcov(c.graph, c.q, c.weights);
      break;
    }
    case Application::MovRec: {
      const auto users = static_cast<Eigen::Index>(2 + rng.index(10));
      RatingsMatrix r;
      r.ratings = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), users);
      for (Eigen::Index i = 0; i < r.ratings.rows(); ++i) {
        for (Eigen::Index u = 0; u < users; ++u) {
          if (rng.bernoulli(0.4)) r.ratings(i, u) = static_cast<double>(1 + rng.index(5));
        }
      }
      c.lambda = rng.bernoulli(0.5) ? 5.0 : rng.uniform(0.0, 1.0);
      c.ratings = r.ratings;
      c.oracle = make_movrec(r, c.lambda);
      break;
    }
    case Application::InfExp: {
      const std::size_t m = std::min<std::size_t>(4, n - 1);
      c.graph = std::make_shared<const Graph>(gen_ba(n, m, WeightScheme::UniformReal, seed));
      c.a = sample_lomax(n, 2.0, 1.0, derive_seed(seed, 5));
      c.oracle = make_infexp(c.graph, c.a);
      break;
    }
  }
  return c;
}

inline std::vector<Node> random_subset(Rng& rng, std::size_t n, double p = 0.5) {
  std::vector<Node> v;
  for (Node i = 0; i < n; ++i) {
    if (rng.bernoulli(p)) v.push_back(i);
  }
  return v;
}

inline std::vector<Node> flipped(std::vector<Node> v, Node e) {
  const auto it = std::find(v.begin(), v.end(), e);
  if (it == v.end()) {
    v.push_back(e);
  } else {
    v.erase(it);
  }
  std::sort(v.begin(), v.end());
  return v;
}

inline double rel_tol(double value, double scale = 1e-9) {
  return scale * std::max(1.0, std::abs(value));
}

// A random loss configuration whose ReLU inputs all sit at least 1e-4 from
// the kink, so central differences with h = 1e-6 never straddle one.
struct GradCase {
  QParams params;
  std::vector<FeatureMatrix> xs;
  std::vector<std::size_t> actions;
  std::vector<double> targets;

  std::vector<TrainingSample> samples() const {
    std::vector<TrainingSample> out;
    for (std::size_t i = 0; i < xs.size(); ++i) out.push_back({&xs[i], actions[i], targets[i]});
    return out;
  }
};

inline constexpr double kGradStep = 1e-6;
inline constexpr double kGradMargin = 1e-4;

inline GradCase random_grad_case(Rng& rng) {
  for (;;) {
    GradCase c;
    c.params = init_params(2 + rng.index(7), rng.next());
    const std::size_t batch = 1 + rng.index(4);
    for (std::size_t b = 0; b < batch; ++b) {
      FeatureMatrix x(1 + static_cast<Eigen::Index>(rng.index(6)), kFeatureDim);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
      c.xs.push_back(std::move(x));
      c.actions.push_back(rng.index(static_cast<std::size_t>(c.xs.back().rows())));
      c.targets.push_back(rng.uniform(-1.0, 1.0));
    }
    if (ref::preactivation_margin(c.params, c.xs) > kGradMargin) return c;
  }
}

// Largest |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) over every
// parameter coordinate, with the numeric side from the reference loss.
inline double max_gradient_error(GradCase& c) {
  const LossAndGrad lg = loss_and_grad(c.params, c.samples());
  QParams grad = lg.grad;
  auto pb = c.params.blocks();
  auto gb = grad.blocks();
  double worst = 0.0;
  for (std::size_t blk = 0; blk < pb.size(); ++blk) {
    for (Eigen::Index i = 0; i < pb[blk].size(); ++i) {
      const double saved = pb[blk][i];
      pb[blk][i] = saved + kGradStep;
      const double up = ref::loss(c.params, c.xs, c.actions, c.targets);
      pb[blk][i] = saved - kGradStep;
      const double down = ref::loss(c.params, c.xs, c.actions, c.targets);
      pb[blk][i] = saved;
      const double fd = (up - down) / (2.0 * kGradStep);
      const double a = gb[blk][i];
      worst = std::max(worst, std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6}));
    }
  }
  return worst;
}

}  // namespace rels::testing
