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

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rels/errors.hpp"
#include "rels/graph.hpp"
#include "rels/objectives.hpp"

namespace rels {

inline constexpr int kFeatureDim = 5;

// Row e: (in V, flip gain / sigma, age / episode_len, permissible, gap / sigma).
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, kFeatureDim>;

namespace feature {
inline constexpr int kIncumbent = 0;
inline constexpr int kGain = 1;
inline constexpr int kAge = 2;
inline constexpr int kPermissible = 3;
inline constexpr int kGap = 4;
}  // namespace feature

struct StepResult {
  double reward = 0.0;
  bool done = false;
};

struct TraceRow {
  std::size_t t = 0;
  Node action = 0;
  double reward = 0.0;
  double f_cur = 0.0;
  double f_best = 0.0;
  std::size_t size = 0;
};

// Cardinality-constrained flip environment over one oracle instance.
//
// Episodes start from the empty set and last episode_len steps (2k by
// default). Every step flips one element; infeasible additions are allowed
// but earn no reward. The best set with |V| <= k seen so far is tracked.
class Environment {
 public:
  Environment(const Oracle& proto, std::size_t k, std::size_t episode_len = 0)
      : oracle_(proto.clone()), k_(k), episode_len_(episode_len ? episode_len : 2 * k) {
    const std::size_t n = oracle_->size();
    if (k_ < 1 || k_ > n) {
      throw ValidationError("environment: k=" + std::to_string(k_) +
                            " outside [1, " + std::to_string(n) + "]");
    }
    reset();
  }

  Environment(const Environment& other)
      : oracle_(other.oracle_->clone()), k_(other.k_), episode_len_(other.episode_len_),
        gains_(other.gains_), ages_(other.ages_), f_best_(other.f_best_),
        best_set_(other.best_set_), t_(other.t_), sigma_(other.sigma_) {}
  Environment(Environment&&) noexcept = default;

  void reset() {
    oracle_->reset();
    const std::size_t n = oracle_->size();
    ages_.assign(n, 0.0);
    gains_.resize(n);
    refresh_gains();
    double largest = 0.0;
    for (double g : gains_) largest = std::max(largest, std::abs(g));
    sigma_ = std::max(1.0, largest);
    f_best_ = oracle_->current_value();
    best_set_.clear();
    t_ = 0;
  }

  FeatureMatrix features() const {
    const std::size_t n = oracle_->size();
    FeatureMatrix x(static_cast<Eigen::Index>(n), kFeatureDim);
    const bool feasible = oracle_->current_size() <= k_;
    const double gap = (f_best_ - oracle_->current_value()) / sigma_;
    const double horizon = static_cast<double>(episode_len_);
    for (Node e = 0; e < n; ++e) {
      const double in = oracle_->contains(e) ? 1.0 : 0.0;
      x(e, feature::kIncumbent) = in;
      x(e, feature::kGain) = gains_[e] / sigma_;
      x(e, feature::kAge) = ages_[e] / horizon;
      x(e, feature::kPermissible) = feasible ? 1.0 : in;
      x(e, feature::kGap) = gap;
    }
    return x;
  }

  StepResult step(Node a) {
    if (done()) throw std::logic_error("environment: episode already finished");
    if (a >= oracle_->size()) {
      throw std::out_of_range("environment: action " + std::to_string(a) +
                              " outside ground set");
    }
    const std::size_t before = oracle_->current_size();
    const bool adding = !oracle_->contains(a);
    oracle_->apply_flip(a);
    refresh_gains();

    const double n = static_cast<double>(oracle_->size());
    const double f = oracle_->current_value();
    const double improvement = std::max(f - f_best_, 0.0);
    StepResult out;
    if (adding && before >= k_) {
      const double slack = static_cast<double>(k_) -
                           static_cast<double>(oracle_->current_size());
      out.reward = std::max(improvement * slack / n, 0.0);
    } else {
      out.reward = std::max(improvement / n, 0.0);
    }
    if (oracle_->current_size() <= k_ && f > f_best_) {
      f_best_ = f;
      best_set_ = oracle_->current_set();
    }
    for (double& age : ages_) age += 1.0;
    ages_[a] = 0.0;
    ++t_;
    out.done = done();
    return out;
  }

  // Best feasible set seen this episode and its value.
  std::pair<std::vector<Node>, double> best() const { return {best_set_, f_best_}; }

  std::size_t size() const noexcept { return oracle_->size(); }
  std::size_t k() const noexcept { return k_; }
  std::size_t t() const noexcept { return t_; }
  std::size_t episode_len() const noexcept { return episode_len_; }
  bool done() const noexcept { return t_ >= episode_len_; }
  double sigma() const noexcept { return sigma_; }
  double f_current() const noexcept { return oracle_->current_value(); }
  double f_best() const noexcept { return f_best_; }
  std::size_t solution_size() const noexcept { return oracle_->current_size(); }
  bool contains(Node e) const { return oracle_->contains(e); }
  const std::vector<double>& gains() const noexcept { return gains_; }
  const std::vector<double>& ages() const noexcept { return ages_; }
  const Oracle& oracle() const noexcept { return *oracle_; }

 private:
  // Flip gains are re-queried for the whole ground set after every action.
  void refresh_gains() {
    for (Node e = 0; e < gains_.size(); ++e) gains_[e] = oracle_->gain(e);
  }

  std::unique_ptr<Oracle> oracle_;
  std::size_t k_;
  std::size_t episode_len_;
  std::vector<double> gains_;
  std::vector<double> ages_;
  double f_best_ = 0.0;
  std::vector<Node> best_set_;
  std::size_t t_ = 0;
  double sigma_ = 1.0;
};

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "t,action,reward,f_cur,f_best,size\n";
  for (const auto& r : rows) {
    out << r.t << ',' << r.action << ',' << detail::format_double(r.reward) << ','
        << detail::format_double(r.f_cur) << ',' << detail::format_double(r.f_best)
        << ',' << r.size << '\n';
  }
}

}  // namespace rels
