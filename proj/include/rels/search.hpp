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
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "rels/errors.hpp"
#include "rels/objectives.hpp"

namespace rels {

class Deadline {
 public:
  using Clock = std::chrono::steady_clock;

  Deadline() = default;
  static Deadline never() { return {}; }
  static Deadline after(double seconds) {
    Deadline d;
    if (std::isfinite(seconds)) {
      d.at_ = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                 std::chrono::duration<double>(seconds));
    }
    return d;
  }
  bool expired() const { return at_ && Clock::now() >= *at_; }

 private:
  std::optional<Clock::time_point> at_;
};

struct Solution {
  std::vector<Node> set;  // sorted
  double value = 0.0;     // recomputed from scratch
  std::uint64_t queries = 0;
  double wall_time = 0.0;  // seconds
  bool timed_out = false;
};

// Smallest gain accepted as a strict improvement by the local-search methods.
// Guards against cycling on rounding noise; far below any real objective step.
inline double improvement_floor(double f) { return 1e-12 * std::max(1.0, std::abs(f)); }

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

struct Candidate {
  Node node = 0;
  double gain = -std::numeric_limits<double>::infinity();
  bool found = false;
};

// Best flip among elements accepted by `filter`; ties go to the lowest id.
template <typename Filter>
Candidate best_flip(const Oracle& o, Filter filter) {
  Candidate best;
  for (Node e = 0; e < o.size(); ++e) {
    if (!filter(e)) continue;
    const double g = o.gain(e);
    if (!best.found || g > best.gain) best = {e, g, true};
  }
  return best;
}

inline Candidate best_addition(const Oracle& o) {
  return best_flip(o, [&](Node e) { return !o.contains(e); });
}

inline Candidate best_removal(const Oracle& o) {
  return best_flip(o, [&](Node e) { return o.contains(e); });
}

inline Solution finish(const Oracle& proto, std::vector<Node> set,
                       std::uint64_t queries, const Stopwatch& watch,
                       bool timed_out) {
  Solution s;
  s.wall_time = watch.seconds();
  std::sort(set.begin(), set.end());
  s.value = proto.clone()->value(set);
  s.set = std::move(set);
  s.queries = queries;
  s.timed_out = timed_out;
  return s;
}

inline std::unique_ptr<Oracle> fresh(const Oracle& proto) {
  auto o = proto.clone();
  o->reset();
  o->reset_queries();
  return o;
}

// Greedy additions on `o` until k elements or no positive gain.
inline bool run_greedy(Oracle& o, std::size_t k, const Deadline& deadline) {
  while (o.current_size() < k) {
    if (deadline.expired()) return false;
    const Candidate c = best_addition(o);
    if (!c.found || c.gain <= 0.0) break;
    o.apply_flip(c.node);
  }
  return true;
}

}  // namespace detail

// Standard greedy: add the best element while its gain is positive.
inline Solution greedy(const Oracle& proto, std::size_t k,
                       const Deadline& deadline = Deadline::never()) {
  const detail::Stopwatch watch;
  auto o = detail::fresh(proto);
  const bool ok = detail::run_greedy(*o, k, deadline);
  return detail::finish(proto, o->current_set(), o->queries(), watch, !ok);
}

// Greedy, then best-improvement flips (removals always, additions only below
// k) until no flip improves f.
inline Solution greedy_rev(const Oracle& proto, std::size_t k,
                           const Deadline& deadline = Deadline::never()) {
  const detail::Stopwatch watch;
  auto o = detail::fresh(proto);
  bool ok = detail::run_greedy(*o, k, deadline);
  while (ok) {
    if (deadline.expired()) {
      ok = false;
      break;
    }
    const bool room = o->current_size() < k;
    const auto c = detail::best_flip(
        *o, [&](Node e) { return o->contains(e) || room; });
    if (!c.found || c.gain <= improvement_floor(o->current_value())) break;
    o->apply_flip(c.node);
  }
  return detail::finish(proto, o->current_set(), o->queries(), watch, !ok);
}

struct GreedyLsOptions {
  // Moves must improve f by more than epsilon / n^4 * |f| (Lee et al. style
  // approximate local search). 0 accepts any strict improvement.
  double epsilon = 0.0;
};

namespace detail {

// Improving deletions and swaps until neither exists. Returns false when the
// deadline hit, and sets `moved` when any move was applied.
inline bool local_moves(Oracle& o, double epsilon, const Deadline& deadline,
                        bool& moved) {
  const double n4 = std::pow(static_cast<double>(o.size()), 4.0);
  const auto threshold = [&] {
    const double f = o.current_value();
    return std::max(improvement_floor(f), epsilon / n4 * std::abs(f));
  };
  while (true) {
    if (deadline.expired()) return false;
    const Candidate del = best_removal(o);
    if (del.found && del.gain > threshold()) {
      o.apply_flip(del.node);
      moved = true;
      continue;
    }
    Node out = 0, in = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (Node u : o.current_set()) {
      if (deadline.expired()) return false;
      const double gu = o.gain(u);
      o.apply_flip(u);
      for (Node v = 0; v < o.size(); ++v) {
        if (v == u || o.contains(v)) continue;
        const double total = gu + o.gain(v);
        if (total > best) {
          best = total;
          out = u;
          in = v;
        }
      }
      o.apply_flip(u);
    }
    if (best > threshold()) {
      o.apply_flip(out);
      o.apply_flip(in);
      moved = true;
      continue;
    }
    return true;
  }
}

}  // namespace detail

// Greedy interleaved with local search: after every addition, apply improving
// deletions and swaps until none is left.
inline Solution greedy_ls(const Oracle& proto, std::size_t k,
                          const GreedyLsOptions& options = {},
                          const Deadline& deadline = Deadline::never()) {
  const detail::Stopwatch watch;
  auto o = detail::fresh(proto);
  // The state is locally optimal under deletions and swaps at the start and
  // after every round, so the search ends as soon as no addition improves.
  bool ok = true;
  while (ok && o->current_size() < k) {
    if (deadline.expired()) {
      ok = false;
      break;
    }
    const auto add = detail::best_addition(*o);
    if (!add.found || add.gain <= 0.0) break;
    o->apply_flip(add.node);
    bool moved = false;
    ok = detail::local_moves(*o, options.epsilon, deadline, moved);
  }
  return detail::finish(proto, o->current_set(), o->queries(), watch, !ok);
}

// One iteration of the reversible local search, for trace assertions.
struct RlsStep {
  std::size_t t = 0;             // 1-based iteration
  std::vector<double> gains;     // flip gains at the start of the iteration
  std::vector<double> ages;      // after the increment
  std::vector<double> scores;    // lambda_gain * gain + lambda_age * age
  std::size_t size_before = 0;
  Node chosen = 0;               // argmax score over the ground set
  bool flipped = false;          // main branch taken
  Node removed = 0;              // element dropped by the fallback branch
};

// Reversible local search with gain/age scoring over 2k iterations.
// Flips the best-scored element while it improves f or |V| <= k, otherwise
// removes the best-scored member. Returns the best set seen with |V| <= k.
inline Solution reversible_local_search(const Oracle& proto, std::size_t k,
                                        double lambda_gain, double lambda_age,
                                        const Deadline& deadline = Deadline::never(),
                                        std::vector<RlsStep>* trace = nullptr) {
  if (k < 1) throw ValidationError("reversible_local_search: k must be >= 1");
  const detail::Stopwatch watch;
  auto o = detail::fresh(proto);
  const std::size_t n = o->size();
  std::vector<double> ages(n, 0.0), gains(n), scores(n);
  std::vector<Node> best_set;
  double best_value = o->current_value();
  bool timed_out = false;

  const auto argmax = [&](auto filter) {
    std::optional<Node> arg;
    for (Node e = 0; e < n; ++e) {
      if (filter(e) && (!arg || scores[e] > scores[*arg])) arg = e;
    }
    return arg;
  };

  for (std::size_t t = 1; t <= 2 * k; ++t) {
    if (deadline.expired()) {
      timed_out = true;
      break;
    }
    for (Node e = 0; e < n; ++e) {
      ages[e] += 1.0;
      gains[e] = o->gain(e);
      scores[e] = lambda_gain * gains[e] + lambda_age * ages[e];
    }
    RlsStep step;
    if (trace) {
      step.t = t;
      step.gains = gains;
      step.ages = ages;
      step.scores = scores;
      step.size_before = o->current_size();
    }
    const Node x = *argmax([](Node) { return true; });
    step.chosen = x;
    if (gains[x] > 0.0 || o->current_size() <= k) {
      o->apply_flip(x);
      ages[x] = 0.0;
      step.flipped = true;
      if (o->current_size() <= k && o->current_value() > best_value) {
        best_value = o->current_value();
        best_set = o->current_set();
      }
    } else {
      // |V| > k here, so V is nonempty.
      const Node r = *argmax([&](Node e) { return o->contains(e); });
      o->apply_flip(r);
      step.removed = r;
    }
    if (trace) trace->push_back(std::move(step));
  }
  return detail::finish(proto, std::move(best_set), o->queries(), watch, timed_out);
}

inline constexpr std::size_t kBruteForceMaxN = 24;

// Exact optimum over all subsets with |V| <= k, visited in Gray-code order.
inline Solution brute_force_opt(const Oracle& proto, std::size_t k,
                                const Deadline& deadline = Deadline::never()) {
  const std::size_t n = proto.size();
  if (n > kBruteForceMaxN) {
    throw ValidationError("brute_force_opt: ground set of " + std::to_string(n) +
                          " exceeds " + std::to_string(kBruteForceMaxN));
  }
  const detail::Stopwatch watch;
  auto o = detail::fresh(proto);
  std::uint64_t best_code = 0;
  double best_value = o->value(std::span<const Node>{});
  bool timed_out = false;
  std::uint64_t code = 0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t i = 1; i < total; ++i) {
    if ((i & 0xffff) == 0 && deadline.expired()) {
      timed_out = true;
      break;
    }
    const Node bit = static_cast<Node>(std::countr_zero(i));
    o->gain(bit);
    o->apply_flip(bit);
    code ^= std::uint64_t{1} << bit;
    if (o->current_size() <= k && o->current_value() > best_value) {
      best_value = o->current_value();
      best_code = code;
    }
  }
  std::vector<Node> set;
  for (Node e = 0; e < n; ++e) {
    if ((best_code >> e) & 1U) set.push_back(e);
  }
  return detail::finish(proto, std::move(set), o->queries(), watch, timed_out);
}

}  // namespace rels
