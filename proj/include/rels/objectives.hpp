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
#include <cstdint>
#include <fstream>
#include <list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "rels/errors.hpp"
#include "rels/graph.hpp"
#include "rels/rng.hpp"

namespace rels {

enum class Application { MaxCut, MaxCov, MovRec, InfExp };

inline std::string_view to_string(Application a) {
  switch (a) {
    case Application::MaxCut: return "maxcut";
    case Application::MaxCov: return "maxcov";
    case Application::MovRec: return "movrec";
    case Application::InfExp: return "infexp";
  }
  return "?";
}

inline Application parse_application(std::string_view s) {
  if (s == "maxcut") return Application::MaxCut;
  if (s == "maxcov") return Application::MaxCov;
  if (s == "movrec") return Application::MovRec;
  if (s == "infexp") return Application::InfExp;
  throw ValidationError("unknown application '" + std::string(s) +
                        "' (expected maxcut|maxcov|movrec|infexp)");
}

inline constexpr Application kAllApplications[] = {
    Application::MaxCut, Application::MaxCov, Application::MovRec,
    Application::InfExp};

// Membership bit per ground-set element.
using Mask = std::vector<std::uint8_t>;

// Objective f: 2^N -> R with two query styles:
//
//  * pure queries on an explicit set, value(V) and gain(e, V);
//  * incremental queries against the oracle's own current set, maintained by
//    apply_flip(). gain(e) is the flip-gain: f(V + e) - f(V) when e is not in
//    V, f(V - e) - f(V) otherwise.
//
// Every value/gain call counts as one oracle query. apply_flip is free. An
// Oracle instance is not thread-safe; clone() one per worker. Clones share
// the underlying immutable graph or similarity data.
class Oracle {
 public:
  explicit Oracle(std::size_t n) : member_(n, 0) {}
  virtual ~Oracle() = default;

  virtual std::unique_ptr<Oracle> clone() const = 0;
  virtual Application application() const noexcept = 0;

  std::size_t size() const noexcept { return member_.size(); }

  double value(std::span<const Node> set) const {
    ++queries_;
    return evaluate(mask_of(set));
  }

  double gain(Node e, std::span<const Node> set) const {
    check(e);
    ++queries_;
    return flip_gain(e, mask_of(set));
  }

  double gain(Node e) const {
    check(e);
    ++queries_;
    return cached_gain(e);
  }

  void apply_flip(Node e) {
    check(e);
    const double g = cached_gain(e);
    const bool adding = member_[e] == 0;
    update_caches(e, adding);
    member_[e] = adding ? 1 : 0;
    count_ = adding ? count_ + 1 : count_ - 1;
    value_ += g;
  }

  // Current set becomes the empty set.
  void reset() {
    std::fill(member_.begin(), member_.end(), 0);
    count_ = 0;
    reset_caches();
    value_ = evaluate(member_);
  }

  void assign(std::span<const Node> set) {
    reset();
    for (Node e : set) {
      check(e);
      if (member_[e] == 0) apply_flip(e);
    }
    value_ = evaluate(member_);
  }

  double current_value() const noexcept { return value_; }
  bool contains(Node e) const { return member_[e] != 0; }
  std::size_t current_size() const noexcept { return count_; }
  const Mask& membership() const noexcept { return member_; }

  std::vector<Node> current_set() const {
    std::vector<Node> out;
    out.reserve(count_);
    for (Node i = 0; i < member_.size(); ++i) {
      if (member_[i]) out.push_back(i);
    }
    return out;
  }

  // Relative disagreement between the incremental caches (including the
  // running value) and a from-scratch recomputation. Not counted as queries.
  double cache_error() const {
    const double exact = evaluate(member_);
    const double rel = std::abs(value_ - exact) / std::max(1.0, std::abs(exact));
    return std::max(rel, cache_discrepancy());
  }

  // Exact value of the current set, not counted.
  double exact_current_value() const { return evaluate(member_); }

  std::uint64_t queries() const noexcept { return queries_; }
  void reset_queries() noexcept { queries_ = 0; }

 protected:
  Oracle(const Oracle&) = default;
  Oracle& operator=(const Oracle&) = default;

  virtual double evaluate(const Mask& in) const = 0;
  // Flip-gain of e for the set described by `in`, without using caches.
  virtual double flip_gain(Node e, const Mask& in) const = 0;
  virtual double cached_gain(Node e) const { return flip_gain(e, member_); }
  // Called before member_[e] changes.
  virtual void update_caches(Node /*e*/, bool /*adding*/) {}
  virtual void reset_caches() {}
  virtual double cache_discrepancy() const { return 0.0; }

  void check(Node e) const {
    if (e >= member_.size()) {
      throw std::out_of_range("element " + std::to_string(e) +
                              " outside ground set of size " +
                              std::to_string(member_.size()));
    }
  }

  Mask mask_of(std::span<const Node> set) const {
    Mask m(member_.size(), 0);
    for (Node e : set) {
      check(e);
      m[e] = 1;
    }
    return m;
  }

  Mask member_;
  std::size_t count_ = 0;
  double value_ = 0.0;
  mutable std::uint64_t queries_ = 0;
};

// f(V) = sum of w(u, v) over u in V, v not in V.
class MaxCutOracle final : public Oracle {
 public:
  explicit MaxCutOracle(std::shared_ptr<const Graph> g)
      : Oracle(g->size()), g_(std::move(g)) {
    if (g_->directed()) throw ValidationError("maxcut: graph must be undirected");
  }

  std::unique_ptr<Oracle> clone() const override {
    return std::unique_ptr<Oracle>(new MaxCutOracle(*this));
  }
  Application application() const noexcept override { return Application::MaxCut; }
  const Graph& graph() const noexcept { return *g_; }

 protected:
  double evaluate(const Mask& in) const override {
    double total = 0.0;
    for (const Edge& e : g_->edges()) {
      if (in[e.u] != in[e.v]) total += e.w;
    }
    return total;
  }

  double flip_gain(Node e, const Mask& in) const override {
    double inside = 0.0, outside = 0.0;
    for (const Neighbor& nb : g_->neighbors(e)) {
      (in[nb.node] ? inside : outside) += nb.w;
    }
    return in[e] ? inside - outside : outside - inside;
  }

 private:
  MaxCutOracle(const MaxCutOracle&) = default;
  std::shared_ptr<const Graph> g_;
};

// Weighted directed vertex cover with costs:
//   f(V) = sum_{u in V or pointed to by V} w_u - sum_{u in V} c_u,
//   c_u = 1 + max(outdeg(u) - q, 0).
class MaxCovOracle final : public Oracle {
 public:
  MaxCovOracle(std::shared_ptr<const Graph> g, double q,
               std::vector<double> node_weights)
      : Oracle(g->size()), g_(std::move(g)), weights_(std::move(node_weights)) {
    if (!g_->directed()) throw ValidationError("maxcov: graph must be directed");
    if (weights_.empty()) weights_.assign(g_->size(), 1.0);
    if (weights_.size() != g_->size()) {
      throw ValidationError("maxcov: node weight count does not match graph");
    }
    costs_.resize(g_->size());
    for (Node u = 0; u < g_->size(); ++u) {
      costs_[u] = node_cost(g_->degree(u), q);
    }
    cover_.assign(g_->size(), 0);
  }

  static double node_cost(std::size_t out_degree, double q) {
    return 1.0 + std::max(static_cast<double>(out_degree) - q, 0.0);
  }

  std::unique_ptr<Oracle> clone() const override {
    return std::unique_ptr<Oracle>(new MaxCovOracle(*this));
  }
  Application application() const noexcept override { return Application::MaxCov; }
  double cost(Node u) const { return costs_[u]; }

 protected:
  double evaluate(const Mask& in) const override {
    const auto cover = cover_counts(in);
    double total = 0.0;
    for (Node u = 0; u < cover.size(); ++u) {
      if (cover[u] > 0) total += weights_[u];
      if (in[u]) total -= costs_[u];
    }
    return total;
  }

  double flip_gain(Node e, const Mask& in) const override {
    return gain_from(e, in[e] != 0, [&](Node u) { return cover_of(u, in); });
  }

  double cached_gain(Node e) const override {
    return gain_from(e, member_[e] != 0, [&](Node u) { return cover_[u]; });
  }

  void update_caches(Node e, bool adding) override {
    const int d = adding ? 1 : -1;
    cover_[e] += d;
    for (const Neighbor& nb : g_->neighbors(e)) cover_[nb.node] += d;
  }

  void reset_caches() override { std::fill(cover_.begin(), cover_.end(), 0); }

  double cache_discrepancy() const override {
    return cover_counts(member_) == cover_ ? 0.0 : 1.0;
  }

 private:
  MaxCovOracle(const MaxCovOracle&) = default;

  // Number of members of V covering u (u itself or an in-neighbor).
  int cover_of(Node u, const Mask& in) const {
    int c = in[u];
    for (const Neighbor& nb : g_->in_neighbors(u)) c += in[nb.node];
    return c;
  }

  std::vector<int> cover_counts(const Mask& in) const {
    std::vector<int> cover(in.size(), 0);
    for (Node u = 0; u < in.size(); ++u) {
      if (!in[u]) continue;
      ++cover[u];
      for (const Neighbor& nb : g_->neighbors(u)) ++cover[nb.node];
    }
    return cover;
  }

  template <typename CoverFn>
  double gain_from(Node e, bool present, CoverFn cover) const {
    // Adding uncovers nothing and covers every target with count 0; removing
    // uncovers every target that e alone covers.
    const int critical = present ? 1 : 0;
    double g = 0.0;
    if (cover(e) == critical) g += weights_[e];
    for (const Neighbor& nb : g_->neighbors(e)) {
      if (cover(nb.node) == critical) g += weights_[nb.node];
    }
    g -= costs_[e];
    return present ? -g : g;
  }

  std::shared_ptr<const Graph> g_;
  std::vector<double> weights_;
  std::vector<double> costs_;
  std::vector<int> cover_;
};

// Item-item similarity for MovRec. Either a dense matrix (precomputed) or a
// ratings matrix whose rows are expanded on demand, s(i, j) = <r_i, r_j>.
struct SimilarityData {
  Eigen::MatrixXd dense;            // used when non-empty
  Eigen::MatrixXd ratings;          // item x user, used otherwise
  Eigen::VectorXd column_sums;      // sum_i s(i, j)
  Eigen::VectorXd diagonal;         // s(j, j)

  std::size_t size() const {
    return static_cast<std::size_t>(dense.size() > 0 ? dense.rows() : ratings.rows());
  }
  bool is_dense() const { return dense.size() > 0; }
};

inline constexpr std::size_t kDenseSimilarityLimit = 4096;

// f(V) = sum_{i in N} sum_{j in V} s(i, j) - lambda sum_{i in V} sum_{j in V} s(i, j).
// s must be symmetric.
class MovRecOracle final : public Oracle {
 public:
  MovRecOracle(std::shared_ptr<const SimilarityData> data, double lambda,
               std::size_t row_cache_rows = 512)
      : Oracle(data->size()), data_(std::move(data)), lambda_(lambda),
        cache_capacity_(std::max<std::size_t>(1, row_cache_rows)) {
    if (!(lambda_ >= 0.0)) throw ValidationError("movrec: lambda must be >= 0");
  }

  std::unique_ptr<Oracle> clone() const override {
    return std::unique_ptr<Oracle>(new MovRecOracle(*this));
  }
  Application application() const noexcept override { return Application::MovRec; }
  double lambda() const noexcept { return lambda_; }
  const SimilarityData& similarity() const noexcept { return *data_; }

  double similarity(Node i, Node j) const {
    if (data_->is_dense()) return data_->dense(i, j);
    return data_->ratings.row(i).dot(data_->ratings.row(j));
  }

 protected:
  double evaluate(const Mask& in) const override {
    double linear = 0.0, quadratic = 0.0;
    for (Node j = 0; j < in.size(); ++j) {
      if (!in[j]) continue;
      linear += data_->column_sums[j];
      quadratic += masked_row_sum(j, in, /*skip=*/j) + data_->diagonal[j];
    }
    return linear - lambda_ * quadratic;
  }

  double flip_gain(Node e, const Mask& in) const override {
    const double pair = 2.0 * masked_row_sum(e, in, /*skip=*/e) + data_->diagonal[e];
    const double add = data_->column_sums[e] - lambda_ * pair;
    return in[e] ? -add : add;
  }

 private:
  MovRecOracle(const MovRecOracle& other)
      : Oracle(other), data_(other.data_), lambda_(other.lambda_),
        cache_capacity_(other.cache_capacity_) {}

  double masked_row_sum(Node e, const Mask& in, Node skip) const {
    const double* row = row_data(e);
    double s = 0.0;
    for (Node j = 0; j < in.size(); ++j) {
      if (in[j] && j != skip) s += row[j];
    }
    return s;
  }

  // Pointer stays valid until the next row_data call.
  const double* row_data(Node e) const {
    if (data_->is_dense()) {
      // Column e equals row e by symmetry and is contiguous in column-major.
      return data_->dense.col(e).data();
    }
    if (auto it = cache_index_.find(e); it != cache_index_.end()) {
      cache_order_.splice(cache_order_.begin(), cache_order_, it->second);
      return it->second->second.data();
    }
    if (cache_order_.size() >= cache_capacity_) {
      cache_index_.erase(cache_order_.back().first);
      cache_order_.pop_back();
    }
    Eigen::VectorXd row = data_->ratings * data_->ratings.row(e).transpose();
    cache_order_.emplace_front(e, std::move(row));
    cache_index_[e] = cache_order_.begin();
    return cache_order_.front().second.data();
  }

  std::shared_ptr<const SimilarityData> data_;
  double lambda_;
  std::size_t cache_capacity_;
  using RowList = std::list<std::pair<Node, Eigen::VectorXd>>;
  mutable RowList cache_order_;
  mutable std::unordered_map<Node, RowList::iterator> cache_index_;
};

// f(V) = sum_{i not in V} a_i sqrt(sum_{j in V} w_ij).
class InfExpOracle final : public Oracle {
 public:
  InfExpOracle(std::shared_ptr<const Graph> g, std::vector<double> a)
      : Oracle(g->size()), g_(std::move(g)), a_(std::move(a)) {
    if (g_->directed()) throw ValidationError("infexp: graph must be undirected");
    for (const Edge& e : g_->edges()) {
      if (e.w < 0.0) throw ValidationError("infexp: negative edge weight");
    }
    if (a_.size() != g_->size()) {
      throw ValidationError("infexp: coefficient count does not match graph");
    }
    for (double x : a_) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw ValidationError("infexp: coefficients must be finite and >= 0");
      }
    }
    reset_caches();
  }

  std::unique_ptr<Oracle> clone() const override {
    return std::unique_ptr<Oracle>(new InfExpOracle(*this));
  }
  Application application() const noexcept override { return Application::InfExp; }
  const std::vector<double>& coefficients() const noexcept { return a_; }

 protected:
  double evaluate(const Mask& in) const override {
    double total = 0.0;
    for (Node i = 0; i < in.size(); ++i) {
      if (!in[i]) total += a_[i] * std::sqrt(incoming(i, in));
    }
    return total;
  }

  double flip_gain(Node e, const Mask& in) const override {
    return gain_from(e, in, [&](Node i) { return incoming(i, in); },
                     [&](Node i) { return incoming_count(i, in); });
  }

  double cached_gain(Node e) const override {
    return gain_from(e, member_, [&](Node i) { return sums_[i]; },
                     [&](Node i) { return counts_[i]; });
  }

  void update_caches(Node e, bool adding) override {
    for (const Neighbor& nb : g_->neighbors(e)) {
      const Node i = nb.node;
      if (adding) {
        ++counts_[i];
        sums_[i] += nb.w;
      } else if (--counts_[i] == 0) {
        sums_[i] = 0.0;  // exact zero, no cancellation residue under the sqrt
      } else {
        sums_[i] = std::max(0.0, sums_[i] - nb.w);
      }
    }
  }

  void reset_caches() override {
    sums_.assign(g_->size(), 0.0);
    counts_.assign(g_->size(), 0);
  }

  double cache_discrepancy() const override {
    double worst = 0.0;
    for (Node i = 0; i < member_.size(); ++i) {
      const double exact = incoming(i, member_);
      worst = std::max(worst, std::abs(sums_[i] - exact) / std::max(1.0, exact));
    }
    return worst;
  }

 private:
  InfExpOracle(const InfExpOracle&) = default;

  double incoming(Node i, const Mask& in) const {
    double s = 0.0;
    for (const Neighbor& nb : g_->neighbors(i)) {
      if (in[nb.node]) s += nb.w;
    }
    return s;
  }

  int incoming_count(Node i, const Mask& in) const {
    int c = 0;
    for (const Neighbor& nb : g_->neighbors(i)) c += in[nb.node] ? 1 : 0;
    return c;
  }

  // Removing the last member neighbour of i leaves an exact zero sum.
  template <typename SumFn, typename CountFn>
  double gain_from(Node e, const Mask& in, SumFn sum, CountFn count) const {
    const bool present = in[e] != 0;
    double g = present ? a_[e] * std::sqrt(sum(e)) : -a_[e] * std::sqrt(sum(e));
    for (const Neighbor& nb : g_->neighbors(e)) {
      const Node i = nb.node;
      if (in[i]) continue;
      const double before = sum(i);
      const double after = present ? (count(i) == 1 ? 0.0 : std::max(0.0, before - nb.w))
                                   : before + nb.w;
      g += a_[i] * (std::sqrt(after) - std::sqrt(before));
    }
    return g;
  }

  std::shared_ptr<const Graph> g_;
  std::vector<double> a_;
  std::vector<double> sums_;
  std::vector<int> counts_;
};

// Lomax (Pareto type II) draws by inverse CDF: scale * (u^(-1/shape) - 1).
inline std::vector<double> sample_lomax(std::size_t n, double shape,
                                        double scale, std::uint64_t seed) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw ValidationError("lomax: shape and scale must be positive");
  }
  Rng rng(seed);
  std::vector<double> a(n);
  for (double& x : a) x = scale * (std::pow(rng.uniform_open(), -1.0 / shape) - 1.0);
  return a;
}

inline std::unique_ptr<Oracle> make_maxcut(std::shared_ptr<const Graph> g) {
  return std::make_unique<MaxCutOracle>(std::move(g));
}

inline std::unique_ptr<Oracle> make_maxcov(std::shared_ptr<const Graph> g,
                                           double q = 6.0,
                                           std::vector<double> node_weights = {}) {
  return std::make_unique<MaxCovOracle>(std::move(g), q, std::move(node_weights));
}

// s(i, j) = <r_i, r_j>. Dense when n_items <= dense_limit, otherwise rows are
// computed on demand behind an LRU cache.
inline std::unique_ptr<Oracle> make_movrec(const RatingsMatrix& r, double lambda = 5.0,
                                           std::size_t dense_limit = kDenseSimilarityLimit) {
  if (r.n_items() == 0 || r.n_users() == 0) {
    throw ValidationError("movrec: empty ratings matrix");
  }
  if (!r.ratings.allFinite()) throw ValidationError("movrec: non-finite rating");
  auto data = std::make_shared<SimilarityData>();
  const Eigen::VectorXd user_totals = r.ratings.colwise().sum().transpose();
  data->column_sums = r.ratings * user_totals;
  data->diagonal = r.ratings.rowwise().squaredNorm();
  if (r.n_items() <= dense_limit) {
    data->dense = r.ratings * r.ratings.transpose();
  } else {
    data->ratings = r.ratings;
  }
  return std::make_unique<MovRecOracle>(std::move(data), lambda);
}

// Graph-backed MovRec: s(i, j) = w_ij, s(i, i) = 0.
inline std::unique_ptr<Oracle> make_movrec(const Graph& g, double lambda = 5.0) {
  if (g.directed()) throw ValidationError("movrec: similarity graph must be undirected");
  if (g.size() > kDenseSimilarityLimit) {
    throw ValidationError("movrec: graph similarity limited to " +
                          std::to_string(kDenseSimilarityLimit) + " nodes");
  }
  auto data = std::make_shared<SimilarityData>();
  const auto n = static_cast<Eigen::Index>(g.size());
  data->dense = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : g.edges()) {
    data->dense(e.u, e.v) = e.w;
    data->dense(e.v, e.u) = e.w;
  }
  data->column_sums = data->dense.colwise().sum().transpose();
  data->diagonal = Eigen::VectorXd::Zero(n);
  return std::make_unique<MovRecOracle>(std::move(data), lambda);
}

inline std::unique_ptr<Oracle> make_infexp(std::shared_ptr<const Graph> g,
                                           std::vector<double> a) {
  return std::make_unique<InfExpOracle>(std::move(g), std::move(a));
}

inline std::unique_ptr<Oracle> make_infexp(std::shared_ptr<const Graph> g,
                                           double shape, double scale,
                                           std::uint64_t seed) {
  auto a = sample_lomax(g->size(), shape, scale, seed);
  return make_infexp(std::move(g), std::move(a));
}

// Optional MaxCov node weights: "node w_u" lines; unlisted nodes keep 1.0.
inline std::vector<double> load_node_weights(const std::string& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open node weight file '" + path + "'");
  std::vector<double> w(n, 1.0);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = detail::split(body, " \t,");
    std::uint64_t node = 0;
    double weight = 0.0;
    if (fields.size() != 2 || !detail::parse_number(fields[0], node) ||
        !detail::parse_number(fields[1], weight)) {
      throw ParseError("node weights: expected 'node w_u'", line_no);
    }
    if (node >= n) throw ParseError("node weights: node id out of range", line_no);
    w[node] = weight;
  }
  return w;
}

}  // namespace rels
