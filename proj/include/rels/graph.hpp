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
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "rels/errors.hpp"
#include "rels/rng.hpp"

namespace rels {

using Node = std::uint32_t;

struct Edge {
  Node u = 0;
  Node v = 0;
  double w = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  Node node = 0;
  double w = 0.0;
};

// Weighted graph over the ground set {0, ..., n-1}. Immutable once built.
//
// Undirected graphs store every edge once in `edges()` and list it in the
// adjacency of both endpoints. Directed graphs keep out- and in-adjacency.
class Graph {
 public:
  Graph() = default;

  Graph(std::size_t n, bool directed, std::vector<Edge> edges)
      : n_(n), directed_(directed), edges_(std::move(edges)) {
    if (n_ > std::numeric_limits<Node>::max()) {
      throw ValidationError("graph: node count exceeds id range");
    }
    std::vector<std::uint64_t> keys;
    keys.reserve(edges_.size());
    for (const Edge& e : edges_) {
      if (e.u >= n_ || e.v >= n_) {
        throw ValidationError("graph: edge (" + std::to_string(e.u) + "," +
                              std::to_string(e.v) + ") out of range for n=" +
                              std::to_string(n_));
      }
      if (e.u == e.v) {
        throw ValidationError("graph: self-loop at node " + std::to_string(e.u));
      }
      if (!std::isfinite(e.w)) {
        throw ValidationError("graph: non-finite edge weight");
      }
      Node a = e.u, b = e.v;
      if (!directed_ && a > b) std::swap(a, b);
      keys.push_back((static_cast<std::uint64_t>(a) << 32) | b);
    }
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
      throw ValidationError("graph: duplicate edge");
    }
    build_adjacency();
  }

  std::size_t size() const noexcept { return n_; }
  bool directed() const noexcept { return directed_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  // Out-neighbors for directed graphs, all neighbors otherwise.
  std::span<const Neighbor> neighbors(Node u) const {
    return {out_.data() + out_offsets_[u], out_.data() + out_offsets_[u + 1]};
  }

  // In-neighbors; identical to neighbors() for undirected graphs.
  std::span<const Neighbor> in_neighbors(Node u) const {
    if (!directed_) return neighbors(u);
    return {in_.data() + in_offsets_[u], in_.data() + in_offsets_[u + 1]};
  }

  std::size_t degree(Node u) const { return neighbors(u).size(); }

  // Edges sorted by endpoint, undirected edges as (min, max).
  Graph canonical() const {
    std::vector<Edge> sorted = edges_;
    if (!directed_) {
      for (Edge& e : sorted) {
        if (e.u > e.v) std::swap(e.u, e.v);
      }
    }
    std::sort(sorted.begin(), sorted.end(), [](const Edge& a, const Edge& b) {
      return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    return Graph(n_, directed_, std::move(sorted));
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.n_ == b.n_ && a.directed_ == b.directed_ && a.edges_ == b.edges_;
  }

 private:
  static void fill_csr(std::size_t n, std::vector<std::size_t>& offsets,
                       std::vector<Neighbor>& slots,
                       const std::vector<std::pair<Node, Neighbor>>& items) {
    offsets.assign(n + 1, 0);
    for (const auto& [from, nb] : items) ++offsets[from + 1];
    for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
    slots.resize(items.size());
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (const auto& [from, nb] : items) slots[cursor[from]++] = nb;
  }

  void build_adjacency() {
    std::vector<std::pair<Node, Neighbor>> out_items;
    out_items.reserve(directed_ ? edges_.size() : 2 * edges_.size());
    for (const Edge& e : edges_) {
      out_items.push_back({e.u, {e.v, e.w}});
      if (!directed_) out_items.push_back({e.v, {e.u, e.w}});
    }
    fill_csr(n_, out_offsets_, out_, out_items);
    if (directed_) {
      std::vector<std::pair<Node, Neighbor>> in_items;
      in_items.reserve(edges_.size());
      for (const Edge& e : edges_) in_items.push_back({e.v, {e.u, e.w}});
      fill_csr(n_, in_offsets_, in_, in_items);
    }
  }

  std::size_t n_ = 0;
  bool directed_ = false;
  std::vector<Edge> edges_;
  std::vector<std::size_t> out_offsets_{0};
  std::vector<Neighbor> out_;
  std::vector<std::size_t> in_offsets_{0};
  std::vector<Neighbor> in_;
};

enum class WeightScheme {
  SignedUnit,   // -1 or +1 with equal probability
  Unit,         // +1
  UniformReal,  // U(0, 1), open interval
};

inline std::string_view to_string(WeightScheme s) {
  switch (s) {
    case WeightScheme::SignedUnit: return "signed";
    case WeightScheme::Unit: return "unit";
    case WeightScheme::UniformReal: return "uniform";
  }
  return "?";
}

inline WeightScheme parse_weight_scheme(std::string_view s) {
  if (s == "signed") return WeightScheme::SignedUnit;
  if (s == "unit") return WeightScheme::Unit;
  if (s == "uniform") return WeightScheme::UniformReal;
  throw ValidationError("unknown weight scheme '" + std::string(s) +
                        "' (expected signed|unit|uniform)");
}

inline double draw_weight(WeightScheme s, Rng& rng) {
  switch (s) {
    case WeightScheme::SignedUnit: return rng.bernoulli(0.5) ? 1.0 : -1.0;
    case WeightScheme::Unit: return 1.0;
    case WeightScheme::UniformReal: return rng.uniform_open();
  }
  return 1.0;
}

// Same topology with every weight redrawn from the scheme, in edge order.
inline Graph reweighted(const Graph& g, WeightScheme scheme, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> edges = g.edges();
  for (Edge& e : edges) e.w = draw_weight(scheme, rng);
  return Graph(g.size(), g.directed(), std::move(edges));
}

// Erdos-Renyi G(n, p). Undirected graphs visit unordered pairs (u < v) in
// lexicographic order; directed graphs visit ordered pairs u != v.
inline Graph gen_er(std::size_t n, double p, WeightScheme scheme,
                    std::uint64_t seed, bool directed = false) {
  if (n < 1) throw ValidationError("gen_er: n must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("gen_er: p must lie in [0, 1]");
  }
  Rng rng(seed);
  std::vector<Edge> edges;
  for (Node u = 0; u < n; ++u) {
    for (Node v = directed ? 0 : u + 1; v < n; ++v) {
      if (u == v) continue;
      if (rng.bernoulli(p)) edges.push_back({u, v, draw_weight(scheme, rng)});
    }
  }
  return Graph(n, directed, std::move(edges));
}

// Barabasi-Albert preferential attachment. The first m_attach nodes start
// without edges; node m_attach therefore links to all of them, and every later
// node picks m_attach distinct targets with probability proportional to degree.
inline Graph gen_ba(std::size_t n, std::size_t m_attach, WeightScheme scheme,
                    std::uint64_t seed) {
  if (m_attach < 1 || m_attach >= n) {
    throw ValidationError("gen_ba: need 1 <= m_attach < n");
  }
  Rng rng(seed);
  std::vector<Edge> edges;
  edges.reserve((n - m_attach) * m_attach);
  // Each node appears once per incident edge end.
  std::vector<Node> endpoints;
  endpoints.reserve(2 * (n - m_attach) * m_attach);
  std::vector<Node> targets;
  std::vector<std::uint8_t> picked(n, 0);
  for (Node v = static_cast<Node>(m_attach); v < n; ++v) {
    targets.clear();
    if (endpoints.empty()) {
      // No degree mass yet: uniform over the seed nodes.
      std::vector<Node> pool(m_attach);
      for (Node i = 0; i < m_attach; ++i) pool[i] = i;
      while (targets.size() < m_attach) {
        const std::size_t j = rng.index(pool.size());
        targets.push_back(pool[j]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
      }
    } else {
      while (targets.size() < m_attach) {
        const Node t = endpoints[rng.index(endpoints.size())];
        if (picked[t]) continue;
        picked[t] = 1;
        targets.push_back(t);
      }
      for (Node t : targets) picked[t] = 0;
    }
    for (Node t : targets) {
      edges.push_back({t, v, draw_weight(scheme, rng)});
      endpoints.push_back(t);
      endpoints.push_back(v);
    }
  }
  return Graph(n, false, std::move(edges));
}

// Same topology, fresh weights drawn from `scheme`.
inline Graph reweight(const Graph& g, WeightScheme scheme, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> edges = g.edges();
  for (Edge& e : edges) e.w = draw_weight(scheme, rng);
  return Graph(g.size(), g.directed(), std::move(edges));
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto not_space = [](char c) {
    return c != ' ' && c != '\t' && c != '\r' && c != '\n';
  };
  while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
  return s;
}

// Splits on any of the delimiter characters, dropping empty fields.
inline std::vector<std::string_view> split(std::string_view s,
                                           std::string_view delims) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && delims.find(s[i]) != std::string_view::npos) ++i;
    const std::size_t start = i;
    while (i < s.size() && delims.find(s[i]) == std::string_view::npos) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// Shortest text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

}  // namespace detail

// Edge list text: one "u v [w]" per line, '#' starts a comment line.
inline Graph read_edge_list(std::istream& in, bool directed) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = detail::split(body, " \t,");
    if (fields.size() < 2 || fields.size() > 3) {
      throw ParseError("edge list: expected 'u v [w]'", line_no);
    }
    std::uint64_t u = 0, v = 0;
    double w = 1.0;
    if (!detail::parse_number(fields[0], u) ||
        !detail::parse_number(fields[1], v) ||
        u > std::numeric_limits<Node>::max() - 1 ||
        v > std::numeric_limits<Node>::max() - 1) {
      throw ParseError("edge list: bad node id", line_no);
    }
    if (fields.size() == 3 && !detail::parse_number(fields[2], w)) {
      throw ParseError("edge list: bad weight", line_no);
    }
    if (u == v) {
      throw ValidationError("edge list: self-loop at node " +
                            std::to_string(u) + " (line " +
                            std::to_string(line_no) + ")");
    }
    n = std::max<std::size_t>(n, std::max(u, v) + 1);
    edges.push_back({static_cast<Node>(u), static_cast<Node>(v), w});
  }
  return Graph(n, directed, std::move(edges));
}

inline Graph load_edge_list(const std::string& path, bool directed) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open edge list '" + path + "'");
  return read_edge_list(in, directed);
}

inline void write_edge_list(std::ostream& out, const Graph& g) {
  for (const Edge& e : g.edges()) {
    out << e.u << ' ' << e.v << ' ' << detail::format_double(e.w) << '\n';
  }
}

inline void save_edge_list(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write edge list '" + path + "'");
  write_edge_list(out, g);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

// Dense item x user ratings. Row i is item i's rating vector.
struct RatingsMatrix {
  Eigen::MatrixXd ratings;
  std::vector<std::string> item_ids;  // compact index -> external id
  std::vector<std::string> user_ids;

  std::size_t n_items() const { return static_cast<std::size_t>(ratings.rows()); }
  std::size_t n_users() const { return static_cast<std::size_t>(ratings.cols()); }
};

namespace detail {

// Numeric ids sort numerically, anything else lexicographically, so that the
// compact order does not depend on file order.
inline std::vector<std::string> sorted_ids(std::vector<std::string> ids) {
  const bool numeric = std::all_of(ids.begin(), ids.end(), [](const auto& s) {
    long long x;
    return parse_number(std::string_view(s), x);
  });
  if (numeric) {
    std::sort(ids.begin(), ids.end(), [](const auto& a, const auto& b) {
      long long x = 0, y = 0;
      parse_number(std::string_view(a), x);
      parse_number(std::string_view(b), y);
      return x < y;
    });
  } else {
    std::sort(ids.begin(), ids.end());
  }
  return ids;
}

}  // namespace detail

// "user,item,rating" lines (comma, tab or space separated; extra trailing
// columns such as timestamps are ignored). A first line whose user and rating
// fields are both non-numeric is a header. Repeated (user, item) pairs keep
// the last rating.
inline RatingsMatrix read_ratings(std::istream& in) {
  struct Triple {
    std::string user, item;
    double rating;
  };
  std::vector<Triple> triples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = detail::split(body, ",\t ");
    if (fields.size() < 3) {
      throw ParseError("ratings: expected 'user,item,rating'", line_no);
    }
    double rating = 0.0;
    if (!detail::parse_number(fields[2], rating)) {
      double probe;
      if (triples.empty() && line_no == 1 &&
          !detail::parse_number(fields[0], probe)) {
        continue;  // header
      }
      throw ParseError("ratings: non-numeric rating", line_no);
    }
    if (!std::isfinite(rating)) {
      throw ParseError("ratings: non-finite rating", line_no);
    }
    triples.push_back({std::string(detail::trim(fields[0])),
                       std::string(detail::trim(fields[1])), rating});
  }
  if (triples.empty()) throw ValidationError("no ratings");

  std::vector<std::string> users, items;
  for (const auto& t : triples) {
    users.push_back(t.user);
    items.push_back(t.item);
  }
  const auto dedup = [](std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedup(users);
  dedup(items);
  RatingsMatrix m;
  m.user_ids = detail::sorted_ids(std::move(users));
  m.item_ids = detail::sorted_ids(std::move(items));
  std::map<std::string, std::size_t> user_index, item_index;
  for (std::size_t i = 0; i < m.user_ids.size(); ++i) user_index[m.user_ids[i]] = i;
  for (std::size_t i = 0; i < m.item_ids.size(); ++i) item_index[m.item_ids[i]] = i;
  m.ratings = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.item_ids.size()),
                                    static_cast<Eigen::Index>(m.user_ids.size()));
  for (const auto& t : triples) {
    m.ratings(static_cast<Eigen::Index>(item_index[t.item]),
              static_cast<Eigen::Index>(user_index[t.user])) = t.rating;
  }
  return m;
}

inline RatingsMatrix load_ratings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open ratings file '" + path + "'");
  return read_ratings(in);
}

// Writes nonzero entries with a header line. Ids fall back to indices when the
// matrix carries no id map.
inline void write_ratings(std::ostream& out, const RatingsMatrix& m) {
  const auto item_id = [&](std::size_t i) {
    return i < m.item_ids.size() ? m.item_ids[i] : std::to_string(i);
  };
  const auto user_id = [&](std::size_t j) {
    return j < m.user_ids.size() ? m.user_ids[j] : std::to_string(j);
  };
  out << "user,item,rating\n";
  for (std::size_t j = 0; j < m.n_users(); ++j) {
    for (std::size_t i = 0; i < m.n_items(); ++i) {
      const double r = m.ratings(static_cast<Eigen::Index>(i),
                                 static_cast<Eigen::Index>(j));
      if (r != 0.0) {
        out << user_id(j) << ',' << item_id(i) << ','
            << detail::format_double(r) << '\n';
      }
    }
  }
}

inline void save_ratings(const RatingsMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write ratings '" + path + "'");
  write_ratings(out, m);
}

// "kind,index,id" rows mapping compact indices back to external ids.
inline void save_id_map(const RatingsMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write id map '" + path + "'");
  out << "kind,index,id\n";
  for (std::size_t i = 0; i < m.item_ids.size(); ++i) {
    out << "item," << i << ',' << m.item_ids[i] << '\n';
  }
  for (std::size_t j = 0; j < m.user_ids.size(); ++j) {
    out << "user," << j << ',' << m.user_ids[j] << '\n';
  }
}

}  // namespace rels
