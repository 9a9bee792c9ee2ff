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

#include <memory>
#include <string>

#include "rels/graph.hpp"
#include "rels/objectives.hpp"
#include "rels/rng.hpp"

namespace rels {

enum class GraphKind { ER, BA };

inline std::string_view to_string(GraphKind k) { return k == GraphKind::ER ? "er" : "ba"; }

inline GraphKind parse_graph_kind(std::string_view s) {
  if (s == "er") return GraphKind::ER;
  if (s == "ba") return GraphKind::BA;
  throw ValidationError("unknown graph kind '" + std::string(s) + "' (expected er|ba)");
}

// Recipe for a random problem instance: graph family, size, weights and the
// application constants.
struct InstanceSpec {
  Application app = Application::MaxCut;
  GraphKind kind = GraphKind::ER;
  std::size_t n = 40;
  double p = 0.15;
  std::size_t m_attach = 4;
  WeightScheme weights = WeightScheme::SignedUnit;
  double q = 6.0;          // MaxCov cost factor
  double lambda = 5.0;     // MovRec diversity coefficient
  double alpha = 2.0;      // InfExp Lomax shape
  double scale = 1.0;      // InfExp Lomax scale

  // Synthetic training distributions: signed ER for MaxCut, unit ER (directed)
  // for MaxCov, uniform ER for MovRec, uniform BA(m=4) for InfExp.
  static InstanceSpec defaults_for(Application app, std::size_t n = 40) {
    InstanceSpec s;
    s.app = app;
    s.n = n;
    switch (app) {
      case Application::MaxCut: s.weights = WeightScheme::SignedUnit; break;
      case Application::MaxCov: s.weights = WeightScheme::Unit; break;
      case Application::MovRec: s.weights = WeightScheme::UniformReal; break;
      case Application::InfExp:
        s.kind = GraphKind::BA;
        s.weights = WeightScheme::UniformReal;
        break;
    }
    return s;
  }

  // Graph family only, e.g. "er(n=40,p=0.15)"; shared across applications.
  std::string dataset_id() const {
    std::string d = std::string(to_string(kind)) + "(n=" + std::to_string(n);
    d += kind == GraphKind::ER ? ",p=" + detail::format_double(p)
                               : ",m=" + std::to_string(m_attach);
    return d + ")";
  }

  std::string describe() const {
    std::string d = std::string(to_string(app)) + "/" + std::string(to_string(kind)) +
                    "(n=" + std::to_string(n);
    d += kind == GraphKind::ER ? ",p=" + detail::format_double(p)
                               : ",m=" + std::to_string(m_attach);
    return d + "," + std::string(to_string(weights)) + ")";
  }
};

// MaxCov needs a directed graph; every other application uses undirected.
inline Graph make_graph(const InstanceSpec& spec, std::uint64_t seed) {
  const bool directed = spec.app == Application::MaxCov;
  if (spec.kind == GraphKind::ER) return gen_er(spec.n, spec.p, spec.weights, seed, directed);
  Graph g = gen_ba(spec.n, spec.m_attach, spec.weights, seed);
  if (!directed) return g;
  std::vector<Edge> both;
  both.reserve(2 * g.edge_count());
  for (const Edge& e : g.edges()) {
    both.push_back(e);
    both.push_back({e.v, e.u, e.w});
  }
  return Graph(g.size(), true, std::move(both));
}

inline std::unique_ptr<Oracle> make_oracle(const InstanceSpec& spec,
                                           std::shared_ptr<const Graph> g,
                                           std::uint64_t seed) {
  switch (spec.app) {
    case Application::MaxCut: return make_maxcut(std::move(g));
    case Application::MaxCov: return make_maxcov(std::move(g), spec.q);
    case Application::MovRec: return make_movrec(*g, spec.lambda);
    case Application::InfExp:
      return make_infexp(std::move(g), spec.alpha, spec.scale, derive_seed(seed, 17));
  }
  throw ValidationError("unknown application");
}

inline std::unique_ptr<Oracle> make_instance(const InstanceSpec& spec, std::uint64_t seed) {
  auto g = std::make_shared<const Graph>(make_graph(spec, seed));
  return make_oracle(spec, std::move(g), seed);
}

}  // namespace rels
