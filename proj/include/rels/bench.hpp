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
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "rels/env.hpp"
#include "rels/errors.hpp"
#include "rels/graph.hpp"
#include "rels/hash.hpp"
#include "rels/objectives.hpp"
#include "rels/qnet.hpp"
#include "rels/search.hpp"

namespace rels {

// Runs fn(i) for i in [0, count) on `threads` workers. Work is keyed by index,
// so results do not depend on scheduling.
inline void parallel_for(std::size_t count, std::size_t threads,
                         const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

// Outcome of one method on one instance.
struct InstanceOutcome {
  std::vector<Node> set;
  double value = 0.0;
  double wall_time = 0.0;
  std::uint64_t queries = 0;
  bool timed_out = false;
};

// One greedy-policy (epsilon = 0) episode from the empty set. Wall time covers
// feature construction, forward passes and every oracle query.
inline InstanceOutcome run_policy(const QParams& params, const Oracle& proto, std::size_t k,
                                  std::size_t episode_len = 0) {
  const detail::Stopwatch watch;
  auto start = proto.clone();
  start->reset_queries();
  Environment env(*start, k, episode_len);
  while (!env.done()) env.step(argmax_lowest(forward(params, env.features())));
  InstanceOutcome out;
  out.wall_time = watch.seconds();
  out.queries = env.oracle().queries();
  auto [set, f] = env.best();
  out.set = std::move(set);
  out.value = f;
  return out;
}

// Per-step record of the same greedy-policy episode, for CSV export. Kept
// apart from run_policy so that timed runs do no extra work.
inline std::vector<TraceRow> policy_trace(const QParams& params, const Oracle& proto,
                                          std::size_t k, std::size_t episode_len = 0) {
  Environment env(proto, k, episode_len);
  std::vector<TraceRow> rows;
  while (!env.done()) {
    const Node a = argmax_lowest(forward(params, env.features()));
    const StepResult r = env.step(a);
    rows.push_back({env.t(), a, r.reward, env.f_current(), env.f_best(), env.solution_size()});
  }
  return rows;
}

struct MethodSummary {
  std::string method;
  double mean_f = 0.0;
  double std_f = 0.0;
  double mean_time = 0.0;
  double mean_queries = 0.0;
  double mean_size = 0.0;
  std::size_t max_size = 0;
  std::size_t instances = 0;
  bool timed_out = false;
};

struct BenchResult {
  std::string application;
  std::string dataset;
  std::size_t k = 0;
  std::vector<MethodSummary> methods;
  std::vector<std::uint64_t> seeds;
  std::string config_hash;

  const MethodSummary* find(const std::string& method) const {
    for (const auto& m : methods) {
      if (m.method == method) return &m;
    }
    return nullptr;
  }
};

namespace detail {

// Recomputes f(V) from scratch and enforces |V| <= k before anything is
// reported.
inline void revalidate(const Oracle& proto, std::size_t k, InstanceOutcome& o,
                       const std::string& method) {
  if (o.set.size() > k) {
    throw std::logic_error(method + ": infeasible solution of size " +
                           std::to_string(o.set.size()) + " > k=" + std::to_string(k));
  }
  const double exact = proto.clone()->value(o.set);
  if (std::abs(exact - o.value) > 1e-9 * std::max(1.0, std::abs(exact))) {
    throw std::logic_error(method + ": reported value " + format_double(o.value) +
                           " disagrees with recomputed " + format_double(exact));
  }
  o.value = exact;
}

}  // namespace detail

inline MethodSummary summarize(const std::string& method,
                               const std::vector<InstanceOutcome>& runs) {
  MethodSummary s;
  s.method = method;
  s.instances = runs.size();
  if (runs.empty()) return s;
  const double count = static_cast<double>(runs.size());
  for (const auto& r : runs) {
    s.mean_f += r.value;
    s.mean_time += r.wall_time;
    s.mean_queries += static_cast<double>(r.queries);
    s.mean_size += static_cast<double>(r.set.size());
    s.max_size = std::max(s.max_size, r.set.size());
    s.timed_out = s.timed_out || r.timed_out;
  }
  s.mean_f /= count;
  s.mean_time /= count;
  s.mean_queries /= count;
  s.mean_size /= count;
  double var = 0.0;
  for (const auto& r : runs) var += (r.value - s.mean_f) * (r.value - s.mean_f);
  s.std_f = runs.size() > 1 ? std::sqrt(var / (count - 1.0)) : 0.0;
  return s;
}

// A benchmark method: greedy, greedy_rev, greedy_ls, rls(lg,la) or brute.
struct MethodSpec {
  enum class Kind { Greedy, GreedyRev, GreedyLs, Rls, Brute } kind = Kind::Greedy;
  double lambda_gain = 1.0;
  double lambda_age = 0.1;

  std::string name() const {
    switch (kind) {
      case Kind::Greedy: return "greedy";
      case Kind::GreedyRev: return "greedy_rev";
      case Kind::GreedyLs: return "greedy_ls";
      case Kind::Brute: return "brute";
      case Kind::Rls: {
        return "rls(" + detail::format_double(lambda_gain) + "," +
               detail::format_double(lambda_age) + ")";
      }
    }
    return "?";
  }

  static MethodSpec parse(std::string_view s) {
    MethodSpec m;
    if (s == "greedy") m.kind = Kind::Greedy;
    else if (s == "greedy_rev") m.kind = Kind::GreedyRev;
    else if (s == "greedy_ls") m.kind = Kind::GreedyLs;
    else if (s == "brute") m.kind = Kind::Brute;
    else if (s == "rls") m.kind = Kind::Rls;
    else if (s.starts_with("rls(") && s.ends_with(")")) {
      m.kind = Kind::Rls;
      const auto args = detail::split(s.substr(4, s.size() - 5), ",");
      if (args.size() != 2 || !detail::parse_number(args[0], m.lambda_gain) ||
          !detail::parse_number(args[1], m.lambda_age)) {
        throw ValidationError("bad method '" + std::string(s) + "' (expected rls(lg,la))");
      }
    } else {
      throw ValidationError("unknown method '" + std::string(s) +
                            "' (expected greedy|greedy_rev|greedy_ls|rls(lg,la)|brute)");
    }
    return m;
  }

  Solution run(const Oracle& o, std::size_t k, const Deadline& d) const {
    switch (kind) {
      case Kind::Greedy: return greedy(o, k, d);
      case Kind::GreedyRev: return greedy_rev(o, k, d);
      case Kind::GreedyLs: return greedy_ls(o, k, {}, d);
      case Kind::Rls: return reversible_local_search(o, k, lambda_gain, lambda_age, d);
      case Kind::Brute: return brute_force_opt(o, k, d);
    }
    throw std::logic_error("unreachable");
  }
};

inline constexpr double kDefaultTimeoutSecs = 24.0 * 3600.0;

struct BenchOptions {
  std::string application;
  std::string dataset;
  std::vector<std::uint64_t> seeds;
  std::string config_hash;
  double timeout_secs = kDefaultTimeoutSecs;  // per method, per instance
  std::size_t threads = 1;
};

inline BenchResult evaluate_model(const QParams& params,
                                  const std::vector<const Oracle*>& instances, std::size_t k,
                                  std::size_t episode_len, const BenchOptions& opt,
                                  std::vector<InstanceOutcome>* outcomes = nullptr) {
  if (!params.all_finite()) throw ValidationError("evaluate_model: non-finite parameters");
  std::vector<InstanceOutcome> runs(instances.size());
  parallel_for(instances.size(), opt.threads, [&](std::size_t i) {
    runs[i] = run_policy(params, *instances[i], k, episode_len);
    detail::revalidate(*instances[i], k, runs[i], "model");
  });
  BenchResult r{opt.application, opt.dataset, k, {summarize("model", runs)}, opt.seeds,
                opt.config_hash};
  if (outcomes) *outcomes = std::move(runs);
  return r;
}

inline BenchResult run_baselines(const std::vector<const Oracle*>& instances, std::size_t k,
                                 const std::vector<MethodSpec>& methods,
                                 const BenchOptions& opt,
                                 std::map<std::string, std::vector<InstanceOutcome>>* outcomes =
                                     nullptr) {
  BenchResult result{opt.application, opt.dataset, k, {}, opt.seeds, opt.config_hash};
  for (const MethodSpec& m : methods) {
    if (m.kind == MethodSpec::Kind::Brute) {
      for (const Oracle* o : instances) {
        if (o->size() > kBruteForceMaxN) {
          throw ValidationError("brute: ground set of " + std::to_string(o->size()) +
                                " exceeds " + std::to_string(kBruteForceMaxN));
        }
      }
    }
    std::vector<InstanceOutcome> runs(instances.size());
    parallel_for(instances.size(), opt.threads, [&](std::size_t i) {
      const Solution s = m.run(*instances[i], k, Deadline::after(opt.timeout_secs));
      runs[i] = {s.set, s.value, s.wall_time, s.queries, s.timed_out};
      detail::revalidate(*instances[i], k, runs[i], m.name());
    });
    result.methods.push_back(summarize(m.name(), runs));
    if (outcomes) (*outcomes)[m.name()] = std::move(runs);
  }
  return result;
}

// Splits on commas outside parentheses, so "greedy,rls(1,0.1)" yields two
// items.
inline std::vector<std::string> split_top_level(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::vector<MethodSpec> parse_methods(std::string_view list) {
  std::vector<MethodSpec> out;
  for (const auto& item : split_top_level(list)) {
    const auto name = detail::trim(item);
    if (!name.empty()) out.push_back(MethodSpec::parse(name));
  }
  if (out.empty()) throw ValidationError("empty method list");
  return out;
}

// Flat CSV of benchmark summaries; read_bench_csv inverts it exactly.
inline void write_bench_csv(std::ostream& out, const std::vector<BenchResult>& results) {
  out << "application,dataset,k,method,mean_f,std_f,mean_time,mean_queries,mean_size,"
         "max_size,instances,timed_out,config_hash\n";
  for (const auto& r : results) {
    for (const auto& m : r.methods) {
      out << r.application << ',' << r.dataset << ',' << r.k << ',' << m.method << ','
          << detail::format_double(m.mean_f) << ',' << detail::format_double(m.std_f) << ','
          << detail::format_double(m.mean_time) << ','
          << detail::format_double(m.mean_queries) << ','
          << detail::format_double(m.mean_size) << ',' << m.max_size << ',' << m.instances
          << ',' << (m.timed_out ? 1 : 0) << ',' << r.config_hash << '\n';
    }
  }
}

inline std::vector<BenchResult> read_bench_csv(std::istream& in) {
  std::vector<BenchResult> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || detail::trim(line).empty()) continue;
    const auto f = split_top_level(line);
    if (f.size() != 13) throw ParseError("bench csv: expected 13 columns", line_no);
    MethodSummary m;
    std::size_t k = 0;
    int timed_out = 0;
    bool ok = detail::parse_number(std::string_view(f[2]), k);
    m.method = f[3];
    ok = ok && detail::parse_number(std::string_view(f[4]), m.mean_f) &&
         detail::parse_number(std::string_view(f[5]), m.std_f) &&
         detail::parse_number(std::string_view(f[6]), m.mean_time) &&
         detail::parse_number(std::string_view(f[7]), m.mean_queries) &&
         detail::parse_number(std::string_view(f[8]), m.mean_size) &&
         detail::parse_number(std::string_view(f[9]), m.max_size) &&
         detail::parse_number(std::string_view(f[10]), m.instances) &&
         detail::parse_number(std::string_view(f[11]), timed_out);
    if (!ok) throw ParseError("bench csv: bad number", line_no);
    m.timed_out = timed_out != 0;
    if (out.empty() || out.back().application != f[0] || out.back().dataset != f[1] ||
        out.back().k != k || out.back().config_hash != f[12]) {
      out.push_back({f[0], f[1], k, {}, {}, f[12]});
    }
    out.back().methods.push_back(std::move(m));
  }
  return out;
}

struct RatioTable {
  std::string markdown;
  std::string csv;
};

inline std::string format_ratio(double model_mean, const MethodSummary* baseline) {
  if (!baseline || baseline->timed_out) return "-";
  if (baseline->mean_f == 0.0) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", model_mean / baseline->mean_f);
  return buf;
}

// Ratio of means, model over each baseline, per (application, dataset, k).
// Rows are applications; columns are grouped by baseline method, one column
// per dataset.
inline RatioTable ratio_table(const std::vector<BenchResult>& model_rows,
                              const std::vector<BenchResult>& baseline_rows,
                              const std::string& model_method = "model") {
  using Key = std::tuple<std::string, std::string, std::size_t>;
  std::map<Key, std::vector<const BenchResult*>> baselines;
  std::vector<std::string> methods;
  for (const auto& b : baseline_rows) {
    baselines[{b.application, b.dataset, b.k}].push_back(&b);
    for (const auto& m : b.methods) {
      if (m.method != model_method &&
          std::find(methods.begin(), methods.end(), m.method) == methods.end()) {
        methods.push_back(m.method);
      }
    }
  }
  std::vector<std::string> apps;
  std::vector<std::pair<std::string, std::size_t>> columns;
  std::map<std::string, std::set<std::size_t>> ks;
  for (const auto& r : model_rows) {
    if (std::find(apps.begin(), apps.end(), r.application) == apps.end()) {
      apps.push_back(r.application);
    }
    const std::pair<std::string, std::size_t> col{r.dataset, r.k};
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    ks[r.dataset].insert(r.k);
  }
  const auto label = [&](const std::pair<std::string, std::size_t>& c) {
    return ks[c.first].size() > 1 ? c.first + " k=" + std::to_string(c.second) : c.first;
  };
  const auto model_mean = [&](const std::string& app, const std::pair<std::string, std::size_t>& c)
      -> std::optional<double> {
    for (const auto& r : model_rows) {
      if (r.application == app && r.dataset == c.first && r.k == c.second) {
        if (const auto* m = r.find(model_method)) return m->mean_f;
      }
    }
    return std::nullopt;
  };

  std::ostringstream md, csv;
  md << "| Application |";
  for (const auto& m : methods) {
    for (const auto& c : columns) md << ' ' << model_method << '/' << m << ' ' << label(c) << " |";
  }
  md << "\n|---|";
  for (std::size_t i = 0; i < methods.size() * columns.size(); ++i) md << "---|";
  md << '\n';
  csv << "application,dataset,k,baseline,model_mean,baseline_mean,ratio\n";
  for (const auto& app : apps) {
    md << "| " << app << " |";
    for (const auto& m : methods) {
      for (const auto& c : columns) {
        const auto mean = model_mean(app, c);
        const MethodSummary* base = nullptr;
        if (const auto it = baselines.find({app, c.first, c.second}); it != baselines.end()) {
          for (const BenchResult* b : it->second) {
            if (!base) base = b->find(m);
          }
        }
        const std::string cell = mean ? format_ratio(*mean, base) : std::string("-");
        md << ' ' << cell << " |";
        if (mean) {
          csv << app << ',' << c.first << ',' << c.second << ',' << m << ','
              << detail::format_double(*mean) << ','
              << (base ? detail::format_double(base->mean_f) : std::string()) << ',' << cell
              << '\n';
        }
      }
    }
    md << '\n';
  }
  md << "\nRatio of mean solution values (" << model_method
     << " mean / baseline mean) over matched instances. '-' = baseline out of time "
        "limit or missing; 'n/a' = baseline mean is 0.\n";
  return {md.str(), csv.str()};
}

struct SweepRow {
  std::string method;
  std::size_t k = 0;
  double mean_f = 0.0;
  double mean_time = 0.0;
  double mean_queries = 0.0;
  bool timed_out = false;
};

// One row per (method, k). Wall times are recorded, not compared.
inline std::vector<SweepRow> sweep_k(const std::vector<const Oracle*>& instances,
                                     const std::vector<MethodSpec>& methods,
                                     const std::vector<std::size_t>& k_values,
                                     const BenchOptions& opt,
                                     const QParams* model = nullptr) {
  std::vector<SweepRow> rows;
  for (const MethodSpec& m : methods) {
    for (std::size_t k : k_values) {
      for (const Oracle* o : instances) {
        if (k > o->size()) {
          throw ValidationError("sweep: k=" + std::to_string(k) + " exceeds n=" +
                                std::to_string(o->size()));
        }
      }
      const auto r = run_baselines(instances, k, {m}, opt);
      const auto& s = r.methods.front();
      rows.push_back({s.method, k, s.mean_f, s.mean_time, s.mean_queries, s.timed_out});
    }
  }
  if (model) {
    for (std::size_t k : k_values) {
      const auto r = evaluate_model(*model, instances, k, 0, opt);
      const auto& s = r.methods.front();
      rows.push_back({s.method, k, s.mean_f, s.mean_time, s.mean_queries, s.timed_out});
    }
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "method,k,mean_f,mean_time,mean_queries,timed_out\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.k << ',' << detail::format_double(r.mean_f) << ','
        << detail::format_double(r.mean_time) << ',' << detail::format_double(r.mean_queries)
        << ',' << (r.timed_out ? 1 : 0) << '\n';
  }
}

}  // namespace rels
