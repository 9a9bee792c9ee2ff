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

// rels: instance generation, training, evaluation and baseline benchmarks.
//
// Exit status: 0 on success, 2 on usage or validation errors, 1 on runtime
// failures.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "rels/bench.hpp"
#include "rels/errors.hpp"
#include "rels/graph.hpp"
#include "rels/hash.hpp"
#include "rels/instances.hpp"
#include "rels/objectives.hpp"
#include "rels/qnet.hpp"
#include "rels/search.hpp"
#include "rels/trainer.hpp"

namespace fs = std::filesystem;
using namespace rels;

namespace {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out_dir = ".";
  double timeout_secs = kDefaultTimeoutSecs;
};

// Instance source shared by gen, eval, bench, sweep and verify.
struct InstanceOptions {
  std::string app = "maxcut";
  std::string graph;
  std::size_t n = 40;
  double p = 0.15;
  std::size_t m_attach = 4;
  std::string weights;
  double q = 6.0;
  double lambda = 5.0;
  std::size_t count = 10;
  std::vector<std::string> inputs;
  bool reweight = false;
  std::string ratings;

  void add_to(CLI::App* cmd, bool with_inputs = true) {
    cmd->add_option("--app", app, "maxcut|maxcov|movrec|infexp");
    cmd->add_option("--graph", graph, "er|ba (default per application)");
    cmd->add_option("--n", n, "ground set size")->check(CLI::PositiveNumber);
    cmd->add_option("--p", p, "ER edge probability")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--m-attach", m_attach, "BA edges per new node");
    cmd->add_option("--weights", weights, "signed|unit|uniform (default per application)");
    cmd->add_option("--q", q, "MaxCov cost factor");
    cmd->add_option("--lambda", lambda, "MovRec diversity coefficient");
    cmd->add_option("--instances", count, "number of random instances")
        ->check(CLI::PositiveNumber);
    if (with_inputs) {
      cmd->add_option("--input", inputs, "edge-list files instead of random instances");
      cmd->add_flag("--reweight", reweight,
                    "replace --input edge weights with draws from --weights");
      cmd->add_option("--ratings", ratings, "ratings file (movrec) instead of a graph");
    }
  }

  InstanceSpec spec(Application a) const {
    InstanceSpec s = InstanceSpec::defaults_for(a, n);
    if (!graph.empty()) s.kind = parse_graph_kind(graph);
    if (!weights.empty()) s.weights = parse_weight_scheme(weights);
    s.p = p;
    s.m_attach = m_attach;
    s.q = q;
    s.lambda = lambda;
    return s;
  }
};

struct Dataset {
  Application app = Application::MaxCut;
  std::string id;
  std::string description;
  std::string hash;
  std::vector<std::uint64_t> seeds;
  std::vector<std::unique_ptr<Oracle>> owned;

  std::vector<const Oracle*> view() const {
    std::vector<const Oracle*> out;
    for (const auto& o : owned) out.push_back(o.get());
    return out;
  }
};

inline std::uint64_t instance_seed(std::uint64_t base, std::size_t i) {
  return derive_seed(base, 10'000 + i);
}

Dataset build_dataset(const InstanceOptions& opt, Application app, std::uint64_t seed) {
  Dataset d;
  d.app = app;
  const InstanceSpec spec = opt.spec(app);
  std::uint64_t h = fnv1a64(std::string(to_string(app)));
  const auto mix = [&](const std::string& s) { h = fnv1a64(hex64(h) + s); };
  if (!opt.ratings.empty()) {
    if (app != Application::MovRec) throw ValidationError("--ratings requires --app movrec");
    d.owned.push_back(make_movrec(load_ratings(opt.ratings), opt.lambda));
    d.id = fs::path(opt.ratings).stem().string();
    d.description = "ratings " + opt.ratings;
    mix(file_hash(opt.ratings));
  } else if (!opt.inputs.empty()) {
    for (std::size_t i = 0; i < opt.inputs.size(); ++i) {
      const auto& path = opt.inputs[i];
      Graph loaded = load_edge_list(path, app == Application::MaxCov);
      d.seeds.push_back(instance_seed(seed, i));
      if (opt.reweight) loaded = reweighted(loaded, spec.weights, d.seeds.back());
      auto g = std::make_shared<const Graph>(std::move(loaded));
      d.owned.push_back(make_oracle(spec, std::move(g), d.seeds.back()));
      mix(file_hash(path));
    }
    d.id = opt.inputs.size() == 1 ? fs::path(opt.inputs[0]).stem().string()
                                  : "files" + std::to_string(opt.inputs.size());
    d.description = "edge lists " + std::to_string(opt.inputs.size()) +
                    (opt.reweight ? ", reweighted " + std::string(to_string(spec.weights))
                                  : ", file weights");
  } else {
    for (std::size_t i = 0; i < opt.count; ++i) {
      d.seeds.push_back(instance_seed(seed, i));
      auto g = std::make_shared<const Graph>(make_graph(spec, d.seeds.back()));
      std::ostringstream text;
      write_edge_list(text, *g);
      mix(text.str());
      d.owned.push_back(make_oracle(spec, std::move(g), d.seeds.back()));
    }
    d.id = spec.dataset_id();
    d.description = spec.describe();
  }
  d.hash = hex64(h);
  return d;
}

std::vector<Application> parse_apps(const std::string& list) {
  std::vector<Application> out;
  for (auto item : detail::split(list, ",")) {
    item = detail::trim(item);
    if (item == "all") return {std::begin(kAllApplications), std::end(kAllApplications)};
    if (!item.empty()) out.push_back(parse_application(item));
  }
  if (out.empty()) throw ValidationError("empty application list");
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& list) {
  std::vector<std::size_t> out;
  for (auto item : detail::split(list, ",")) {
    std::size_t v = 0;
    if (!detail::parse_number(detail::trim(item), v)) {
      throw ValidationError("bad integer '" + std::string(item) + "' in list");
    }
    out.push_back(v);
  }
  return out;
}

fs::path prepare_out_dir(const GlobalOptions& g) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

void write_meta(const fs::path& dir, const std::string& command, const std::string& config,
                std::uint64_t seed, const std::vector<const Dataset*>& datasets,
                const GlobalOptions& g, nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json meta = std::move(extra);
  meta["code_version"] = kCodeVersion;
  meta["command"] = command;
  meta["config_hash"] = hex64(fnv1a64(config));
  meta["config"] = config;
  meta["seed"] = seed;
  meta["timeout_secs"] = g.timeout_secs;
  for (const Dataset* d : datasets) {
    meta["datasets"].push_back({{"application", to_string(d->app)},
                                {"id", d->id},
                                {"description", d->description},
                                {"hash", d->hash},
                                {"instances", d->owned.size()},
                                {"seeds", d->seeds}});
  }
  write_text(dir / (command + "_meta.json"), meta.dump(2) + "\n");
}

std::string instance_config(const InstanceOptions& o, std::size_t k) {
  std::ostringstream s;
  s << "app=" << o.app << ";graph=" << o.graph << ";n=" << o.n
    << ";p=" << detail::format_double(o.p) << ";m_attach=" << o.m_attach
    << ";weights=" << o.weights << ";q=" << detail::format_double(o.q)
    << ";lambda=" << detail::format_double(o.lambda) << ";instances=" << o.count
    << ";k=" << k << ";ratings=" << o.ratings;
  for (const auto& i : o.inputs) s << ";input=" << i;
  if (!o.inputs.empty()) s << ";reweight=" << (o.reweight ? 1 : 0);
  return s.str();
}

std::uint64_t resolve_seed(const GlobalOptions& g, std::uint64_t fallback = 0) {
  if (g.seed) return *g.seed;
  if (const char* s = std::getenv("RELS_SEED"); s && *s) {
    return detail::config_number<std::uint64_t>("RELS_SEED", s);
  }
  return fallback;
}

// Model and baseline rows live in one CSV; ratio_table skips the model when it
// lists baseline columns.
RatioTable table_from_rows(const std::vector<BenchResult>& rows) {
  return ratio_table(rows, rows, "model");
}

void print_summary(std::ostream& os, const BenchResult& r) {
  for (const auto& m : r.methods) {
    os << std::left << std::setw(8) << r.application << ' ' << std::setw(28) << r.dataset
       << " k=" << std::setw(4) << r.k << ' ' << std::setw(14) << m.method
       << " mean_f=" << std::setw(12) << m.mean_f << " std=" << std::setw(10) << m.std_f
       << " time=" << std::setw(11) << m.mean_time << " queries=" << m.mean_queries
       << (m.timed_out ? " (timeout)" : "") << '\n';
  }
}

// ---------------------------------------------------------------------------

struct GenOptions {
  InstanceOptions inst;
  bool ratings = false;
  std::size_t items = 200;
  std::size_t users = 100;
  double density = 0.1;
};

int cmd_gen(const GlobalOptions& g, const GenOptions& o) {
  const auto dir = prepare_out_dir(g);
  const std::uint64_t seed = resolve_seed(g);
  if (o.ratings) {
    if (o.items == 0 || o.users == 0) throw ValidationError("--items and --users must be positive");
    if (!(o.density > 0.0 && o.density <= 1.0)) throw ValidationError("--density outside (0, 1]");
    Rng rng(derive_seed(seed, 20));
    RatingsMatrix m;
    m.ratings = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(o.items),
                                      static_cast<Eigen::Index>(o.users));
    for (std::size_t i = 0; i < o.items; ++i) m.item_ids.push_back(std::to_string(i));
    for (std::size_t u = 0; u < o.users; ++u) m.user_ids.push_back(std::to_string(u));
    for (std::size_t i = 0; i < o.items; ++i) {
      for (std::size_t u = 0; u < o.users; ++u) {
        if (rng.bernoulli(o.density)) {
          m.ratings(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u)) =
              static_cast<double>(1 + rng.index(5));
        }
      }
    }
    save_ratings(m, (dir / "ratings.csv").string());
    save_id_map(m, (dir / "ratings_ids.csv").string());
    std::cout << "wrote " << (dir / "ratings.csv").string() << '\n';
    return 0;
  }
  const Application app = parse_application(o.inst.app);
  const InstanceSpec spec = o.inst.spec(app);
  for (std::size_t i = 0; i < o.inst.count; ++i) {
    const Graph graph = make_graph(spec, instance_seed(seed, i));
    std::ostringstream name;
    name << to_string(app) << '_' << to_string(spec.kind) << spec.n << '_' << std::setw(4)
         << std::setfill('0') << i << ".edges";
    save_edge_list(graph, (dir / name.str()).string());
    std::cout << "wrote " << (dir / name.str()).string() << " (" << graph.edge_count()
              << " edges)\n";
  }
  const Dataset d = build_dataset(o.inst, app, seed);
  write_meta(dir, "gen", instance_config(o.inst, 0), seed, {&d}, g);
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  std::vector<std::string> set;
  std::optional<std::string> app;
  std::optional<std::uint64_t> steps;
  std::optional<std::size_t> k;
  std::optional<std::size_t> n;
  bool quiet = false;
};

int cmd_train(const GlobalOptions& g, const TrainOptions& o) {
  TrainConfig cfg;
  if (!g.config.empty()) cfg = load_config(g.config);
  apply_seed_override(cfg);
  if (o.app) apply_setting(cfg, "app", *o.app);
  if (o.n) cfg.graph.n = *o.n;
  if (o.steps) cfg.total_steps = *o.steps;
  if (o.k) cfg.k = *o.k;
  for (const auto& kv : o.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  const auto dir = prepare_out_dir(g);
  const auto result = train(cfg, dir.string(), o.quiet ? nullptr : &std::cerr);
  std::cout << "checkpoint " << result.checkpoint_path << '\n'
            << "log " << result.log_path << '\n'
            << "episodes " << result.episodes << " learner_steps " << result.learner_steps
            << " final_mean_f_best_50 " << result.final_mean_f_best << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalOptions {
  InstanceOptions inst;
  std::string checkpoint;
  std::size_t k = 30;
  std::size_t episode_len = 0;
  std::size_t threads = 1;
  bool traces = false;
};

int cmd_eval(const GlobalOptions& g, const EvalOptions& o) {
  const QParams params = load_params(o.checkpoint);
  const std::uint64_t seed = resolve_seed(g);
  const Application app = parse_application(o.inst.app);
  const Dataset d = build_dataset(o.inst, app, seed);
  const auto config = instance_config(o.inst, o.k) + ";checkpoint=" + file_hash(o.checkpoint) +
                      ";episode_len=" + std::to_string(o.episode_len);
  BenchOptions bopt{std::string(to_string(app)), d.id, d.seeds,
                    hex64(fnv1a64(config)), g.timeout_secs, o.threads};
  std::vector<InstanceOutcome> runs;
  const BenchResult r = evaluate_model(params, d.view(), o.k, o.episode_len, bopt, &runs);
  const auto dir = prepare_out_dir(g);
  std::ostringstream csv;
  csv << "instance,seed,f,size,wall_time,queries\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    csv << i << ',' << (i < d.seeds.size() ? d.seeds[i] : 0) << ','
        << detail::format_double(runs[i].value) << ',' << runs[i].set.size() << ','
        << detail::format_double(runs[i].wall_time) << ',' << runs[i].queries << '\n';
  }
  write_text(dir / "eval.csv", csv.str());
  if (o.traces) {
    fs::create_directories(dir / "traces");
    for (std::size_t i = 0; i < d.owned.size(); ++i) {
      std::ostringstream name, trace;
      name << "trace_" << std::setw(4) << std::setfill('0') << i << ".csv";
      write_trace_csv(trace, policy_trace(params, *d.owned[i], o.k, o.episode_len));
      write_text(dir / "traces" / name.str(), trace.str());
    }
  }
  std::ostringstream rows;
  write_bench_csv(rows, {r});
  write_text(dir / "eval_summary.csv", rows.str());
  write_meta(dir, "eval", config, seed, {&d}, g);
  print_summary(std::cout, r);
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchCmdOptions {
  InstanceOptions inst;
  std::string apps;
  std::string methods = "greedy,greedy_rev,greedy_ls,rls(1,0.1)";
  std::string checkpoint;
  std::string rows;
  std::size_t k = 30;
  std::size_t episode_len = 0;
  std::size_t threads = 1;
};

int cmd_bench(const GlobalOptions& g, const BenchCmdOptions& o) {
  const auto dir = prepare_out_dir(g);
  if (!o.rows.empty()) {
    std::ifstream in(o.rows);
    if (!in) throw ValidationError("cannot open rows '" + o.rows + "'");
    const auto table = table_from_rows(read_bench_csv(in));
    write_text(dir / "ratio.md", table.markdown);
    write_text(dir / "ratio.csv", table.csv);
    std::cout << table.markdown;
    return 0;
  }
  const auto methods = parse_methods(o.methods);
  std::optional<QParams> params;
  if (!o.checkpoint.empty()) params = load_params(o.checkpoint);
  const std::uint64_t seed = resolve_seed(g);
  const auto apps = parse_apps(o.apps.empty() ? o.inst.app : o.apps);

  std::string config = instance_config(o.inst, o.k) + ";methods=" + o.methods +
                       ";episode_len=" + std::to_string(o.episode_len) +
                       ";apps=" + o.apps;
  if (params) config += ";checkpoint=" + file_hash(o.checkpoint);
  const std::string config_hash = hex64(fnv1a64(config));

  std::vector<Dataset> datasets;
  std::vector<BenchResult> rows;
  for (Application app : apps) {
    datasets.push_back(build_dataset(o.inst, app, seed));
    const Dataset& d = datasets.back();
    BenchOptions bopt{std::string(to_string(app)), d.id, d.seeds, config_hash, g.timeout_secs,
                      o.threads};
    if (params) {
      rows.push_back(evaluate_model(*params, d.view(), o.k, o.episode_len, bopt));
      print_summary(std::cout, rows.back());
    }
    rows.push_back(run_baselines(d.view(), o.k, methods, bopt));
    print_summary(std::cout, rows.back());
  }
  std::ostringstream csv;
  write_bench_csv(csv, rows);
  write_text(dir / "bench.csv", csv.str());
  if (params) {
    const auto table = table_from_rows(rows);
    write_text(dir / "ratio.md", table.markdown);
    write_text(dir / "ratio.csv", table.csv);
    std::cout << '\n' << table.markdown;
  }
  std::vector<const Dataset*> refs;
  for (const auto& d : datasets) refs.push_back(&d);
  write_meta(dir, "bench", config, seed, refs, g);
  return 0;
}

// ---------------------------------------------------------------------------

struct SweepOptions {
  InstanceOptions inst;
  std::string methods = "greedy,greedy_ls,rls(1,0.1)";
  std::string k_list = "25,50,100,200";
  std::string checkpoint;
  std::size_t threads = 1;
};

int cmd_sweep(const GlobalOptions& g, const SweepOptions& o) {
  const auto methods = parse_methods(o.methods);
  const auto ks = parse_sizes(o.k_list);
  std::optional<QParams> params;
  if (!o.checkpoint.empty()) params = load_params(o.checkpoint);
  const std::uint64_t seed = resolve_seed(g);
  const Application app = parse_application(o.inst.app);
  const Dataset d = build_dataset(o.inst, app, seed);
  std::string config = instance_config(o.inst, 0) + ";methods=" + o.methods + ";k_list=" + o.k_list;
  if (params) config += ";checkpoint=" + file_hash(o.checkpoint);
  BenchOptions bopt{std::string(to_string(app)), d.id, d.seeds, hex64(fnv1a64(config)),
                    g.timeout_secs, o.threads};
  const auto rows = sweep_k(d.view(), methods, ks, bopt, params ? &*params : nullptr);
  const auto dir = prepare_out_dir(g);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  write_text(dir / "sweep.csv", csv.str());
  write_meta(dir, "sweep", config, seed, {&d}, g);
  std::cout << csv.str();
  return 0;
}

// ---------------------------------------------------------------------------

struct VerifyOptions {
  InstanceOptions inst;
  std::size_t k = 4;
  std::string methods = "greedy,greedy_rev,greedy_ls,rls(1,0.1)";
};

int cmd_verify(const GlobalOptions& g, VerifyOptions o) {
  if (o.inst.n > kBruteForceMaxN) {
    throw ValidationError("verify: n=" + std::to_string(o.inst.n) + " exceeds " +
                          std::to_string(kBruteForceMaxN));
  }
  if (o.k > o.inst.n) throw ValidationError("verify: k exceeds n");
  const auto methods = parse_methods(o.methods);
  const std::uint64_t seed = resolve_seed(g);
  const Application app = parse_application(o.inst.app);
  const Dataset d = build_dataset(o.inst, app, seed);

  std::vector<double> opt_values;
  for (const Oracle* inst : d.view()) {
    opt_values.push_back(brute_force_opt(*inst, o.k, Deadline::after(g.timeout_secs)).value);
  }
  const double opt_mean =
      std::accumulate(opt_values.begin(), opt_values.end(), 0.0) / static_cast<double>(opt_values.size());
  std::cout << "application " << to_string(app) << " dataset " << d.id << " k=" << o.k
            << " instances " << d.owned.size() << " mean optimum " << opt_mean << '\n';

  bool ok = true;
  std::vector<double> greedy_values;
  for (const MethodSpec& m : methods) {
    std::vector<double> values;
    double worst = std::numeric_limits<double>::infinity();
    std::size_t optimal = 0;
    for (std::size_t i = 0; i < d.owned.size(); ++i) {
      const double f = m.run(*d.owned[i], o.k, Deadline::after(g.timeout_secs)).value;
      values.push_back(f);
      const double tol = 1e-9 * std::max(1.0, std::abs(opt_values[i]));
      if (f > opt_values[i] + tol) {
        std::cout << "VIOLATION " << m.name() << " exceeds optimum on instance " << i << '\n';
        ok = false;
      }
      if (f >= opt_values[i] - tol) ++optimal;
      if (opt_values[i] != 0.0) worst = std::min(worst, f / opt_values[i]);
    }
    if (m.kind == MethodSpec::Kind::Greedy) greedy_values = values;
    if ((m.kind == MethodSpec::Kind::GreedyRev || m.kind == MethodSpec::Kind::GreedyLs) &&
        !greedy_values.empty()) {
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < greedy_values[i] - 1e-9 * std::max(1.0, std::abs(greedy_values[i]))) {
          std::cout << "VIOLATION " << m.name() << " below greedy on instance " << i << '\n';
          ok = false;
        }
      }
    }
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                        static_cast<double>(values.size());
    char buf[32];
    if (opt_mean != 0.0) {
      std::snprintf(buf, sizeof buf, "%.3f", mean / opt_mean);
    } else {
      std::snprintf(buf, sizeof buf, "n/a");
    }
    std::cout << std::left << std::setw(14) << m.name() << " ratio_to_opt " << buf
              << " worst " << (std::isfinite(worst) ? worst : 1.0) << " optimal " << optimal
              << '/' << values.size() << '\n';
  }
  std::cout << (ok ? "verify: ok" : "verify: FAILED") << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reversible local search with deep Q-learning: instances, training, "
               "evaluation and baselines",
               "rels"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--seed", g.seed, "base seed (also RELS_SEED)");
  app.add_option("--config", g.config, "training config (key=value or JSON)");
  app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str();
  app.add_option("--timeout-secs", g.timeout_secs, "per-method, per-instance time limit")
      ->check(CLI::PositiveNumber);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "write random graphs or a ratings matrix");
  gen.inst.add_to(gen_cmd, false);
  gen_cmd->add_flag("--ratings-matrix", gen.ratings, "generate a ratings file instead");
  gen_cmd->add_option("--items", gen.items, "ratings: item count");
  gen_cmd->add_option("--users", gen.users, "ratings: user count");
  gen_cmd->add_option("--density", gen.density, "ratings: fraction of rated pairs");

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "train a Q-network");
  train_cmd->add_option("--app", tr.app, "training application");
  train_cmd->add_option("--steps", tr.steps, "total environment steps");
  train_cmd->add_option("--k", tr.k, "cardinality bound");
  train_cmd->add_option("--n", tr.n, "training graph size");
  train_cmd->add_option("--set", tr.set, "extra config key=value (repeatable)");
  train_cmd->add_flag("--quiet", tr.quiet, "no progress output");

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint greedily");
  ev.inst.add_to(eval_cmd);
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--k", ev.k, "cardinality bound");
  eval_cmd->add_option("--episode-len", ev.episode_len, "steps per episode (0: 2k)");
  eval_cmd->add_option("--threads", ev.threads, "worker threads");
  eval_cmd->add_flag("--traces", ev.traces, "also write traces/trace_NNNN.csv per instance");

  BenchCmdOptions bc;
  auto* bench_cmd = app.add_subcommand("bench", "baselines, model and ratio tables");
  bc.inst.add_to(bench_cmd);
  bench_cmd->add_option("--apps", bc.apps, "comma list of applications or 'all'");
  bench_cmd->add_option("--methods", bc.methods, "greedy,greedy_rev,greedy_ls,rls(lg,la),brute")
      ->capture_default_str();
  bench_cmd->add_option("--checkpoint", bc.checkpoint, "model checkpoint for ratio tables");
  bench_cmd->add_option("--rows", bc.rows, "rebuild ratio tables from a saved bench.csv");
  bench_cmd->add_option("--k", bc.k, "cardinality bound");
  bench_cmd->add_option("--episode-len", bc.episode_len, "model steps per episode (0: 2k)");
  bench_cmd->add_option("--threads", bc.threads, "worker threads");

  SweepOptions sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "value and time over a list of k");
  sw.inst.add_to(sweep_cmd);
  sweep_cmd->add_option("--methods", sw.methods, "method list")->capture_default_str();
  sweep_cmd->add_option("--k-list", sw.k_list, "comma list of k")->capture_default_str();
  sweep_cmd->add_option("--checkpoint", sw.checkpoint, "also sweep a model");
  sweep_cmd->add_option("--threads", sw.threads, "worker threads");

  VerifyOptions vf;
  vf.inst.n = 10;
  vf.inst.count = 20;
  auto* verify_cmd = app.add_subcommand("verify", "compare methods to the exhaustive optimum");
  vf.inst.add_to(verify_cmd, false);
  verify_cmd->add_option("--k", vf.k, "cardinality bound");
  verify_cmd->add_option("--methods", vf.methods, "method list")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*gen_cmd) return cmd_gen(g, gen);
    if (*train_cmd) return cmd_train(g, tr);
    if (*eval_cmd) return cmd_eval(g, ev);
    if (*bench_cmd) return cmd_bench(g, bc);
    if (*sweep_cmd) return cmd_sweep(g, sw);
    if (*verify_cmd) return cmd_verify(g, vf);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
