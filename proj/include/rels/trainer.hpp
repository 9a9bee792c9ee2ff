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
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rels/env.hpp"
#include "rels/errors.hpp"
#include "rels/hash.hpp"
#include "rels/instances.hpp"
#include "rels/qnet.hpp"
#include "rels/rng.hpp"

namespace rels {

struct TrainConfig {
  std::uint64_t total_steps = 1'000'000;
  InstanceSpec graph = InstanceSpec::defaults_for(Application::MaxCut, 40);
  std::size_t k = 30;
  std::size_t episode_len = 0;  // 0: 2k
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_decay_fraction = 0.1;
  double gamma = 0.95;
  std::size_t buffer_capacity = 50'000;
  std::size_t batch_size = 64;
  std::size_t learn_every = 4;
  std::size_t target_sync = 1'000;  // learner steps between hard copies
  std::size_t warmup = 1'000;
  double lr = 1e-4;
  double grad_clip = 1.0;
  std::size_t width = kDefaultWidth;
  std::uint64_t seed = 0;
  std::uint64_t checkpoint_every = 0;  // env steps; 0 writes only the final one
  std::uint64_t log_every = 1;

  std::size_t horizon() const { return episode_len ? episode_len : 2 * k; }

  void validate() const {
    const auto positive = [](auto v, const char* name) {
      if (!(v > 0)) throw ValidationError(std::string("config: ") + name + " must be positive");
    };
    positive(total_steps, "steps");
    positive(graph.n, "n");
    positive(k, "k");
    positive(batch_size, "batch_size");
    positive(buffer_capacity, "buffer_capacity");
    positive(learn_every, "learn_every");
    positive(target_sync, "target_sync");
    positive(lr, "lr");
    positive(width, "width");
    positive(log_every, "log_every");
    if (k > graph.n) throw ValidationError("config: k exceeds n");
    for (double e : {eps_start, eps_end}) {
      if (!(e >= 0.0 && e <= 1.0)) throw ValidationError("config: epsilon outside [0, 1]");
    }
    if (!(eps_decay_fraction >= 0.0 && eps_decay_fraction <= 1.0)) {
      throw ValidationError("config: eps_decay_fraction outside [0, 1]");
    }
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("config: gamma outside [0, 1)");
  }

  // Canonical key=value text; parse_config(to_text()) reproduces the config.
  std::string to_text() const {
    std::ostringstream os;
    os << "steps=" << total_steps << "\napp=" << to_string(graph.app)
       << "\ngraph=" << to_string(graph.kind) << "\nn=" << graph.n
       << "\np=" << detail::format_double(graph.p) << "\nm_attach=" << graph.m_attach
       << "\nweights=" << to_string(graph.weights) << "\nq=" << detail::format_double(graph.q)
       << "\nlambda=" << detail::format_double(graph.lambda) << "\nk=" << k
       << "\nepisode_len=" << horizon() << "\neps_start=" << detail::format_double(eps_start)
       << "\neps_end=" << detail::format_double(eps_end)
       << "\neps_decay_fraction=" << detail::format_double(eps_decay_fraction)
       << "\ngamma=" << detail::format_double(gamma) << "\nbuffer_capacity=" << buffer_capacity
       << "\nbatch_size=" << batch_size << "\nlearn_every=" << learn_every
       << "\ntarget_sync=" << target_sync << "\nwarmup=" << warmup
       << "\nlr=" << detail::format_double(lr) << "\ngrad_clip=" << detail::format_double(grad_clip)
       << "\nwidth=" << width << "\nseed=" << seed << "\ncheckpoint_every=" << checkpoint_every
       << "\nlog_every=" << log_every << '\n';
    return os.str();
  }

  std::string hash() const { return hex64(fnv1a64(to_text())); }
};

namespace detail {

template <typename T>
T config_number(const std::string& key, const std::string& value) {
  T out{};
  if (!parse_number(std::string_view(value), out)) {
    throw ValidationError("config: bad value '" + value + "' for " + key);
  }
  return out;
}

}  // namespace detail

// Applies one key=value setting. Unknown keys are rejected.
inline void apply_setting(TrainConfig& c, const std::string& key, const std::string& value) {
  using detail::config_number;
  if (key == "steps" || key == "total_steps") c.total_steps = config_number<std::uint64_t>(key, value);
  else if (key == "app") {
    const auto app = parse_application(value);
    const auto defaults = InstanceSpec::defaults_for(app, c.graph.n);
    c.graph.app = app;
    c.graph.kind = defaults.kind;
    c.graph.weights = defaults.weights;
  }
  else if (key == "graph") c.graph.kind = parse_graph_kind(value);
  else if (key == "n") c.graph.n = config_number<std::size_t>(key, value);
  else if (key == "p") c.graph.p = config_number<double>(key, value);
  else if (key == "m_attach") c.graph.m_attach = config_number<std::size_t>(key, value);
  else if (key == "weights") c.graph.weights = parse_weight_scheme(value);
  else if (key == "q") c.graph.q = config_number<double>(key, value);
  else if (key == "lambda") c.graph.lambda = config_number<double>(key, value);
  else if (key == "k") c.k = config_number<std::size_t>(key, value);
  else if (key == "episode_len") c.episode_len = config_number<std::size_t>(key, value);
  else if (key == "eps_start") c.eps_start = config_number<double>(key, value);
  else if (key == "eps_end") c.eps_end = config_number<double>(key, value);
  else if (key == "eps_decay_fraction") c.eps_decay_fraction = config_number<double>(key, value);
  else if (key == "gamma") c.gamma = config_number<double>(key, value);
  else if (key == "buffer_capacity") c.buffer_capacity = config_number<std::size_t>(key, value);
  else if (key == "batch_size") c.batch_size = config_number<std::size_t>(key, value);
  else if (key == "learn_every") c.learn_every = config_number<std::size_t>(key, value);
  else if (key == "target_sync") c.target_sync = config_number<std::size_t>(key, value);
  else if (key == "warmup") c.warmup = config_number<std::size_t>(key, value);
  else if (key == "lr") c.lr = config_number<double>(key, value);
  else if (key == "grad_clip") c.grad_clip = config_number<double>(key, value);
  else if (key == "width") c.width = config_number<std::size_t>(key, value);
  else if (key == "seed") c.seed = config_number<std::uint64_t>(key, value);
  else if (key == "checkpoint_every") c.checkpoint_every = config_number<std::uint64_t>(key, value);
  else if (key == "log_every") c.log_every = config_number<std::uint64_t>(key, value);
  else throw ValidationError("config: unknown key '" + key + "'");
}

// Accepts "key = value" lines ('#' comments) or a flat JSON object.
inline TrainConfig parse_config(const std::string& text, TrainConfig base = {}) {
  const auto body = detail::trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("config: ") + e.what(), 0);
    }
    for (const auto& [key, value] : j.items()) {
      apply_setting(base, key, value.is_string() ? value.get<std::string>() : value.dump());
    }
    return base;
  }
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto l = detail::trim(line);
    if (l.empty() || l.front() == '#') continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) throw ParseError("config: expected key=value", line_no);
    apply_setting(base, std::string(detail::trim(l.substr(0, eq))),
                  std::string(detail::trim(l.substr(eq + 1))));
  }
  return base;
}

inline TrainConfig load_config(const std::string& path, TrainConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

// RELS_SEED, when set, replaces the configured seed.
inline void apply_seed_override(TrainConfig& c) {
  if (const char* s = std::getenv("RELS_SEED"); s && *s) {
    c.seed = detail::config_number<std::uint64_t>("RELS_SEED", s);
  }
}

// Linear from eps_start at t = 0 to eps_end at t = eps_decay_fraction *
// total_steps, constant afterwards.
inline double epsilon(const TrainConfig& c, std::uint64_t t) {
  const double end = c.eps_decay_fraction * static_cast<double>(c.total_steps);
  if (end <= 0.0 || static_cast<double>(t) >= end) return c.eps_end;
  const double frac = static_cast<double>(t) / end;
  return c.eps_start + (c.eps_end - c.eps_start) * frac;
}

struct Transition {
  FeatureMatrix features;
  Node action = 0;
  double reward = 0.0;
  FeatureMatrix next_features;
  bool done = false;
};

// Fixed-capacity FIFO replay memory with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
    if (capacity_ == 0) throw ValidationError("replay buffer: capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
  }

  void push(Transition t) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::vector<const Transition*> sample(std::size_t count) {
    if (items_.empty()) throw std::logic_error("replay buffer: sample from empty buffer");
    std::vector<const Transition*> out(count);
    for (auto& slot : out) slot = &items_[rng_.index(items_.size())];
    return out;
  }

  // Slot indices only, for distribution checks.
  std::size_t sample_index() {
    if (items_.empty()) throw std::logic_error("replay buffer: sample from empty buffer");
    return rng_.index(items_.size());
  }

  // i = 0 is the oldest stored transition.
  const Transition& at(std::size_t i) const {
    return items_[(head_ + i) % items_.size()];
  }

  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t head_ = 0;  // oldest slot once full
  Rng rng_;
};

// Double-DQN targets: the online net picks the next action, the target net
// values it. Terminal transitions do not bootstrap.
inline std::vector<double> compute_targets(const QParams& online, const QParams& target,
                                           std::span<const Transition* const> batch,
                                           double gamma) {
  if (batch.empty()) throw ValidationError("compute_targets: empty batch");
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& tr = *batch[i];
    y[i] = tr.reward;
    if (tr.done || gamma == 0.0) continue;
    const Node next = argmax_lowest(forward(online, tr.next_features));
    y[i] += gamma * forward(target, tr.next_features)[next];
  }
  return y;
}

struct TrainResult {
  QParams params;
  std::string checkpoint_path;
  std::string log_path;
  std::uint64_t episodes = 0;
  std::uint64_t learner_steps = 0;
  double final_mean_f_best = 0.0;  // over the last 50 episodes
};

inline constexpr std::size_t kReturnWindow = 50;

// Epsilon-greedy Double-DQN on freshly generated graphs, one per episode.
// Writes out_dir/train_log.csv, out_dir/checkpoint_final.bin (plus periodic
// checkpoint_<step>.bin) and out_dir/train_meta.json.
inline TrainResult train(const TrainConfig& cfg, const std::string& out_dir,
                         std::ostream* progress = nullptr) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  const std::string log_path = (std::filesystem::path(out_dir) / "train_log.csv").string();
  std::ofstream log(log_path);
  if (!log) throw std::runtime_error("cannot write training log '" + log_path + "'");
  log << "step,episode,episode_return,f_best,mean_f_best_50,epsilon,loss\n";

  Rng action_rng(derive_seed(cfg.seed, 1));
  QParams online = init_params(cfg.width, derive_seed(cfg.seed, 2));
  QParams target = online;
  AdamState adam = AdamState::for_params(online);
  ReplayBuffer buffer(cfg.buffer_capacity, derive_seed(cfg.seed, 3));

  TrainResult result;
  std::deque<double> recent_best;
  std::optional<double> last_loss;
  std::uint64_t t = 0;
  const std::size_t horizon = cfg.horizon();

  const auto checkpoint = [&](const std::string& name) {
    const auto path = (std::filesystem::path(out_dir) / name).string();
    save_params(online, path);
    return path;
  };

  while (t < cfg.total_steps) {
    const std::uint64_t episode = result.episodes;
    const auto proto = make_instance(cfg.graph, derive_seed(cfg.seed, 1'000'000 + episode));
    Environment env(*proto, cfg.k, horizon);
    FeatureMatrix x = env.features();
    double episode_return = 0.0;
    while (!env.done() && t < cfg.total_steps) {
      const double eps = epsilon(cfg, t);
      Node a;
      if (action_rng.uniform() < eps) {
        a = static_cast<Node>(action_rng.index(env.size()));
      } else {
        a = argmax_lowest(forward(online, x));
      }
      const StepResult step = env.step(a);
      episode_return += step.reward;
      FeatureMatrix next = env.features();
      buffer.push({x, a, step.reward, next, step.done});
      x = std::move(next);
      ++t;

      if (t % cfg.learn_every == 0 && buffer.size() >= cfg.warmup) {
        const auto batch = buffer.sample(cfg.batch_size);
        const auto y = compute_targets(online, target, batch, cfg.gamma);
        std::vector<TrainingSample> samples(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
          samples[i] = {&batch[i]->features, batch[i]->action, y[i]};
        }
        auto lg = loss_and_grad(online, samples);
        if (!std::isfinite(lg.loss)) {
          throw std::runtime_error("training diverged: non-finite loss at step " +
                                   std::to_string(t) + ", episode " +
                                   std::to_string(episode) + ", learner step " +
                                   std::to_string(result.learner_steps));
        }
        adam_step(online, std::move(lg.grad), adam, cfg.lr, cfg.grad_clip);
        last_loss = lg.loss;
        ++result.learner_steps;
        if (result.learner_steps % cfg.target_sync == 0) target = online;
      }

      if (t % cfg.log_every == 0) {
        log << t << ',' << episode << ',' << detail::format_double(episode_return) << ','
            << detail::format_double(env.f_best()) << ',';
        if (!recent_best.empty()) {
          log << detail::format_double(
              std::accumulate(recent_best.begin(), recent_best.end(), 0.0) /
              static_cast<double>(recent_best.size()));
        }
        log << ',' << detail::format_double(eps) << ',';
        if (last_loss) log << detail::format_double(*last_loss);
        log << '\n';
      }
      if (cfg.checkpoint_every && t % cfg.checkpoint_every == 0) {
        checkpoint("checkpoint_" + std::to_string(t) + ".bin");
      }
    }
    recent_best.push_back(env.f_best());
    if (recent_best.size() > kReturnWindow) recent_best.pop_front();
    ++result.episodes;
    if (progress && result.episodes % 500 == 0) {
      *progress << "step " << t << "/" << cfg.total_steps << " episodes " << result.episodes
                << " mean f_best(50) "
                << std::accumulate(recent_best.begin(), recent_best.end(), 0.0) /
                       static_cast<double>(recent_best.size())
                << " eps " << epsilon(cfg, t) << " loss " << last_loss.value_or(0.0) << '\n';
    }
  }
  if (!log) throw std::runtime_error("write failed for training log '" + log_path + "'");

  result.final_mean_f_best =
      recent_best.empty() ? 0.0
                          : std::accumulate(recent_best.begin(), recent_best.end(), 0.0) /
                                static_cast<double>(recent_best.size());
  result.checkpoint_path = checkpoint("checkpoint_final.bin");
  result.log_path = log_path;
  {
    nlohmann::json meta;
    meta["code_version"] = kCodeVersion;
    meta["config_hash"] = cfg.hash();
    meta["config"] = cfg.to_text();
    meta["seed"] = cfg.seed;
    meta["dataset"] = cfg.graph.describe();
    meta["episodes"] = result.episodes;
    meta["learner_steps"] = result.learner_steps;
    meta["final_mean_f_best_50"] = result.final_mean_f_best;
    meta["actors"] = "single-threaded (deterministic)";
    std::ofstream(std::filesystem::path(out_dir) / "train_meta.json") << meta.dump(2) << '\n';
  }
  result.params = std::move(online);
  return result;
}

}  // namespace rels
