#include "drc/rl/trainer.hpp"

#include "drc/nn/checkpoint.hpp"
#include "drc/rl/queue.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

namespace drc::rl {

namespace {

using Snapshot = std::shared_ptr<const nn::ParameterSet<float>>;

class SnapshotStore {
 public:
  void publish(std::int64_t version, Snapshot s) {
    std::lock_guard lock(mutex_);
    snapshots_[version] = std::move(s);
    cv_.notify_all();
  }
  /// Blocks until `version` exists; null after stop().
  Snapshot wait(std::int64_t version) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return stopped_ || snapshots_.count(version); });
    if (stopped_) return nullptr;
    return snapshots_.at(version);
  }
  void drop_before(std::int64_t version) {
    std::lock_guard lock(mutex_);
    snapshots_.erase(snapshots_.begin(), snapshots_.lower_bound(version));
  }
  void stop() {
    std::lock_guard lock(mutex_);
    stopped_ = true;
    cv_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::map<std::int64_t, Snapshot> snapshots_;
  bool stopped_ = false;
};

std::string checkpoint_name(std::int64_t update) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "update_%08lld.ckpt", static_cast<long long>(update));
  return buf;
}

}  // namespace

std::string UpdateRecord::json() const {
  nlohmann::ordered_json j;
  j["update"] = update;
  j["env_steps"] = env_steps;
  j["lr"] = stats.learning_rate;
  j["loss"] = stats.loss.total;
  j["policy_loss"] = stats.loss.policy;
  j["baseline_loss"] = stats.loss.baseline;
  j["entropy_loss"] = stats.loss.entropy;
  j["logit_l2"] = stats.loss.logit_l2;
  j["weight_l2"] = stats.loss.weight_l2;
  j["entropy"] = stats.loss.mean_entropy;
  j["grad_norm"] = stats.grad_norm;
  j["episodes"] = episodes;
  j["solved"] = solved;
  j["mean_return"] = mean_return;
  j["mean_length"] = mean_length;
  return j.dump();
}

Trainer::Trainer(net::DrcConfig net_config, env::EnvironmentFactory environments, TrainConfig config,
                 std::uint64_t seed)
    : net_(std::move(net_config)), environments_(std::move(environments)), config_(std::move(config)), seed_(seed) {
  config_.validate();
  if (!environments_) throw std::invalid_argument("Trainer: no environment factory");
}

void Trainer::set_initial(nn::ParameterSet<float> params, std::optional<nn::AdamState<float>> adam) {
  const auto shapes = net_.parameter_shapes();
  if (params.size() != shapes.size()) throw std::invalid_argument("Trainer: initial parameters do not match the network");
  for (const auto& [path, shape] : shapes) {
    if (!params.contains(path) || !(params.at(path).shape() == shape)) {
      throw std::invalid_argument("Trainer: initial parameter " + path + " missing or misshaped");
    }
  }
  initial_params_ = std::move(params);
  initial_adam_ = std::move(adam);
}

TrainResult Trainer::run(const std::filesystem::path& out_dir, const UpdateCallback& on_update) {
  const int batch = config_.batch_size;
  const int unroll = config_.unroll_length;
  const std::int64_t rounds = config_.total_updates();

  TrainResult result;
  result.params = initial_params_ ? *initial_params_ : net_.init_parameters(seed_);
  result.adam = initial_adam_ ? *initial_adam_ : nn::AdamState<float>::zeros_like(result.params);

  std::ofstream metrics, diagnostics;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir / "checkpoints");
    metrics.open(out_dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
    diagnostics.open(out_dir / "diagnostics.jsonl", std::ios::binary | std::ios::trunc);
    if (!metrics || !diagnostics) throw std::runtime_error("Trainer: cannot write to " + out_dir.string());
  }

  std::vector<std::unique_ptr<ActorSlot>> slots;
  const std::uint64_t slot_base = splitmix64(seed_);
  for (int j = 0; j < batch; ++j) {
    slots.push_back(std::make_unique<ActorSlot>(j, derive_seed(slot_base, static_cast<std::uint64_t>(j)),
                                                environments_(), net_));
  }

  SnapshotStore store;
  store.publish(0, std::make_shared<const nn::ParameterSet<float>>(result.params));
  BoundedQueue<Trajectory> queue(static_cast<std::size_t>(config_.queue_capacity));
  std::mutex error_mutex;
  std::exception_ptr actor_error;

  const int actors = std::min(config_.actors, batch);
  std::vector<std::thread> threads;
  for (int k = 0; k < actors; ++k) {
    threads.emplace_back([&, k] {
      try {
        std::vector<ActorSlot*> mine;
        for (int j = k; j < batch; j += actors) mine.push_back(slots[static_cast<std::size_t>(j)].get());
        for (std::int64_t r = 0; r < rounds; ++r) {
          const std::int64_t version = std::max<std::int64_t>(0, r - config_.snapshot_lag);
          Snapshot snap = store.wait(version);
          if (!snap) return;
          auto trajs = actor_rollout(net_, *snap, mine, unroll, ActionMode::sample);
          for (auto& t : trajs) {
            t.round = r;
            t.policy_version = version;
            if (!queue.push(std::move(t))) return;
          }
        }
      } catch (...) {
        {
          std::lock_guard lock(error_mutex);
          if (!actor_error) actor_error = std::current_exception();
        }
        queue.close();
        store.stop();
      }
    });
  }
  auto shutdown = [&] {
    queue.close();
    store.stop();
    for (auto& t : threads)
      if (t.joinable()) t.join();
  };

  const auto start = std::chrono::steady_clock::now();
  try {
    std::map<std::int64_t, std::vector<Trajectory>> pending;
    for (std::int64_t u = 0; u < rounds; ++u) {
      while (static_cast<int>(pending[u].size()) < batch) {
        auto item = queue.pop();
        if (!item) {
          std::lock_guard lock(error_mutex);
          if (actor_error) std::rethrow_exception(actor_error);
          throw std::runtime_error("Trainer: trajectory queue closed unexpectedly");
        }
        const auto round = item->round;
        pending[round].push_back(std::move(*item));
      }
      const std::size_t depth = queue.size();
      std::vector<Trajectory> current = std::move(pending[u]);
      pending.erase(u);
      std::sort(current.begin(), current.end(), [](const Trajectory& a, const Trajectory& b) { return a.slot < b.slot; });

      UpdateRecord rec;
      rec.update = u + 1;
      rec.env_steps = (u + 1) * config_.steps_per_update();
      try {
        rec.stats = learner_update(net_, result.params, result.adam, current,
                                   static_cast<double>(u * config_.steps_per_update()), config_);
      } catch (const nn::NonFiniteError& e) {
        if (!out_dir.empty()) {
          nlohmann::ordered_json dump;
          dump["update"] = u + 1;
          dump["error"] = e.what();
          std::vector<std::int64_t> versions;
          for (const auto& t : current) versions.push_back(t.policy_version);
          dump["policy_versions"] = versions;
          std::ofstream(out_dir / "nonfinite_dump.json") << dump.dump(2) << "\n";
          nn::save_checkpoint(out_dir / "nonfinite_params.ckpt", result.params, &result.adam);
        }
        throw;
      }
      double ret = 0, len = 0;
      for (const auto& t : current) {
        for (const auto& ep : t.episodes) {
          ++rec.episodes;
          rec.solved += ep.solved ? 1 : 0;
          ret += ep.episode_return;
          len += ep.length;
        }
      }
      if (rec.episodes > 0) {
        rec.mean_return = ret / rec.episodes;
        rec.mean_length = len / rec.episodes;
      }

      store.publish(u + 1, std::make_shared<const nn::ParameterSet<float>>(result.params));
      store.drop_before(u + 1 - config_.snapshot_lag);
      result.updates = u + 1;
      result.env_steps = rec.env_steps;

      if (!out_dir.empty()) {
        metrics << rec.json() << "\n";
        metrics.flush();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        nlohmann::ordered_json d;
        d["update"] = rec.update;
        d["wall_seconds"] = secs;
        d["queue_depth"] = depth;
        d["steps_per_second"] = secs > 0 ? static_cast<double>(rec.env_steps) / secs : 0.0;
        diagnostics << d.dump() << "\n";
        if (config_.checkpoint_every > 0 && rec.update % config_.checkpoint_every == 0) {
          nn::save_checkpoint(out_dir / "checkpoints" / checkpoint_name(rec.update), result.params, &result.adam);
        }
      }
      if (on_update && !on_update(rec, result.params)) {
        result.stopped_early = u + 1 < rounds;
        break;
      }
    }
  } catch (...) {
    shutdown();
    throw;
  }
  shutdown();
  if (!out_dir.empty()) nn::save_checkpoint(out_dir / "final.ckpt", result.params, &result.adam);
  return result;
}

}  // namespace drc::rl
