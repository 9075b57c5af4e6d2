#include <cstdio>
#include <stdexcept>
#include <string>

#include "dynabench/container.hpp"
#include "dynabench/expert.hpp"

namespace dynabench::expert {
namespace {

constexpr int kMaxScenarioTries = 500;

bool path_stays_in_view(const sim::TaskSpec& task, const traj::TrajectorySpec& spec, int last_step) {
  for (int k = 0; k <= last_step; ++k)
    if (!task.fov.contains(traj::position_at(spec, k * task.dt))) return false;
  return true;
}

sim::TaskSpec randomize(const sim::TaskSpec& task, Rng& rng) {
  sim::TaskSpec out = task;
  out.clutter_count = rng.uniform_int(0, 4);
  out.object_radius = task.object_radius * rng.uniform(0.7, 1.3);
  for (auto& h : out.home) h += Vec2{rng.uniform(-0.03, 0.03), rng.uniform(-0.03, 0.03)};
  return out;
}

}  // namespace

Scenario sample_scenario(const sim::TaskSpec& task, const ExpertConfig& cfg, Rng& rng) {
  task.validate();
  cfg.validate(task);
  const Rect grasp_region = task.fov.scaled(cfg.grasp_region);
  for (int tries = 0; tries < kMaxScenarioTries; ++tries) {
    Scenario sc;
    sc.task = task;
    sc.grasp_pose = rng.uniform_in(grasp_region);
    sc.t_exec = dry_run(task, cfg, sc.grasp_pose);
    const auto sampler = traj::SamplerConfig::with_alpha(task.alpha, task.fov, rng.next_u64());
    auto spec = traj::sample(task.level, sampler, task.t_max);
    sc.world_seed = rng.next_u64();
    if (sc.t_exec > spec.total_duration) continue;
    sc.traj = traj::back_calculate_initial(spec, sc.t_exec, sc.grasp_pose);
    const int close_step = plan_approach(task, cfg, task.home[0], sc.grasp_pose).close_step;
    if (!path_stays_in_view(task, sc.traj, close_step + 1)) continue;
    return sc;
  }
  throw std::runtime_error("could not sample a trajectory that stays in view before the grasp");
}

Episode record_episode(const Scenario& scenario, sim::Controller& controller, const RecordOptions& record) {
  if (record.mask_stride < 1) throw DomainError("mask_stride must be >= 1");
  const sim::TaskSpec& task = scenario.task;
  Episode ep;
  ep.task = task;
  ep.traj = scenario.traj;
  ep.seed = scenario.world_seed;
  ep.views = record.views;
  ep.resolution = record.resolution;
  ep.mask_stride = record.mask_stride;
  ep.grasp_pose = scenario.grasp_pose;
  ep.t_exec = scenario.t_exec;

  sim::WorldState state = sim::reset(task, scenario.traj, scenario.world_seed);
  while (!state.terminal) {
    StepRecord rec;
    sim::Observation obs = sim::observe(state, task, record.views, record.resolution);
    if (state.step % record.mask_stride == 0)
      for (int v = 0; v < record.views; ++v) rec.masks.push_back(sim::ground_truth_mask(state, task, v, record.resolution));
    rec.proprio = encode_proprio(state);
    rec.object_pose = state.object.pose;
    const sim::Action action = controller.act(obs);
    rec.action = encode_action(action);
    rec.frames = std::move(obs.frames);
    ep.steps.push_back(std::move(rec));
    state = sim::step(state, action, task, scenario.traj).state;
  }
  ep.outcome = *sim::check_termination(state, task);
  return ep;
}

SynthesisResult synthesize_episode(const sim::TaskSpec& task, const ExpertConfig& cfg, Rng& rng,
                                   const RecordOptions& record) {
  cfg.validate(task);
  SynthesisResult result;
  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    const sim::TaskSpec instance = cfg.randomized ? randomize(task, rng) : task;
    ++result.attempts;
    Scenario sc;
    try {
      sc = sample_scenario(instance, cfg, rng);
    } catch (const std::runtime_error&) {
      continue;
    }
    ScriptedExpert expert(sc, cfg);
    Episode ep = record_episode(sc, expert, record);
    if (ep.outcome.success) {
      result.episode = std::move(ep);
      break;
    }
  }
  return result;
}

std::uint64_t draw_seed(std::uint64_t seed, std::size_t task_index, std::size_t index) {
  return Rng::mix_seed(Rng::mix_seed(seed, task_index), index);
}

DatasetManifest generate_dataset(const DatasetRequest& request) {
  if (request.per_task_count < 0) throw DomainError("per_task_count must be >= 0");
  DatasetManifest manifest;
  manifest.seed = request.seed;
  const std::size_t per_task = static_cast<std::size_t>(request.per_task_count);
  const std::size_t total = request.tasks.size() * per_task;
  if (total == 0) return manifest;

  std::filesystem::create_directories(request.out_dir);
  std::vector<SynthesisResult> results(total);
  std::vector<std::string> paths(total);
  std::vector<std::string> errors(total);

#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t ti = i / per_task;
    const std::size_t di = i % per_task;
    try {
      Rng rng(draw_seed(request.seed, ti, di));
      results[i] = synthesize_episode(request.tasks[ti], request.cfg, rng, request.record);
      if (results[i].episode) {
        char name[64];
        std::snprintf(name, sizeof name, "t%zu-%05zu.dmb", ti, di);
        paths[i] = name;
        harness::write_episode(request.out_dir / name, *results[i].episode);
        results[i].episode.reset();
      }
    } catch (const std::exception& e) {
      errors[i] = "episode " + std::to_string(i) + ": " + e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);

  for (std::size_t ti = 0; ti < request.tasks.size(); ++ti) {
    TaskStats stats;
    stats.task = request.tasks[ti].name;
    for (std::size_t di = 0; di < per_task; ++di) {
      const std::size_t i = ti * per_task + di;
      ++stats.draws;
      stats.rollouts += results[i].attempts;
      if (!paths[i].empty()) {
        ++stats.accepted;
        manifest.episodes.push_back({paths[i], stats.task, draw_seed(request.seed, ti, di)});
      } else {
        stats.failed_seeds.push_back(draw_seed(request.seed, ti, di));
      }
    }
    manifest.stats.push_back(stats);
  }
  harness::write_manifest(request.out_dir / kManifestName, manifest);
  return manifest;
}

}  // namespace dynabench::expert
