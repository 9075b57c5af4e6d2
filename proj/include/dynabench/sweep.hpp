#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dynabench/expert.hpp"
#include "dynabench/metrics.hpp"

namespace dynabench::metrics {

/// Builds a fresh controller for one episode. Called concurrently, so it must
/// not share mutable state between the controllers it returns.
using ControllerFactory = std::function<std::unique_ptr<sim::Controller>(const expert::Scenario&)>;

struct EvalOptions {
  int episodes = 100;
  std::uint64_t base_seed = 0;
  expert::ExpertConfig scenario_cfg;  ///< governs grasp-pose sampling and synchronization
  sim::RolloutOptions rollout;
};

/// Scenario `index` of an evaluation with `base_seed`; independent of alpha
/// except through the trajectory cap.
expert::Scenario evaluation_scenario(const sim::TaskSpec& task, const EvalOptions& options, int index);

/// Runs options.episodes closed-loop episodes in parallel, in index order.
std::vector<Outcome> evaluate(const sim::TaskSpec& task, const ControllerFactory& factory, const EvalOptions& options);

/// One report row per alpha, each using the same base seed.
std::vector<ReportRow> sweep_alpha(const ControllerFactory& factory, const sim::TaskSpec& task_template,
                                   std::span<const double> alphas, const EvalOptions& options);

}  // namespace dynabench::metrics
