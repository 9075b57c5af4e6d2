#include <algorithm>
#include <stdexcept>

#include "dynabench/sweep.hpp"

namespace dynabench::metrics {

expert::Scenario evaluation_scenario(const sim::TaskSpec& task, const EvalOptions& options, int index) {
  Rng rng(Rng::mix_seed(options.base_seed, static_cast<std::uint64_t>(index)));
  return expert::sample_scenario(task, options.scenario_cfg, rng);
}

std::vector<Outcome> evaluate(const sim::TaskSpec& task, const ControllerFactory& factory, const EvalOptions& options) {
  if (options.episodes < 1) throw DomainError("evaluation needs at least one episode");
  std::vector<Outcome> outcomes(options.episodes);
  std::vector<std::string> errors(options.episodes);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < options.episodes; ++i) {
    try {
      const expert::Scenario sc = evaluation_scenario(task, options, i);
      auto controller = factory(sc);
      outcomes[i] = sim::run_episode(sc.task, sc.traj, sc.world_seed, *controller, options.rollout);
    } catch (const std::exception& e) {
      errors[i] = "episode " + std::to_string(i) + ": " + e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);
  return outcomes;
}

std::vector<ReportRow> sweep_alpha(const ControllerFactory& factory, const sim::TaskSpec& task_template,
                                   std::span<const double> alphas, const EvalOptions& options) {
  if (alphas.empty()) throw DomainError("sweep_alpha needs at least one alpha");
  if (!std::is_sorted(alphas.begin(), alphas.end())) throw DomainError("sweep_alpha expects ascending alphas");
  std::vector<ReportRow> rows;
  for (double alpha : alphas) {
    sim::TaskSpec task = task_template;
    task.alpha = alpha;
    const auto outcomes = evaluate(task, factory, options);
    rows.push_back(summarize(task.name, static_cast<int>(task.level), alpha, outcomes));
  }
  return rows;
}

}  // namespace dynabench::metrics
