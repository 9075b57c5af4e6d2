#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include "dynabench/baselines.hpp"
#include "dynabench/container.hpp"
#include "dynabench/harness.hpp"

namespace dynabench::harness {
namespace {

namespace fs = std::filesystem;

void log_config(const RunConfig& cfg, std::ostream& log, const fs::path& dir) {
  const std::string text = format_config(cfg);
  log << "# resolved config\n" << text << std::flush;
  fs::create_directories(dir);
  const std::string name = "resolved_config.txt";
  write_file_atomic(dir / name, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

fs::path cache_dir(const RunConfig& cfg) {
  return flow::FlowCache::resolve_dir(cfg.cache_dir.empty() ? fs::path(cfg.data_dir) / "flow_cache" : fs::path(cfg.cache_dir));
}

std::vector<int> eval_levels(const RunConfig& cfg) { return cfg.levels.empty() ? std::vector<int>{cfg.level} : cfg.levels; }

std::vector<double> eval_alphas(const RunConfig& cfg) {
  return cfg.alphas.empty() ? std::vector<double>{cfg.alpha} : cfg.alphas;
}

metrics::ControllerFactory factory_for(const RunConfig& cfg, const std::string& policy) {
  if (policy == "expert") {
    const expert::ExpertConfig ecfg = expert_config(cfg);
    return [ecfg](const expert::Scenario& s) { return std::make_unique<expert::ScriptedExpert>(s, ecfg); };
  }
  if (policy == "reactive")
    return [](const expert::Scenario& s) { return std::make_unique<policy::ReactivePursuit>(s.task); };
  if (policy == "oracle")
    return [](const expert::Scenario& s) { return std::make_unique<policy::OraclePursuit>(s.task, s.traj); };
  if (!fs::exists(policy))
    throw ConfigError("unknown policy '" + policy + "' (expected expert-replay, expert, reactive, oracle or a checkpoint file)");
  auto ckpt = std::make_shared<const policy::PolicyCheckpoint>(policy::read_checkpoint(policy));
  const int replan = cfg.replan_every;
  return [ckpt, replan](const expert::Scenario& s) { return std::make_unique<policy::ChunkPolicy>(*ckpt, s.task, replan); };
}

EvalResult replay_dataset(const RunConfig& cfg, std::ostream& log) {
  const std::vector<Episode> episodes = load_dataset(cfg.data_dir);
  if (episodes.empty()) throw ConfigError("dataset in " + cfg.data_dir + " has no episodes");
  EvalResult result{"expert-replay", {}, {}};
  // One row per distinct task instance, in first-seen order.
  std::vector<std::pair<sim::TaskSpec, std::vector<Outcome>>> groups;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const Episode& ep = episodes[i];
    const Outcome o = sim::replay_actions(ep.task, ep.traj, ep.seed, ep.actions());
    if (o != ep.outcome) result.failures.push_back("episode " + std::to_string(i) + " seed=" + std::to_string(ep.seed) + " replayed differently");
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == ep.task; });
    if (it == groups.end()) {
      groups.push_back({ep.task, {}});
      it = groups.end() - 1;
    }
    it->second.push_back(o);
  }
  for (const auto& [task, outcomes] : groups)
    result.rows.push_back(metrics::summarize(task.name, static_cast<int>(task.level), task.alpha, outcomes));
  for (const auto& r : result.rows) log << "expert-replay " << metrics::format_row(r) << "\n";
  return result;
}

}  // namespace

expert::DatasetManifest cmd_gen(const RunConfig& cfg, std::ostream& log) {
  log_config(cfg, log, cfg.data_dir);
  expert::DatasetRequest req;
  req.tasks = {task_spec(cfg)};
  req.per_task_count = cfg.episodes;
  req.cfg = expert_config(cfg);
  req.seed = cfg.seed;
  req.record = {cfg.views, {cfg.width, cfg.height}, cfg.mask_stride};
  req.out_dir = cfg.data_dir;
  expert::DatasetManifest manifest = expert::generate_dataset(req);
  for (const auto& s : manifest.stats) {
    log << "task " << s.task << ": " << s.accepted << "/" << s.draws << " draws accepted, " << s.rollouts
        << " rollouts, acceptance " << s.acceptance_rate() << "\n";
    if (!s.failed_seeds.empty()) {
      log << "failed draw seeds:";
      for (auto seed : s.failed_seeds) log << " " << seed;
      log << "\n";
    }
  }
  return manifest;
}

std::vector<Episode> load_dataset(const fs::path& data_dir) {
  const fs::path manifest_path = data_dir / expert::kManifestName;
  if (!fs::exists(manifest_path)) throw ConfigError("no dataset manifest at " + manifest_path.string());
  const expert::DatasetManifest manifest = read_manifest(manifest_path);
  std::vector<Episode> episodes(manifest.episodes.size());
  std::vector<std::string> errors(episodes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    try {
      episodes[i] = read_episode(data_dir / manifest.episodes[i].path);
    } catch (const std::exception& e) {
      errors[i] = manifest.episodes[i].path + ": " + e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw ConfigError("cannot load episode " + e);
  return episodes;
}

TrainArtifacts cmd_train(const RunConfig& cfg, std::ostream& log) {
  log_config(cfg, log, cfg.out_dir);
  const std::vector<Episode> episodes = load_dataset(cfg.data_dir);
  if (episodes.empty()) throw ConfigError("dataset in " + cfg.data_dir + " has no episodes");
  const policy::TrainConfig tcfg = train_config(cfg);
  flow::FlowCache cache(cache_dir(cfg), tcfg.flow);
  log << "training on " << episodes.size() << " episodes, flow cache " << cache.dir().string() << "\n";
  const policy::TrainResult res = policy::train_bc(episodes, tcfg, &cache, fs::weakly_canonical(cfg.data_dir).string());

  TrainArtifacts out;
  out.checkpoint = fs::path(cfg.out_dir) / "policy.dpp";
  out.loss_csv = fs::path(cfg.out_dir) / "loss.csv";
  policy::PolicyCheckpoint ckpt{res.params, tcfg.history, tcfg.history_stride, tcfg.future_stride,
                                episodes[0].resolution, tcfg.flow};
  policy::write_checkpoint(out.checkpoint, ckpt);
  policy::write_loss_csv(out.loss_csv, res.curve);
  out.initial_loss = res.curve.front().total;
  out.final_loss = res.curve.back().total;
  log << "loss " << out.initial_loss << " -> " << out.final_loss << " over " << res.curve.size() << " steps; cache hits "
      << cache.hits() << ", misses " << cache.misses() << "\n";
  return out;
}

EvalResult cmd_eval(const RunConfig& cfg, const std::string& policy, std::ostream& log) {
  log_config(cfg, log, cfg.out_dir);
  if (policy == "expert-replay") return replay_dataset(cfg, log);

  const metrics::ControllerFactory factory = factory_for(cfg, policy);
  metrics::EvalOptions opt = eval_options(cfg);
  if (fs::exists(policy)) {
    const auto res = policy::read_checkpoint(policy).resolution;
    opt.rollout.resolution = res;
  }
  EvalResult result{policy, {}, {}};
  sim::TaskSpec task = task_spec(cfg);
  for (int level : eval_levels(cfg)) {
    task.level = traj::level_from_int(level);
    for (double alpha : eval_alphas(cfg)) {
      task.alpha = alpha;
      try {
        const auto outcomes = metrics::evaluate(task, factory, opt);
        result.rows.push_back(metrics::summarize(task.name, level, alpha, outcomes));
        log << policy << " " << metrics::format_row(result.rows.back()) << "\n" << std::flush;
      } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "level=" << level << " alpha=" << alpha << " eval_seed=" << cfg.eval_seed << ": " << e.what();
        result.failures.push_back(msg.str());
        log << "FAILED " << msg.str() << "\n";
      }
    }
  }
  return result;
}

void write_eval_csv(std::ostream& os, const EvalResult& result) {
  os << kEvalHeader << "\n";
  for (const auto& row : result.rows) os << result.policy << "," << metrics::format_row(row) << "\n";
}

std::string cmd_report(const std::vector<fs::path>& inputs) {
  if (inputs.empty()) throw ConfigError("report needs at least one CSV");
  struct Row {
    std::string policy;
    double alpha;
    int level;
    std::string line;
  };
  std::vector<Row> rows;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::string line;
    std::uint64_t offset = 0;
    if (!std::getline(in, line) || line != kEvalHeader)
      throw ParseError(path.string() + ": expected header '" + kEvalHeader + "'", 0);
    offset += line.size() + 1;
    while (std::getline(in, line)) {
      if (line.empty()) {
        offset += 1;
        continue;
      }
      std::vector<std::string> cells;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
      if (cells.size() != 10) throw ParseError(path.string() + ": expected 10 columns", offset);
      try {
        rows.push_back({cells[0], std::stod(cells[3]), std::stoi(cells[2]), line});
      } catch (const std::exception&) {
        throw ParseError(path.string() + ": malformed level or alpha", offset);
      }
      offset += line.size() + 1;
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.policy, a.alpha, a.level) < std::tie(b.policy, b.alpha, b.level);
  });
  std::string out = std::string(kEvalHeader) + "\n";
  for (const auto& r : rows) out += r.line + "\n";
  return out;
}

}  // namespace dynabench::harness
