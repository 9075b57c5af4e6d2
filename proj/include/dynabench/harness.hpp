#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dynabench/expert.hpp"
#include "dynabench/metrics.hpp"
#include "dynabench/policy.hpp"
#include "dynabench/sweep.hpp"

/// Run configuration and the gen / train / eval / report commands.
namespace dynabench::harness {

/// Everything a run needs. Config files use `key = value` lines with `#`
/// comments; keys are the member names below. Lists are comma separated.
/// Defaults match the library defaults.
struct RunConfig {
  // task
  std::string task = "intercept";
  std::string taxonomy = "interception";  ///< interception | tracking
  double hold_window = 1.0;
  int level = 1;
  double alpha = 0.1;
  double dt = 0.05;
  double t_max = 8.0;
  double contact_radius = 0.04;
  double lift_height_proxy = 0.05;
  double a_max = 0.5;
  int camera_latency = 0;
  int clutter_count = 0;
  bool dual_arm = false;

  // expert and dataset
  double approach_speed = 0.15;
  double approach_accel = 0.6;
  int settle_steps = 2;
  int max_retries = 20;
  double preclose_factor = 2.0;
  bool randomized = false;
  int episodes = 200;  ///< demonstrations per task for gen
  int views = 1;
  int width = 64;
  int height = 64;
  int mask_stride = 1;
  std::uint64_t seed = 0;

  // flow
  int flow_levels = 3;
  int flow_window = 9;
  int flow_iterations = 3;
  int flow_poly_n = 5;
  double flow_poly_sigma = 1.1;
  double flow_mag_percentile = 95.0;
  double flow_zero_threshold = 0.1;

  // training
  int chunk = 15;
  int history = 4;
  int history_stride = 4;
  int queries = 4;
  int future_stride = 4;
  double lambda = 0.05;
  int hidden = 64;
  double lr = 1e-4;
  double weight_decay = 1e-8;
  double warmup_fraction = 0.05;
  int epochs = 30;
  int batch_size = 64;
  int replan_every = 5;

  // evaluation
  int eval_episodes = 100;
  std::uint64_t eval_seed = 1000;
  std::vector<double> alphas;  ///< empty: evaluate at `alpha` only
  std::vector<int> levels;     ///< empty: evaluate at `level` only

  // paths
  std::string data_dir = "data";
  std::string out_dir = "runs";
  std::string cache_dir;  ///< empty: DYNABENCH_CACHE or the default location

  bool operator==(const RunConfig&) const = default;
};

/// Throws ConfigError naming the line for unknown keys, malformed values or
/// duplicates; validates the result.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
/// Rejects values that the task, expert or trainer would refuse.
void validate(const RunConfig& cfg);
/// Every key with its resolved value, in declaration order; parses back to
/// an equal config.
std::string format_config(const RunConfig& cfg);

sim::TaskSpec task_spec(const RunConfig& cfg);
expert::ExpertConfig expert_config(const RunConfig& cfg);
flow::FlowParams flow_params(const RunConfig& cfg);
policy::TrainConfig train_config(const RunConfig& cfg);
metrics::EvalOptions eval_options(const RunConfig& cfg);

/// Synthesizes the dataset into cfg.data_dir.
expert::DatasetManifest cmd_gen(const RunConfig& cfg, std::ostream& log);

/// Loads every episode listed in the manifest under `data_dir`.
std::vector<Episode> load_dataset(const std::filesystem::path& data_dir);

struct TrainArtifacts {
  std::filesystem::path checkpoint;
  std::filesystem::path loss_csv;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Trains on the dataset in cfg.data_dir; writes policy.dpp and loss.csv
/// into cfg.out_dir.
TrainArtifacts cmd_train(const RunConfig& cfg, std::ostream& log);

/// Policies understood by cmd_eval: "expert-replay", "expert", "reactive",
/// "oracle", or a path to a checkpoint file.
struct EvalResult {
  std::string policy;
  std::vector<metrics::ReportRow> rows;
  std::vector<std::string> failures;  ///< evaluation points that raised errors
};

/// Closed-loop evaluation over cfg.levels x cfg.alphas. "expert-replay"
/// replays the stored actions of every dataset episode instead.
EvalResult cmd_eval(const RunConfig& cfg, const std::string& policy, std::ostream& log);

inline constexpr const char* kEvalHeader = "policy,task,level,alpha,episodes,sr,ms,rc,penalty_oov,penalty_collision";

void write_eval_csv(std::ostream& os, const EvalResult& result);

/// Concatenates eval CSVs under one header, sorted by policy, alpha, level.
/// Throws ParseError on a header mismatch or a malformed row.
std::string cmd_report(const std::vector<std::filesystem::path>& inputs);

}  // namespace dynabench::harness
