#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "dynabench/container.hpp"
#include "dynabench/harness.hpp"

namespace {

using namespace dynabench;
namespace fs = std::filesystem;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<int> level;
  std::optional<int> episodes;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "dataset / training seed (eval: evaluation seed)");
  cmd->add_option("--alpha", o.alpha, "speed cap in m/s");
  cmd->add_option("--level", o.level, "dynamics level")->check(CLI::Range(1, 3));
  cmd->add_option("--episodes", o.episodes, "episode count");
  cmd->add_option("--out", o.out, "output directory");
}

enum class Command { Gen, Train, Eval };

harness::RunConfig resolve(const Overrides& o, Command cmd) {
  harness::RunConfig cfg = o.config.empty() ? harness::RunConfig{} : harness::load_config(o.config);
  if (o.seed) (cmd == Command::Eval ? cfg.eval_seed : cfg.seed) = *o.seed;
  if (o.alpha) {
    cfg.alpha = *o.alpha;
    cfg.alphas.clear();
  }
  if (o.level) {
    cfg.level = *o.level;
    cfg.levels.clear();
  }
  if (o.episodes) (cmd == Command::Eval ? cfg.eval_episodes : cfg.episodes) = *o.episodes;
  if (o.out) (cmd == Command::Gen ? cfg.data_dir : cfg.out_dir) = *o.out;
  harness::validate(cfg);
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  harness::write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic manipulation benchmark: data generation, training, evaluation and reports"};
  app.require_subcommand(1);

  Overrides gen_o, train_o, eval_o;
  auto* gen = app.add_subcommand("gen", "synthesize expert demonstrations");
  add_common(gen, gen_o);
  auto* train = app.add_subcommand("train", "behavioral cloning on a generated dataset");
  add_common(train, train_o);
  auto* eval = app.add_subcommand("eval", "closed-loop evaluation; writes eval.csv into --out");
  add_common(eval, eval_o);
  std::string policy = "reactive";
  eval->add_option("--policy", policy, "expert-replay | expert | reactive | oracle | <checkpoint path>");
  auto* report = app.add_subcommand("report", "merge eval CSVs into one table");
  std::vector<std::string> inputs;
  std::string report_out;
  report->add_option("csv", inputs, "eval CSV files")->required()->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto cfg = resolve(gen_o, Command::Gen);
      const auto manifest = harness::cmd_gen(cfg, std::cout);
      std::size_t failed = 0;
      for (const auto& s : manifest.stats) failed += s.failed_seeds.size();
      std::cout << manifest.episodes.size() << " episodes written to " << cfg.data_dir << "\n";
      return failed == 0 ? 0 : 1;
    }
    if (*train) {
      const auto cfg = resolve(train_o, Command::Train);
      const auto art = harness::cmd_train(cfg, std::cout);
      std::cout << "checkpoint " << art.checkpoint.string() << "\nloss curve " << art.loss_csv.string() << "\n";
      return 0;
    }
    if (*eval) {
      const auto cfg = resolve(eval_o, Command::Eval);
      const auto result = harness::cmd_eval(cfg, policy, std::cout);
      std::ostringstream csv;
      harness::write_eval_csv(csv, result);
      const fs::path path = fs::path(cfg.out_dir) / "eval.csv";
      write_text(path, csv.str());
      std::cout << "report " << path.string() << "\n";
      for (const auto& f : result.failures) std::cerr << "failed: " << f << "\n";
      return result.failures.empty() ? 0 : 1;
    }
    if (*report) {
      std::vector<fs::path> paths(inputs.begin(), inputs.end());
      const std::string table = harness::cmd_report(paths);
      if (report_out.empty()) std::cout << table;
      else write_text(report_out, table);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
