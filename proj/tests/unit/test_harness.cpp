#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dynabench/container.hpp"
#include "dynabench/harness.hpp"

using namespace dynabench;
using namespace dynabench::harness;

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dynabench_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Episode sample_episode() {
  sim::TaskSpec task;
  expert::ExpertConfig cfg;
  Rng rng(17);
  auto r = expert::synthesize_episode(task, cfg, rng, {1, {24, 20}, 3});
  REQUIRE(r.episode);
  return *r.episode;
}

}  // namespace

TEST_CASE("config defaults match the library") {
  const RunConfig cfg;
  CHECK(task_spec(cfg) == sim::TaskSpec{});
  const expert::ExpertConfig e = expert_config(cfg), d;
  CHECK(e.approach_speed == d.approach_speed);
  CHECK(e.approach_accel == d.approach_accel);
  CHECK(e.settle_steps == d.settle_steps);
  CHECK(e.max_retries == d.max_retries);
  CHECK(e.preclose_factor == d.preclose_factor);
  CHECK(flow_params(cfg) == flow::FlowParams{});
  const policy::TrainConfig t = train_config(cfg), td;
  CHECK(t.chunk == td.chunk);
  CHECK(t.history == td.history);
  CHECK(t.lambda == td.lambda);
  CHECK(t.lr == td.lr);
  CHECK(parse_config("") == cfg);
}

TEST_CASE("config parsing") {
  const RunConfig cfg = parse_config(
      "# benchmark\n"
      "alpha = 0.25\n"
      "level=2   # trailing comment\n"
      "dual_arm = true\n"
      "alphas = 0, 0.1 ,0.2\n"
      "levels = 1,3\n"
      "data_dir = /tmp/x y\n");
  CHECK(cfg.alpha == 0.25);
  CHECK(cfg.level == 2);
  CHECK(cfg.dual_arm);
  CHECK(cfg.alphas == std::vector<double>{0, 0.1, 0.2});
  CHECK(cfg.levels == std::vector<int>{1, 3});
  CHECK(cfg.data_dir == "/tmp/x y");
  CHECK(parse_config(format_config(cfg)) == cfg);

  RunConfig odd;
  odd.alpha = 0.1 + 0.2;
  odd.lr = 1.0 / 3.0;
  odd.seed = 18446744073709551615ull;
  CHECK(parse_config(format_config(odd)) == odd);
}

TEST_CASE("config errors name the line") {
  const auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("alpha = 0.1\nbogus = 1\n").find("line 2") != std::string::npos);
  CHECK(message("alpha = 0.1\nbogus = 1\n").find("unknown key 'bogus'") != std::string::npos);
  CHECK(message("alpha = 0.1\nalpha = 0.2\n").find("duplicate key") != std::string::npos);
  CHECK(message("\n\nlevel = two\n").find("line 3") != std::string::npos);
  CHECK(message("dual_arm = yes\n").find("invalid value") != std::string::npos);
  CHECK(message("alpha\n").find("expected 'key = value'") != std::string::npos);
  CHECK_THROWS_AS(parse_config("level = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("views = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("replan_every = 16\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("approach_speed = 0.9\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/run.conf"), ConfigError);
}

TEST_CASE("episode container") {
  const Episode ep = sample_episode();
  const auto bytes = encode_episode(ep);
  CHECK(decode_episode(bytes) == ep);
  CHECK(encode_episode(decode_episode(bytes)) == bytes);

  const fs::path dir = scratch("container");
  write_episode(dir / "e.dmb", ep);
  CHECK(read_episode(dir / "e.dmb") == ep);
  CHECK(read_file(dir / "e.dmb") == bytes);

  Episode empty = ep;
  empty.steps.clear();
  CHECK(decode_episode(encode_episode(empty)).steps.empty());

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_episode(bad), ParseError);
  bad = bytes;
  bad[4] = 2;
  CHECK_THROWS_AS(decode_episode(bad), UnsupportedVersion);
  bad = bytes;
  bad.resize(bytes.size() / 2);
  CHECK_THROWS_AS(decode_episode(bad), ParseError);

  // Every single-byte change is either rejected or decodes to the same episode.
  Rng rng(8);
  int rejected = 0;
  for (int i = 0; i < 200; ++i) {
    auto m = bytes;
    const std::size_t at = static_cast<std::size_t>(rng.uniform() * m.size());
    m[at] ^= static_cast<std::uint8_t>(1 + rng.uniform_int(0, 254));
    try {
      const Episode back = decode_episode(m);
      CHECK(back == ep);
    } catch (const ParseError&) {
      ++rejected;
    }
  }
  CHECK(rejected == 200);
  fs::remove_all(dir);
}

TEST_CASE("manifest round trip") {
  expert::DatasetManifest m;
  m.seed = 5;
  m.episodes = {{"intercept/000000.dmb", "intercept", 99}};
  m.stats = {{"intercept", 3, 1, 4, {12, 13}}};
  const fs::path dir = scratch("manifest");
  write_manifest(dir / expert::kManifestName, m);
  CHECK(read_manifest(dir / expert::kManifestName) == m);
  fs::remove_all(dir);
}

TEST_CASE("report merges eval tables") {
  const fs::path dir = scratch("report");
  {
    std::ofstream a(dir / "a.csv");
    a << kEvalHeader << "\n"
      << "reactive,intercept,2,0.1,100,40.00,50.00,60.00,3,0\n"
      << "reactive,intercept,1,0.1,100,50.00,60.00,70.00,2,0\n";
    std::ofstream b(dir / "b.csv");
    b << kEvalHeader << "\n"
      << "oracle,intercept,1,0,100,90.00,95.00,96.00,0,0\n";
  }
  const std::string out = cmd_report({dir / "a.csv", dir / "b.csv"});
  CHECK(out == std::string(kEvalHeader) + "\n" +
                   "oracle,intercept,1,0,100,90.00,95.00,96.00,0,0\n"
                   "reactive,intercept,1,0.1,100,50.00,60.00,70.00,2,0\n"
                   "reactive,intercept,2,0.1,100,40.00,50.00,60.00,3,0\n");

  { std::ofstream(dir / "bad.csv") << "policy,sr\nx,1\n"; }
  CHECK_THROWS_AS(cmd_report({dir / "bad.csv"}), ParseError);
  { std::ofstream(dir / "short.csv") << kEvalHeader << "\nreactive,intercept,1\n"; }
  CHECK_THROWS_AS(cmd_report({dir / "short.csv"}), ParseError);
  CHECK_THROWS_AS(cmd_report({dir / "missing.csv"}), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("gen then expert replay") {
  const fs::path dir = scratch("pipeline");
  RunConfig cfg;
  cfg.episodes = 5;
  cfg.width = cfg.height = 32;
  cfg.data_dir = (dir / "data").string();
  cfg.out_dir = (dir / "eval").string();
  std::ostringstream log;
  const expert::DatasetManifest m = cmd_gen(cfg, log);
  CHECK(fs::exists(dir / "data" / "resolved_config.txt"));
  CHECK(load_dataset(cfg.data_dir).size() == m.episodes.size());

  const EvalResult r = cmd_eval(cfg, "expert-replay", log);
  CHECK(r.failures.empty());
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].sr == 100.0);
  CHECK(r.rows[0].episodes == static_cast<int>(m.episodes.size()));

  std::ostringstream csv;
  write_eval_csv(csv, r);
  CHECK(csv.str().rfind(std::string(kEvalHeader) + "\nexpert-replay,intercept,1,0.1,", 0) == 0);

  CHECK_THROWS_AS(cmd_eval(cfg, "no-such-policy", log), ConfigError);
  fs::remove_all(dir);
}
