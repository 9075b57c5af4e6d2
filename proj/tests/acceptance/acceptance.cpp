// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "../support/gradcheck.hpp"
#include "../support/scenes.hpp"
#include "dynabench/baselines.hpp"
#include "dynabench/container.hpp"
#include "dynabench/harness.hpp"

using namespace dynabench;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- 1

Verdict metric_exactness() {
  const auto failure = [](Vec2 ee0, Vec2 ee1, Vec2 obj) {
    Outcome o;
    o.p_ee_initial = {ee0};
    o.p_ee_final = {ee1};
    o.p_obj_final = obj;
    return o;
  };
  const Event oov{EventTag::OutOfView, 1.0}, hit{EventTag::ClutterCollision, 1.0};
  Outcome win = failure({0, 0}, {-1, 0}, {1, 0});
  win.success = true;

  const std::vector<std::pair<double, double>> checks = {
      {metrics::route_completion(failure({0, 0}, {0.5, 0}, {1, 0})), 50.0},
      {metrics::route_completion(failure({0, 0}, {-1, 0}, {1, 0})), 0.0},
      {metrics::route_completion(win), 100.0},
      {metrics::manipulation_score(50, {oov}), 25.0},
      {metrics::manipulation_score(100, {oov, hit}), 40.0},
      {metrics::manipulation_score(80, {}), 80.0},
  };
  double worst = 0.0;
  for (const auto& [got, want] : checks) worst = std::max(worst, std::fabs(got - want));

  // Success forces RC = 100 whatever the geometry.
  Rng rng(1);
  bool forced = true;
  for (int i = 0; i < 1000; ++i) {
    Outcome o = failure(rng.uniform_in({{-1, -1}, {1, 1}}), rng.uniform_in({{-1, -1}, {1, 1}}),
                        rng.uniform_in({{-1, -1}, {1, 1}}));
    o.success = true;
    forced = forced && metrics::route_completion(o) == 100.0;
  }
  return {worst <= 1e-9 && forced, fmt("max error %.1e over %zu examples, success => RC=100: %s", worst, checks.size(),
                                       forced ? "yes" : "no")};
}

// ---------------------------------------------------------------- 2

Verdict trajectory_suite() {
  const double h = 1e-5;
  std::string failures;
  int l3_jumps = 0;
  for (int level = 1; level <= 3; ++level) {
    int speed = 0, dsum = 0, c0 = 0, fd = 0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
      Rng pick(seed * 7 + level);
      const double alpha = pick.uniform(0.02, 0.3);
      const double duration = pick.uniform(2.0, 10.0);
      const auto cfg = traj::SamplerConfig::with_alpha(alpha, {{-0.3, -0.3}, {0.3, 0.3}}, seed);
      const auto s = traj::sample(traj::level_from_int(level), cfg, duration);

      bool speed_ok = traj::max_speed(s) <= alpha + 1e-4;
      for (int k = 0; k <= 64; ++k) speed_ok = speed_ok && traj::velocity_at(s, s.total_duration * k / 64).norm() <= alpha + 1e-4;
      speed += !speed_ok;

      double sum = 0.0;
      for (const auto& seg : s.segments) sum += seg.duration;
      dsum += std::fabs(sum - s.total_duration) > 1e-9;

      bool jump = false, cont = true;
      std::vector<double> edges;
      double t = 0.0;
      for (std::size_t i = 0; i + 1 < s.segments.size(); ++i) {
        t += s.segments[i].duration;
        edges.push_back(t);
        cont = cont && distance(s.segments[i].end(), s.segments[i + 1].start()) <= 1e-9;
        jump = jump || (s.segments[i + 1].velocity(0.0) - s.segments[i].velocity(s.segments[i].duration)).norm() > 1e-3;
      }
      c0 += !cont;
      if (level == 3) l3_jumps += jump;

      bool fd_ok = true;
      for (int k = 1; k < 8; ++k) {
        const double tk = s.total_duration * (k + pick.uniform(-0.4, 0.4)) / 8;
        const bool straddles = std::any_of(edges.begin(), edges.end(), [&](double e) { return std::fabs(e - tk) < 2 * h; });
        if (straddles) continue;
        const Vec2 num = (traj::position_at(s, tk + h) - traj::position_at(s, tk - h)) / (2 * h);
        const Vec2 v = traj::velocity_at(s, tk);
        fd_ok = fd_ok && std::fabs(num.x - v.x) <= 1e-6 && std::fabs(num.y - v.y) <= 1e-6;
      }
      fd += !fd_ok;
    }
    if (speed + dsum + c0 + fd)
      failures += fmt(" L%d: speed %d, duration %d, C0 %d, fd %d;", level, speed, dsum, c0, fd);
  }
  const double jump_frac = l3_jumps / 10000.0;
  const bool ok = failures.empty() && jump_frac >= 0.5;
  return {ok, fmt("3 x 10000 specs, violations:%s L3 discontinuous %.1f%%", failures.empty() ? " none," : failures.c_str(),
                  100 * jump_frac)};
}

// ---------------------------------------------------------------- 3

Verdict back_calculation() {
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Rng rng(900 + i);
    const int level = 1 + i % 3;
    const auto cfg = traj::SamplerConfig::with_alpha(rng.uniform(0.02, 0.3), {{-0.3, -0.3}, {0.3, 0.3}}, i);
    const auto s = traj::sample(traj::level_from_int(level), cfg, rng.uniform(2.0, 10.0));
    const double t_exec = rng.uniform(0.0, s.total_duration);
    const Vec2 pose = rng.uniform_in({{-0.3, -0.3}, {0.3, 0.3}});
    worst = std::max(worst, distance(traj::position_at(traj::back_calculate_initial(s, t_exec, pose), t_exec), pose));
  }
  return {worst <= 1e-12, fmt("1000 triples, max |p(t_exec) - pose| = %.2e", worst)};
}

// ---------------------------------------------------------------- 4

Verdict expert_pipeline(const fs::path& work) {
  expert::DatasetRequest req;
  req.tasks = {sim::TaskSpec{}};
  req.per_task_count = 200;
  req.seed = 4;
  req.record = {1, {64, 64}, 1};
  req.out_dir = work / "expert";
  fs::remove_all(req.out_dir);
  const expert::DatasetManifest m = expert::generate_dataset(req);
  const expert::TaskStats& st = m.stats.at(0);
  int replayed = 0;
  for (const auto& e : m.episodes) {
    const Episode ep = harness::read_episode(req.out_dir / e.path);
    const Outcome o = sim::replay_actions(ep.task, ep.traj, ep.seed, ep.actions());
    replayed += o.success && o == ep.outcome;
  }
  fs::remove_all(req.out_dir);
  const double rate = st.acceptance_rate();
  return {rate >= 0.95 && replayed == static_cast<int>(m.episodes.size()) && !m.episodes.empty(),
          fmt("%d draws, %d accepted of %d rollouts (%.1f%%), %d/%zu replay bit-exactly", st.draws, st.accepted, st.rollouts,
              100 * rate, replayed, m.episodes.size())};
}

// ---------------------------------------------------------------- 5

Verdict flow_recovery(const fs::path& work) {
  const GrayImage base = testing::disc_scene(0, 0);
  double worst = 0.0;
  for (int dy = -3; dy <= 3; ++dy)
    for (int dx = -3; dx <= 3; ++dx)
      worst = std::max(worst, testing::interior_epe(flow::dense_flow(base, testing::disc_scene(dx, dy)), dx, dy));

  const flow::FlowField still = flow::dense_flow(base, base);
  double zero = 0.0;
  for (std::size_t i = 0; i < still.u.size(); ++i) zero = std::max<double>(zero, std::hypot(still.u[i], still.v[i]));

  const fs::path dir = work / "flow_cache";
  fs::remove_all(dir);
  const flow::FlowParams p;
  const GrayImage next = testing::disc_scene(2, -1);
  const auto compute = [&] { return flow::flow_to_rgb(flow::dense_flow(base, next, p), p); };
  const flow::FlowCacheKey key{"acceptance", "disc", 1, {-1, 0}, 0, {64, 64}};
  bool identical;
  {
    flow::FlowCache cache(dir, p);
    const auto miss = flow::encode_flow_map(cache.get_or_compute(key, compute));
    const auto hit = flow::encode_flow_map(cache.get_or_compute(key, compute));
    const auto stored = harness::read_file(cache.path_for(key));
    identical = miss == hit && hit == stored && miss == flow::encode_flow_map(compute()) && cache.hits() == 1;
  }
  fs::remove_all(dir);
  return {worst <= 0.5 && zero < 0.05 && identical,
          fmt("worst interior EPE %.3f px over 49 shifts, zero-motion max %.1e px, cache round trip %s", worst, zero,
              identical ? "identical" : "DIFFERS")};
}

// ---------------------------------------------------------------- 6

Verdict gradient_check() {
  double worst = 0.0;
  std::size_t coords = 0;
  for (double lambda : {0.0, 0.05}) {
    const auto [params, batch] = testing::random_problem(lambda == 0.0 ? 11 : 12);
    const auto r = testing::check_gradient(params, batch, lambda, 1e-5);
    worst = std::max(worst, r.worst_relative);
    coords += r.coordinates;
  }
  return {worst <= 1e-4, fmt("%zu coordinates, worst relative error %.2e", coords, worst)};
}

// ---------------------------------------------------------------- benchmark runs

struct Bench {
  harness::RunConfig cfg;
  sim::TaskSpec task;
  metrics::EvalOptions eval;
};

Bench make_bench(const fs::path& config) {
  Bench b{harness::load_config(config), {}, {}};
  b.task = harness::task_spec(b.cfg);
  b.eval = harness::eval_options(b.cfg);
  b.eval.rollout.resolution = {b.cfg.width, b.cfg.height};
  return b;
}

metrics::ReportRow run_eval(const Bench& b, int level, double alpha, const metrics::ControllerFactory& f) {
  sim::TaskSpec t = b.task;
  t.level = traj::level_from_int(level);
  t.alpha = alpha;
  return metrics::summarize(t.name, level, alpha, metrics::evaluate(t, f, b.eval));
}

metrics::ControllerFactory reactive() {
  return [](const expert::Scenario& s) { return std::make_unique<policy::ReactivePursuit>(s.task); };
}

Verdict dynamic_gap(const Bench& b) {
  const auto still = run_eval(b, 1, 0.0, reactive());
  const auto moving = run_eval(b, 1, 0.1, reactive());
  return {still.sr - moving.sr >= 20, fmt("reactive SR %.0f at alpha=0 vs %.0f at alpha=0.1 (gap %.0f, need >= 20)", still.sr,
                                          moving.sr, still.sr - moving.sr)};
}

Verdict oracle_gap(const Bench& b) {
  const auto r = run_eval(b, 2, 0.1, reactive());
  const auto o = run_eval(b, 2, 0.1, [](const expert::Scenario& s) {
    return std::make_unique<policy::OraclePursuit>(s.task, s.traj);
  });
  return {o.ms - r.ms >= 10, fmt("Level 2 MS oracle %.1f vs reactive %.1f (gap %.1f, need >= 10)", o.ms, r.ms, o.ms - r.ms)};
}

struct Variant {
  const char* name;
  int history;
  double lambda;
  int queries;
};

// memoryless, flow only, flow+aux N=2, flow+aux N=4
const Variant kVariants[] = {{"memoryless", 0, 0.0, 4}, {"flow", 4, 0.0, 4}, {"flow+aux N=2", 4, 0.05, 2}, {"flow+aux N=4", 4, 0.05, 4}};
constexpr int kSeeds = 3;

struct Ablation {
  double sr[4][kSeeds] = {};
  double mean[4] = {};
  std::optional<policy::PolicyCheckpoint> puma;  // flow+aux N=4, first seed
  double seconds = 0.0;
  std::string log;
};

Ablation run_ablation(const Bench& b, const fs::path& work) {
  const auto t0 = std::chrono::steady_clock::now();
  Ablation out;
  harness::RunConfig gen = b.cfg;
  gen.data_dir = (work / "bench_data").string();
  fs::remove_all(gen.data_dir);
  std::ostringstream log;
  harness::cmd_gen(gen, log);
  const std::vector<Episode> episodes = harness::load_dataset(gen.data_dir);
  flow::FlowCache cache(work / "bench_flow_cache", harness::flow_params(b.cfg));

  for (int v = 0; v < 4; ++v) {
    for (int s = 0; s < kSeeds; ++s) {
      policy::TrainConfig tc = harness::train_config(b.cfg);
      tc.history = kVariants[v].history;
      tc.lambda = kVariants[v].lambda;
      tc.queries = kVariants[v].queries;
      tc.seed = b.cfg.seed + s;
      const policy::TrainResult tr = policy::train_bc(episodes, tc, &cache, gen.data_dir);
      const auto ckpt = std::make_shared<const policy::PolicyCheckpoint>(policy::PolicyCheckpoint{
          tr.params, tc.history, tc.history_stride, tc.future_stride, episodes.front().resolution, tc.flow});
      const int replan = b.cfg.replan_every;
      const auto row = run_eval(b, 1, b.cfg.alpha, [ckpt, replan](const expert::Scenario& sc) {
        return std::make_unique<policy::ChunkPolicy>(*ckpt, sc.task, replan);
      });
      out.sr[v][s] = row.sr;
      out.mean[v] += row.sr / kSeeds;
      if (v == 3 && s == 0) out.puma = *ckpt;
      out.log += fmt("    %-13s seed %d: SR %5.1f  MS %5.1f  loss %.3f -> %.3f  (%.0f s)\n", kVariants[v].name, s, row.sr, row.ms,
                     tr.curve.front().total, tr.curve.back().total, seconds_since(t0));
    }
  }
  fs::remove_all(gen.data_dir);
  out.seconds = seconds_since(t0);
  return out;
}

Verdict puma_trend(const Ablation& a) {
  const double gain = a.mean[3] - a.mean[0];
  return {gain >= 10, fmt("mean SR flow+aux %.1f vs memoryless %.1f over %d seeds (gain %.1f, need >= 10)", a.mean[3], a.mean[0],
                          kSeeds, gain)};
}

Verdict ablation_order(const Ablation& a) {
  // Pairs (N4, N2), (N2, flow), (flow, memoryless); one may be a tie within 2 points.
  int ties = 0;
  bool ok = true;
  for (int v = 3; v > 0; --v) {
    const double diff = a.mean[v] - a.mean[v - 1];
    if (diff >= 0) continue;
    if (diff >= -2) ++ties;
    else ok = false;
  }
  ok = ok && ties <= 1;
  return {ok, fmt("mean SR N4 %.1f >= N2 %.1f >= flow %.1f >= memoryless %.1f", a.mean[3], a.mean[2], a.mean[1], a.mean[0])};
}

Verdict level_ordering(const Bench& b, const Ablation& a) {
  const auto ckpt = std::make_shared<const policy::PolicyCheckpoint>(*a.puma);
  const int replan = b.cfg.replan_every;
  const metrics::ControllerFactory f = [ckpt, replan](const expert::Scenario& sc) {
    return std::make_unique<policy::ChunkPolicy>(*ckpt, sc.task, replan);
  };
  const double l1 = a.sr[3][0];
  const double l2 = run_eval(b, 2, b.cfg.alpha, f).sr;
  const double l3 = run_eval(b, 3, b.cfg.alpha, f).sr;
  return {l1 >= l2 && l2 >= l3, fmt("SR L1 %.0f >= L2 %.0f >= L3 %.0f", l1, l2, l3)};
}

// ---------------------------------------------------------------- 12

Verdict container_fuzz() {
  sim::TaskSpec task;
  Rng draw(31);
  auto synth = expert::synthesize_episode(task, {}, draw, {2, {24, 24}, 3});
  if (!synth.episode) return {false, "could not synthesize a seed episode"};
  const Episode& ep = *synth.episode;
  const auto bytes = harness::encode_episode(ep);
  Rng rng(32);
  int rejected = 0, equal = 0, silent = 0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    auto m = bytes;
    // Bias half of the mutations toward the header and the trailer.
    std::size_t at;
    if (i % 2) at = static_cast<std::size_t>(rng.uniform() * m.size());
    else at = i % 4 ? static_cast<std::size_t>(rng.uniform() * std::min<std::size_t>(m.size(), 512))
                    : m.size() - 1 - static_cast<std::size_t>(rng.uniform() * 8);
    m[at] ^= static_cast<std::uint8_t>(rng.uniform_int(1, 255));
    try {
      (harness::decode_episode(m) == ep ? equal : silent) += 1;
    } catch (const ParseError&) {
      ++rejected;
    }
  }
  return {silent == 0, fmt("%d mutations of a %zu-byte file: %d rejected, %d equal, %d silently different", n, bytes.size(),
                           rejected, equal, silent)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  fs::path work = fs::temp_directory_path() / "dynabench_acceptance";
  fs::path config = fs::path(DYNABENCH_SOURCE_DIR) / "configs" / "benchmark.conf";
  std::vector<int> only;
  app.add_option("--work-dir", work, "Scratch directory");
  app.add_option("--config", config, "Benchmark config for criteria 7-11")->check(CLI::ExistingFile);
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  std::optional<Bench> bench;
  std::optional<Ablation> ablation;
  const auto get_bench = [&]() -> const Bench& {
    if (!bench) bench = make_bench(config);
    return *bench;
  };
  const auto get_ablation = [&]() -> const Ablation& {
    if (!ablation) {
      ablation = run_ablation(get_bench(), work);
      std::printf("  ablation runs (%.0f s):\n%s", ablation->seconds, ablation->log.c_str());
    }
    return *ablation;
  };

  const std::vector<Criterion> criteria = {
      {1, "metric exactness", 1, metric_exactness},
      {2, "trajectory suite", 30, trajectory_suite},
      {3, "back-calculation", 5, back_calculation},
      {4, "expert pipeline", 120, [&] { return expert_pipeline(work); }},
      {5, "flow recovery", 30, [&] { return flow_recovery(work); }},
      {6, "gradient check", 60, gradient_check},
      {7, "dynamic gap", 300, [&] { return dynamic_gap(get_bench()); }},
      {8, "flow+aux over memoryless", 1800, [&] { return puma_trend(get_ablation()); }},
      {9, "ablation direction", 0, [&] { return ablation_order(get_ablation()); }},
      {10, "oracle gap", 300, [&] { return oracle_gap(get_bench()); }},
      {11, "level ordering", 600, [&] { return level_ordering(get_bench(), get_ablation()); }},
      {12, "container fuzz", 60, container_fuzz},
  };

  int passed = 0, ran = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    double secs = seconds_since(t0);
    // Criterion 9 is computed from criterion 8's runs and shares its budget.
    double budget = c.budget_s;
    if (c.id == 9) {
      secs = ablation ? ablation->seconds : secs;
      budget = 1800;
    }
    const bool in_time = secs <= budget;
    const bool pass = v.pass && in_time;
    passed += pass;
    std::printf("%s  %2d %-26s %s (%.1f s, budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs,
                budget, in_time ? "" : ", OVER BUDGET");
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", passed, ran);
  return passed == ran ? 0 : 1;
}
