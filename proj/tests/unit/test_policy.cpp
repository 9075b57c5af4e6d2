#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "../support/gradcheck.hpp"
#include "dynabench/baselines.hpp"
#include "dynabench/expert.hpp"
#include "dynabench/policy.hpp"

using namespace dynabench;
using namespace dynabench::policy;

namespace fs = std::filesystem;

namespace {

std::vector<Episode> small_dataset(int n, std::uint64_t seed) {
  sim::TaskSpec task;
  task.a_max = 0.2;
  expert::ExpertConfig cfg;
  cfg.approach_speed = 0.1;
  std::vector<Episode> out;
  for (int i = 0; out.size() < static_cast<std::size_t>(n); ++i) {
    Rng rng(expert::draw_seed(seed, 0, i));
    auto r = expert::synthesize_episode(task, cfg, rng, {1, {32, 32}, 1});
    if (r.episode) out.push_back(std::move(*r.episode));
  }
  return out;
}

sim::Observation observe(const sim::TaskSpec& task, Vec2 ee, Vec2 obj) {
  sim::WorldState s;
  s.ee = {{ee, sim::Gripper::Open}};
  s.object.pose = obj;
  sim::Observation o;
  o.frames = {sim::render(s, task, 0, {64, 64})};
  o.proprio = {{ee, false, false}};
  return o;
}

}  // namespace

TEST_CASE("patch features") {
  const PatchFeatureGrid flat = patch_features(GrayImage(32, 24, 51));
  CHECK(flat.cols == 4);
  CHECK(flat.rows == 3);
  for (int r = 0; r < flat.rows; ++r)
    for (int c = 0; c < flat.cols; ++c) {
      const auto d = flat.patch(c, r);
      for (int k = 0; k < 8; ++k) CHECK(d[k] == 0.0);
      CHECK(d[8] == doctest::Approx(0.2));
    }

  CHECK(patch_features(GrayImage(20, 20)).cols == 3);
  CHECK_THROWS_AS(patch_features(GrayImage(8, 32)), DomainError);

  // Dark left half, bright right half: the gradient points along +x.
  GrayImage edge(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 16; x < 32; ++x) edge.at(x, y) = 200;
  const PatchFeatureGrid g = patch_features(edge);
  CHECK(g == patch_features(edge));
  for (int r = 0; r < g.rows; ++r)
    for (int c : {1, 2}) {
      const auto d = g.patch(c, r);
      CHECK(std::max_element(d.begin(), d.begin() + 8) - d.begin() == 0);
      CHECK(d[0] == doctest::Approx(1.0));
    }
}

TEST_CASE("future features") {
  GrayImage frame(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) frame.at(x, y) = static_cast<std::uint8_t>((x * 7 + y * 3) % 256);
  const PatchFeatureGrid g = patch_features(frame);

  Mask none(32, 32);
  const FutureFeature empty = object_future_feature(frame, none);
  CHECK_FALSE(empty.valid);
  for (double v : empty.f) CHECK(v == 0.0);

  Mask one(32, 32);
  for (int y = 8; y < 16; ++y)
    for (int x = 16; x < 24; ++x) one.at(x, y) = 1;
  const FutureFeature f1 = object_future_feature(frame, one);
  REQUIRE(f1.valid);
  for (int k = 0; k < kDescriptorDim; ++k) CHECK(f1.f[k] == doctest::Approx(g.patch(2, 1)[k]));

  // Second patch, plus a sliver of a third that stays below half coverage.
  Mask two = one;
  for (int y = 8; y < 16; ++y)
    for (int x = 24; x < 32; ++x) two.at(x, y) = 1;
  for (int x = 0; x < 8; ++x) two.at(x, 0) = 1;
  const FutureFeature f2 = object_future_feature(frame, two);
  for (int k = 0; k < kDescriptorDim; ++k) CHECK(f2.f[k] == doctest::Approx((g.patch(2, 1)[k] + g.patch(3, 1)[k]) / 2));

  CHECK_THROWS_AS(object_future_feature(frame, Mask(16, 32)), DomainError);
}

TEST_CASE("losses") {
  const std::vector<double> a{0.3, -1.0, 2.0};
  CHECK(loss_action(a, a, 1) == 0.0);
  CHECK(loss_action(std::vector<double>{0.5, -0.5}, std::vector<double>{0, 0}, 1) == doctest::Approx(1.0));
  CHECK(loss_action(std::vector<double>{1.0, -0.5}, std::vector<double>{0, 0}, 2) == doctest::Approx(0.75));
  CHECK(loss_action(std::vector<double>{2.0, -1.0}, std::vector<double>{0, 0}, 2) == doctest::Approx(1.5));

  const std::vector<double> f{1, 2, 0}, same{1, 2, 0}, perp{-2, 1, 0}, neg{-1, -2, 0};
  CHECK(loss_world(same, f, {true}, 3) == doctest::Approx(0.0));
  CHECK(loss_world(perp, f, {true}, 3) == doctest::Approx(1.0));
  CHECK(loss_world(neg, f, {true}, 3) == doctest::Approx(2.0));
  CHECK(loss_world(neg, f, {false}, 3) == 0.0);
  CHECK(loss_world(std::vector<double>{0, 0, 0}, f, {true}, 3) == 0.0);
  std::vector<double> zz{1, 2, 0, -2, 1, 0}, ff{1, 2, 0, 1, 2, 0};
  CHECK(loss_world(zz, ff, {true, true}, 3) == doctest::Approx(0.5));
  CHECK(loss_world(zz, ff, {false, true}, 3) == doctest::Approx(1.0));

  CHECK(loss_total(1.0, 2.0, 0.05) == doctest::Approx(1.1));
  CHECK(loss_total(0.7, 9.0, 0.0) == 0.7);
  CHECK(loss_total(0.0, 0.0, 0.05) == 0.0);
}

TEST_CASE("network outputs") {
  NetShape shape;
  shape.input_dim = 10;
  shape.hidden = 8;
  const SparseInput x{{1, 0.5}, {7, -2.0}};
  const ForwardResult zero = forward(PolicyParams::zeros(shape), x);
  for (double v : zero.actions) CHECK(v == 0.0);
  for (double v : zero.z) CHECK(v == 0.0);

  PolicyParams p = PolicyParams::init(shape, 9);
  const ForwardResult a = forward(p, x);
  CHECK(a.actions == forward(p, x).actions);
  CHECK(a.actions.size() == static_cast<std::size_t>(shape.chunk * shape.action_dim));
  CHECK(a.z.size() == static_cast<std::size_t>(shape.queries * shape.feature_dim));

  // World-head weights never reach the action chunk.
  const auto off = PolicyParams::offsets(shape);
  for (std::size_t i = off.q; i < off.end; ++i) p.theta[i] += 0.37;
  const ForwardResult b = forward(p, x);
  CHECK(b.actions == a.actions);
  CHECK(b.z != a.z);

  CHECK_THROWS_AS(forward(p, SparseInput{{10, 1.0}}), DomainError);
}

TEST_CASE("analytic gradients") {
  for (double lambda : {0.0, 0.05}) {
    const auto [params, batch] = testing::random_problem(21);
    const testing::GradCheck r = testing::check_gradient(params, batch, lambda);
    CHECK(r.coordinates == params.theta.size());
    CHECK(r.worst_relative <= 1e-4);
  }

  const auto [params, batch] = testing::random_problem(5);
  std::vector<const Sample*> ptrs;
  for (const auto& s : batch) ptrs.push_back(&s);
  std::vector<double> grad;
  batch_loss(params, ptrs, 0.0, &grad);
  const auto off = PolicyParams::offsets(params.shape);
  for (std::size_t i = off.q; i < off.end; ++i) CHECK(grad[i] == 0.0);

  // A batch whose targets equal the predictions has a zero action-head gradient.
  std::vector<Sample> exact = batch;
  for (auto& s : exact) s.action_target = forward(params, s.x).actions;
  std::vector<const Sample*> eptrs;
  for (const auto& s : exact) eptrs.push_back(&s);
  batch_loss(params, eptrs, 0.0, &grad);
  for (std::size_t i = 0; i < off.end; ++i) CHECK(grad[i] == 0.0);
}

TEST_CASE("history indices and schedule") {
  CHECK(history_indices(10, 4, 4) == std::vector<int>{10, 6, 2, 0, 0});
  CHECK(history_indices(3, 0, 4) == std::vector<int>{3});
  TrainConfig cfg;
  cfg.lr = 1.0;
  cfg.warmup_fraction = 0.1;
  CHECK(scheduled_lr(cfg, 0, 100) == doctest::Approx(0.1));
  CHECK(scheduled_lr(cfg, 9, 100) == doctest::Approx(1.0));
  CHECK(scheduled_lr(cfg, 99, 100) < 0.01);
  CHECK(velocity_target(0.0, 0.5) == 0.0);
  const sim::Action act = decode_step(std::vector<double>{velocity_target(0.1, 0.5), 0.0, 1.0}, 1, 0.5);
  CHECK(act.arms[0].velocity.x == doctest::Approx(0.1));
  CHECK(act.arms[0].gripper == sim::GripperCommand::Close);
}

TEST_CASE("feature layout") {
  FeatureLayout l{4, 4, {64, 64}, 1};
  CHECK(l.input_dim() == l.frame_dim() * 13 + 2);
  l.history = 0;
  CHECK(l.input_dim() == l.frame_dim() + 2);
}

TEST_CASE("training") {
  const std::vector<Episode> data = small_dataset(8, 2);
  TrainConfig cfg;
  cfg.history = 1;
  cfg.lr = 3e-3;
  cfg.epochs = 8;
  cfg.hidden = 16;
  cfg.seed = 4;
  const TrainResult a = train_bc(data, cfg);
  REQUIRE(!a.curve.empty());
  CHECK(a.curve.back().total < 0.5 * a.curve.front().total);
  CHECK(train_bc(data, cfg).params == a.params);
  CHECK_THROWS_AS(train_bc({}, cfg), DomainError);

  const fs::path dir = fs::temp_directory_path() / "dynabench_test_ckpt";
  fs::create_directories(dir);
  const PolicyCheckpoint ckpt{a.params, cfg.history, cfg.history_stride, cfg.future_stride, {32, 32}, cfg.flow};
  write_checkpoint(dir / "p.dpp", ckpt);
  CHECK(read_checkpoint(dir / "p.dpp") == ckpt);
  fs::remove_all(dir);

  auto bytes = encode_checkpoint(ckpt);
  CHECK(decode_checkpoint(bytes) == ckpt);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad), ParseError);
  bad = bytes;
  bad[4] = 9;
  CHECK_THROWS_AS(decode_checkpoint(bad), UnsupportedVersion);
  bad = bytes;
  bad.pop_back();
  CHECK_THROWS_AS(decode_checkpoint(bad), ParseError);

  // The trained policy runs closed loop at its own resolution.
  sim::TaskSpec task = data[0].task;
  ChunkPolicy pol(ckpt, task);
  const Outcome o = sim::run_episode(task, data[0].traj, data[0].seed, pol, {1, {32, 32}});
  CHECK(o.t_end <= task.t_max + 1e-9);
}

TEST_CASE("zero policy stays put") {
  sim::TaskSpec task;
  NetShape shape;
  shape.input_dim = FeatureLayout{0, 4, {32, 32}, 1}.input_dim();
  const PolicyCheckpoint ckpt{PolicyParams::zeros(shape), 0, 4, 4, {32, 32}, {}};
  ChunkPolicy pol(ckpt, task);
  const traj::TrajectorySpec moving{traj::DynamicsLevel::Level1, {{traj::ConstantVelocity{{0.1, 0.1}, {0.02, 0}}, 8.0}}, 8.0, {}};
  sim::Trace tr;
  const Outcome o = sim::run_episode(task, moving, 1, pol, {1, {32, 32}}, &tr);
  CHECK_FALSE(o.success);
  for (const auto& s : tr.states) CHECK(s.ee[0].position == task.home[0]);
}

TEST_CASE("reactive pursuit") {
  sim::TaskSpec task;
  ReactivePursuit reactive(task);
  const sim::Action on = reactive.act(observe(task, {0.1, 0.1}, {0.1, 0.1}));
  CHECK(on.arms[0].velocity.norm() < 0.02);
  CHECK(on.arms[0].gripper == sim::GripperCommand::Close);

  const sim::Action far = reactive.act(observe(task, {0.0, -0.2}, {0.0, 0.2}));
  CHECK(far.arms[0].velocity.norm() == doctest::Approx(task.a_max));
  CHECK(far.arms[0].velocity.y > 0.99 * task.a_max);

  // A static object is reached in about distance / a_max.
  const traj::TrajectorySpec still = traj::static_spec({0.0, 0.2}, task.t_max);
  ReactivePursuit fresh(task);
  const Outcome o = sim::run_episode(task, still, 1, fresh);
  CHECK(o.success);
  const auto contact = std::find_if(o.events.begin(), o.events.end(), [](const Event& e) { return e.tag == EventTag::Contact; });
  REQUIRE(contact != o.events.end());
  const double straight = (distance(task.home[0], {0.0, 0.2}) - task.contact_radius) / task.a_max;
  CHECK(contact->at <= straight + 3 * task.dt);
}

TEST_CASE("oracle interception") {
  const traj::TrajectorySpec line{traj::DynamicsLevel::Level1, {{traj::ConstantVelocity{{0.2, 0.0}, {0.0, 0.08}}, 10.0}}, 10.0, {}};
  const Vec2 ee{0.0, -0.1};
  const double speed = 0.3;
  const double t = intercept_time(line, 0.0, ee, speed);
  CHECK(std::fabs(distance(traj::position_at(line, t), ee) - speed * t) <= 1e-3);

  // On a static target the oracle matches the reactive pursuit.
  sim::TaskSpec task;
  const traj::TrajectorySpec still = traj::static_spec({0.15, 0.1}, task.t_max);
  ReactivePursuit r(task);
  OraclePursuit o(task, still);
  sim::Trace tr, to;
  CHECK(sim::run_episode(task, still, 2, r, {}, &tr) == sim::run_episode(task, still, 2, o, {}, &to));
  CHECK(tr.actions == to.actions);
}
