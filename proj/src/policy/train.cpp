#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "dynabench/policy.hpp"

namespace dynabench::policy {
namespace {

class CachedFlow : public FlowSource {
 public:
  CachedFlow(flow::FlowCache& cache, const flow::FlowParams& params, std::string dataset, std::string trajectory,
             Resolution res)
      : cache_(cache), params_(params), dataset_(std::move(dataset)), trajectory_(std::move(trajectory)), res_(res) {}

  flow::FlowMap get(int from, int to, const GrayImage& a, const GrayImage& b) override {
    const flow::FlowCacheKey key{dataset_, trajectory_, to, {from - to, 0}, 0, res_};
    return cache_.get_or_compute(key, [&] { return flow::flow_to_rgb(flow::dense_flow(a, b, params_), params_); });
  }

 private:
  flow::FlowCache& cache_;
  flow::FlowParams params_;
  std::string dataset_;
  std::string trajectory_;
  Resolution res_;
};

// Episode index plus a digest of its view-0 frames.
std::string frames_id(std::size_t index, const Episode& ep) {
  std::string bytes;
  for (const auto& s : ep.steps) bytes.append(reinterpret_cast<const char*>(s.frames[0].data.data()), s.frames[0].data.size());
  return std::to_string(index) + ":" + flow::sha256_hex(bytes).substr(0, 16);
}

FeatureLayout layout_for(const Episode& ep, const TrainConfig& cfg) {
  return {cfg.history, cfg.history_stride, ep.resolution, ep.task.arm_count()};
}

}  // namespace

void TrainConfig::validate() const {
  if (chunk < 1 || queries < 1 || history < 0 || history_stride < 1 || future_stride < 1 || hidden < 1)
    throw DomainError("train config: K, N, hidden and strides must be >= 1, h >= 0");
  if (!(lambda >= 0.0)) throw DomainError("train config: lambda must be >= 0");
  if (!(lr > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || weight_decay < 0.0 ||
      !(adam_eps > 0.0))
    throw DomainError("train config: invalid optimizer settings");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) throw DomainError("train config: warmup_fraction must lie in [0, 1)");
  if (epochs < 1 || batch_size < 1) throw DomainError("train config: epochs and batch_size must be >= 1");
  flow.validate();
}

double scheduled_lr(const TrainConfig& cfg, int step, int total) {
  const int warmup = static_cast<int>(std::floor(cfg.warmup_fraction * total));
  if (step < warmup) return cfg.lr * (step + 1) / warmup;
  const int span = std::max(1, total - warmup);
  const double progress = static_cast<double>(step - warmup) / span;
  return 0.5 * cfg.lr * (1.0 + std::cos(M_PI * progress));
}

std::vector<Sample> episode_samples(const Episode& ep, const TrainConfig& cfg, FlowSource* source) {
  if (ep.views < 1) throw DomainError("episode_samples: episode has no camera frames");
  const int T = static_cast<int>(ep.steps.size());
  const int arms = ep.task.arm_count();
  FeatureBuilder builder(layout_for(ep, cfg), ep.task, cfg.flow);
  std::vector<const GrayImage*> frames;
  for (const auto& s : ep.steps) frames.push_back(&s.frames[0]);

  std::vector<Sample> out;
  out.reserve(T);
  for (int t = 0; t < T; ++t) {
    Sample smp;
    smp.x = builder.build(t, frames, ep.steps[t].proprio, source);
    for (int k = 0; k < cfg.chunk; ++k) {
      // Past the end of the episode the final command is repeated.
      const auto& a = ep.steps[std::min(t + k, T - 1)].action;
      for (int arm = 0; arm < arms; ++arm) {
        const double* v = a.data() + kActionPerArm * arm;
        smp.action_target.push_back(velocity_target(v[0], ep.task.a_max));
        smp.action_target.push_back(velocity_target(v[1], ep.task.a_max));
        smp.action_target.push_back(decode_gripper(v[2]) == sim::GripperCommand::Close ? 1.0 : -1.0);
      }
    }
    for (int i = 1; i <= cfg.queries; ++i) {
      const int s = t + i * cfg.future_stride;
      FutureFeature f;
      if (s < T && !ep.steps[s].masks.empty()) f = object_future_feature(ep.steps[s].frames[0], ep.steps[s].masks[0]);
      if (f.f.empty()) f.f.assign(kDescriptorDim, 0.0);
      smp.future_target.insert(smp.future_target.end(), f.f.begin(), f.f.end());
      smp.future_valid.push_back(f.valid);
    }
    out.push_back(std::move(smp));
  }
  return out;
}

TrainResult train_bc(const std::vector<Episode>& episodes, const TrainConfig& cfg, flow::FlowCache* cache,
                     const std::string& dataset_id) {
  cfg.validate();
  if (episodes.empty()) throw DomainError("train_bc: empty dataset");
  const FeatureLayout layout = layout_for(episodes[0], cfg);
  for (const auto& ep : episodes)
    if (ep.resolution != layout.resolution || ep.task.arm_count() != layout.arms)
      throw DomainError("train_bc: episodes disagree on resolution or arm count");

  std::vector<std::vector<Sample>> per_episode(episodes.size());
  std::vector<std::string> errors(episodes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    try {
      if (cache) {
        CachedFlow source(*cache, cfg.flow, dataset_id, frames_id(i, episodes[i]), episodes[i].resolution);
        per_episode[i] = episode_samples(episodes[i], cfg, &source);
      } else {
        per_episode[i] = episode_samples(episodes[i], cfg);
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("train_bc: sample extraction failed: " + e);

  std::vector<Sample> samples;
  for (auto& v : per_episode)
    for (auto& s : v) samples.push_back(std::move(s));
  if (samples.empty()) throw DomainError("train_bc: dataset has no steps");

  NetShape shape;
  shape.input_dim = layout.input_dim();
  shape.hidden = cfg.hidden;
  shape.chunk = cfg.chunk;
  shape.action_dim = kActionPerArm * layout.arms;
  shape.queries = cfg.queries;
  TrainResult result{PolicyParams::init(shape, cfg.seed), {}};
  std::vector<double>& theta = result.params.theta;

  const std::size_t n = samples.size();
  const int per_epoch = static_cast<int>((n + cfg.batch_size - 1) / cfg.batch_size);
  const int total = per_epoch * cfg.epochs;
  std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0), grad;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::mix_seed(cfg.seed, 0x5eed));
  std::vector<const Sample*> batch;

  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, static_cast<int>(i))]);
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++step) {
      batch.clear();
      for (std::size_t k = start; k < std::min(n, start + cfg.batch_size); ++k) batch.push_back(&samples[order[k]]);
      const LossBreakdown loss = batch_loss(result.params, batch, cfg.lambda, &grad);
      const double lr = scheduled_lr(cfg, step, total);
      const double c1 = 1.0 - std::pow(cfg.beta1, step + 1), c2 = 1.0 - std::pow(cfg.beta2, step + 1);
      for (std::size_t p = 0; p < theta.size(); ++p) {
        m[p] = cfg.beta1 * m[p] + (1.0 - cfg.beta1) * grad[p];
        v[p] = cfg.beta2 * v[p] + (1.0 - cfg.beta2) * grad[p] * grad[p];
        theta[p] -= lr * ((m[p] / c1) / (std::sqrt(v[p] / c2) + cfg.adam_eps) + cfg.weight_decay * theta[p]);
      }
      result.curve.push_back({step, loss.total, loss.action, loss.world, lr});
    }
  }
  return result;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "step,loss_total,loss_action,loss_world,lr\n";
  char line[160];
  for (const auto& r : curve) {
    std::snprintf(line, sizeof line, "%d,%.10g,%.10g,%.10g,%.10g\n", r.step, r.total, r.action, r.world, r.lr);
    out << line;
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace dynabench::policy
