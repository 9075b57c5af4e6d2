#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dynabench/episode.hpp"
#include "dynabench/flow.hpp"
#include "dynabench/rollout.hpp"

/// A small predictive visuomotor policy: patch descriptors of the current
/// frame and of a chained optical-flow history feed a one-hidden-layer trunk
/// with an action-chunk head and a world-query head that predicts future
/// object features. Trained by behavioral cloning with an auxiliary cosine
/// loss on the predicted features.
namespace dynabench::policy {

inline constexpr int kPatchSize = 8;
inline constexpr int kDescriptorDim = 9;  ///< 8 orientation bins + mean intensity
inline constexpr int kPositionInputsPerArm = 2;  ///< normalized ee x, y

/// Per-patch descriptors, patch-major: data[(row * cols + col) * 9 + k].
struct PatchFeatureGrid {
  int cols = 0;
  int rows = 0;
  std::vector<double> data;

  std::span<const double> patch(int col, int row) const {
    return {data.data() + (static_cast<std::size_t>(row) * cols + col) * kDescriptorDim, kDescriptorDim};
  }
  std::size_t dim() const { return data.size(); }
  bool operator==(const PatchFeatureGrid&) const = default;
};

/// Bins 0..7 hold the gradient-magnitude-weighted orientation histogram
/// (bin k centered at k * 45 degrees, angle = atan2(dy, dx) with image rows
/// growing downward), L2-normalized when non-zero. Element 8 is the mean
/// intensity / 255. Edge patches cover only in-bounds pixels.
PatchFeatureGrid patch_features(const GrayImage& frame);

struct FutureFeature {
  std::vector<double> f;  ///< kDescriptorDim values
  bool valid = false;
};

/// Mean descriptor over patches more than half covered by the mask.
FutureFeature object_future_feature(const GrayImage& frame, const Mask& mask);

/// Sparse input entry; network inputs are mostly zero.
struct Feature {
  std::uint32_t index = 0;
  double value = 0.0;
  bool operator==(const Feature&) const = default;
};
using SparseInput = std::vector<Feature>;

struct NetShape {
  int input_dim = 0;
  int hidden = 64;
  int chunk = 15;       ///< K
  int action_dim = 3;   ///< per step: vx, vy, gripper per arm
  int queries = 4;      ///< N
  int feature_dim = kDescriptorDim;
  void validate() const;
  bool operator==(const NetShape&) const = default;
};

/// All weights in one flat vector, in this order:
///   W1 [input_dim][hidden], b1 [hidden],
///   Wa [chunk * action_dim][hidden], ba [chunk * action_dim],
///   Q [queries][hidden], B [feature_dim][hidden][hidden], bz [feature_dim].
struct PolicyParams {
  NetShape shape;
  std::vector<double> theta;

  static PolicyParams zeros(const NetShape& shape);
  static PolicyParams init(const NetShape& shape, std::uint64_t seed);
  static std::size_t count(const NetShape& shape);

  struct Offsets {
    std::size_t w1, b1, wa, ba, q, b, bz, end;
  };
  static Offsets offsets(const NetShape& shape);
  bool operator==(const PolicyParams&) const = default;
};

struct ForwardResult {
  std::vector<double> hidden;   ///< tanh activations
  std::vector<double> actions;  ///< chunk x action_dim, raw (pre-tanh for velocities)
  std::vector<double> z;        ///< queries x feature_dim
};

/// Throws DomainError if an input index is out of range.
ForwardResult forward(const PolicyParams& params, const SparseInput& x);

/// (1/K) sum_k ||pred_k - target_k||_1.
double loss_action(std::span<const double> pred, std::span<const double> target, int chunk);
/// Mean of 1 - cos(z_i, f_i) over valid slots whose norms exceed 1e-12; 0 if none.
double loss_world(std::span<const double> z, std::span<const double> f, const std::vector<bool>& valid, int dim);
inline double loss_total(double action, double world, double lambda) { return action + lambda * world; }

struct Sample {
  SparseInput x;
  std::vector<double> action_target;  ///< chunk x action_dim
  std::vector<double> future_target;  ///< queries x feature_dim
  std::vector<bool> future_valid;     ///< per query
};

struct LossBreakdown {
  double total = 0.0;
  double action = 0.0;
  double world = 0.0;
};

/// Batch losses: action loss averaged over samples, world loss averaged over
/// every valid slot in the batch. If `grad` is non-null it receives the
/// gradient of the total loss (same layout as theta, overwritten).
LossBreakdown batch_loss(const PolicyParams& params, std::span<const Sample* const> batch, double lambda,
                         std::vector<double>* grad = nullptr);

struct TrainConfig {
  int chunk = 15;           ///< K
  int history = 4;          ///< h; 0 = memoryless
  int history_stride = 4;
  int queries = 4;          ///< N
  int future_stride = 4;
  double lambda = 0.05;
  int hidden = 64;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double weight_decay = 1e-8;
  double adam_eps = 1e-8;
  double warmup_fraction = 0.05;
  int epochs = 30;
  int batch_size = 64;
  std::uint64_t seed = 0;
  flow::FlowParams flow;
  void validate() const;
};

/// Learning rate at optimizer step `step` of `total`: linear warmup, then
/// cosine decay to zero.
double scheduled_lr(const TrainConfig& cfg, int step, int total);

struct LossRecord {
  int step = 0;
  double total = 0.0;
  double action = 0.0;
  double world = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  PolicyParams params;
  std::vector<LossRecord> curve;  ///< one record per optimizer step
};

/// Input layout shared by training and inference.
struct FeatureLayout {
  int history = 4;
  int history_stride = 4;
  Resolution resolution;
  int arms = 1;
  int frame_dim() const;
  int input_dim() const;
};

/// Step indices of the chained history frames at step t, newest first:
/// max(0, t - k * stride) for k = 0..h.
std::vector<int> history_indices(int t, int history, int stride);

/// Supplies flow maps for frame pairs of one episode. The default computes
/// them directly; training can route them through a FlowCache.
class FlowSource {
 public:
  virtual ~FlowSource() = default;
  virtual flow::FlowMap get(int from, int to, const GrayImage& a, const GrayImage& b) = 0;
};

/// Builds network inputs from frames and proprioception, memoizing per-frame
/// and per-pair descriptors by step index.
class FeatureBuilder {
 public:
  FeatureBuilder(const FeatureLayout& layout, const sim::TaskSpec& task, const flow::FlowParams& flow);
  /// frames[i] is the view-0 frame observed at step i; only indices returned
  /// by history_indices(t, ...) are read.
  SparseInput build(int t, const std::vector<const GrayImage*>& frames, const std::vector<double>& proprio,
                    FlowSource* source = nullptr);
  const FeatureLayout& layout() const { return layout_; }

 private:
  const SparseInput& frame_block(int step, const GrayImage& frame);
  const SparseInput& flow_block(int from, int to, const GrayImage& a, const GrayImage& b, FlowSource* source);

  FeatureLayout layout_;
  sim::TaskSpec task_;
  flow::FlowParams flow_;
  std::map<int, SparseInput> frames_;
  std::map<std::pair<int, int>, SparseInput> flows_;
};

/// Maps a commanded velocity component to the raw network target.
double velocity_target(double v, double a_max);
/// Raw network output -> executed action for one step.
sim::Action decode_step(std::span<const double> raw, int arms, double a_max);

/// Training tuples for every step of an episode.
std::vector<Sample> episode_samples(const Episode& episode, const TrainConfig& cfg, FlowSource* source = nullptr);

/// Behavioral cloning with AdamW. Deterministic for a fixed seed.
TrainResult train_bc(const std::vector<Episode>& episodes, const TrainConfig& cfg,
                     flow::FlowCache* cache = nullptr, const std::string& dataset_id = "");

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& curve);

/// Everything needed to run a trained policy.
struct PolicyCheckpoint {
  PolicyParams params;
  int history = 4;
  int history_stride = 4;
  int future_stride = 4;
  Resolution resolution;
  flow::FlowParams flow;
  bool operator==(const PolicyCheckpoint&) const = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// "DPP1" | version u32 | K, h, N, d, hidden, history_stride, future_stride,
/// input_dim, action_dim, width, height (u32 each) | flow params (4 x u32,
/// 3 x f64) | parameter count u64 | theta f64[count]. Little-endian.
std::vector<std::uint8_t> encode_checkpoint(const PolicyCheckpoint& ckpt);
PolicyCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void write_checkpoint(const std::filesystem::path& path, const PolicyCheckpoint& ckpt);
PolicyCheckpoint read_checkpoint(const std::filesystem::path& path);

/// Closed-loop controller: replans every `replan_every` steps and executes
/// the first actions of each chunk. Sees observations only.
class ChunkPolicy : public sim::Controller {
 public:
  ChunkPolicy(PolicyCheckpoint ckpt, const sim::TaskSpec& task, int replan_every = 5);
  sim::Action act(const sim::Observation& obs) override;

 private:
  PolicyCheckpoint ckpt_;
  sim::TaskSpec task_;
  int replan_every_;
  FeatureBuilder features_;
  std::vector<GrayImage> frames_;
  std::vector<double> chunk_;
  int step_ = 0;
  int chunk_start_ = 0;
};

}  // namespace dynabench::policy
