#include <algorithm>
#include <cmath>

#include "dynabench/policy.hpp"

namespace dynabench::policy {

void NetShape::validate() const {
  if (input_dim < 1 || hidden < 1 || chunk < 1 || action_dim < 1 || queries < 1 || feature_dim < 1)
    throw DomainError("network shape entries must be positive");
}

PolicyParams::Offsets PolicyParams::offsets(const NetShape& s) {
  Offsets o{};
  const std::size_t h = s.hidden, out = static_cast<std::size_t>(s.chunk) * s.action_dim;
  o.w1 = 0;
  o.b1 = o.w1 + static_cast<std::size_t>(s.input_dim) * h;
  o.wa = o.b1 + h;
  o.ba = o.wa + out * h;
  o.q = o.ba + out;
  o.b = o.q + static_cast<std::size_t>(s.queries) * h;
  o.bz = o.b + static_cast<std::size_t>(s.feature_dim) * h * h;
  o.end = o.bz + s.feature_dim;
  return o;
}

std::size_t PolicyParams::count(const NetShape& shape) { return offsets(shape).end; }

PolicyParams PolicyParams::zeros(const NetShape& shape) {
  shape.validate();
  return {shape, std::vector<double>(count(shape), 0.0)};
}

PolicyParams PolicyParams::init(const NetShape& shape, std::uint64_t seed) {
  PolicyParams p = zeros(shape);
  const Offsets o = offsets(shape);
  Rng rng(seed);
  auto fill = [&](std::size_t from, std::size_t to, double sigma) {
    for (std::size_t i = from; i < to; ++i) p.theta[i] = sigma * rng.normal();
  };
  fill(o.w1, o.b1, 1.0 / std::sqrt(static_cast<double>(shape.input_dim)));
  fill(o.wa, o.ba, 1.0 / std::sqrt(static_cast<double>(shape.hidden)));
  fill(o.q, o.b, 1.0 / std::sqrt(static_cast<double>(shape.hidden)));
  fill(o.b, o.bz, 1.0 / shape.hidden);
  return p;
}

namespace {

struct Cache {
  std::vector<double> h;
  std::vector<double> y;
  std::vector<double> u;  // feature_dim x hidden
  std::vector<double> z;
};

Cache run_forward(const PolicyParams& p, const SparseInput& x) {
  const NetShape& s = p.shape;
  const auto o = PolicyParams::offsets(s);
  const int H = s.hidden;
  const double* th = p.theta.data();
  Cache c;
  c.h.assign(th + o.b1, th + o.b1 + H);
  for (const Feature& f : x) {
    if (f.index >= static_cast<std::uint32_t>(s.input_dim)) throw DomainError("network input index out of range");
    const double* w = th + o.w1 + static_cast<std::size_t>(f.index) * H;
    for (int i = 0; i < H; ++i) c.h[i] += w[i] * f.value;
  }
  for (double& v : c.h) v = std::tanh(v);

  const int out = s.chunk * s.action_dim;
  c.y.resize(out);
  for (int r = 0; r < out; ++r) {
    const double* w = th + o.wa + static_cast<std::size_t>(r) * H;
    double acc = th[o.ba + r];
    for (int i = 0; i < H; ++i) acc += w[i] * c.h[i];
    c.y[r] = acc;
  }

  const int d = s.feature_dim;
  c.u.assign(static_cast<std::size_t>(d) * H, 0.0);
  for (int j = 0; j < d; ++j) {
    const double* bj = th + o.b + static_cast<std::size_t>(j) * H * H;
    for (int a = 0; a < H; ++a) {
      double acc = 0.0;
      for (int b = 0; b < H; ++b) acc += bj[static_cast<std::size_t>(a) * H + b] * c.h[b];
      c.u[static_cast<std::size_t>(j) * H + a] = acc;
    }
  }
  c.z.resize(static_cast<std::size_t>(s.queries) * d);
  for (int q = 0; q < s.queries; ++q) {
    const double* qv = th + o.q + static_cast<std::size_t>(q) * H;
    for (int j = 0; j < d; ++j) {
      double acc = th[o.bz + j];
      for (int a = 0; a < H; ++a) acc += qv[a] * c.u[static_cast<std::size_t>(j) * H + a];
      c.z[static_cast<std::size_t>(q) * d + j] = acc;
    }
  }
  return c;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// A slot counts toward the world loss only if both norms clear the guard.
bool usable_slot(const double* z, const double* f, int d) {
  return std::sqrt(dot(z, z, d)) > 1e-12 && std::sqrt(dot(f, f, d)) > 1e-12;
}

void check_sample(const NetShape& s, const Sample& smp) {
  if (smp.action_target.size() != static_cast<std::size_t>(s.chunk) * s.action_dim ||
      smp.future_target.size() != static_cast<std::size_t>(s.queries) * s.feature_dim ||
      smp.future_valid.size() != static_cast<std::size_t>(s.queries))
    throw DomainError("sample shapes do not match the network");
}

}  // namespace

ForwardResult forward(const PolicyParams& params, const SparseInput& x) {
  Cache c = run_forward(params, x);
  return {std::move(c.h), std::move(c.y), std::move(c.z)};
}

double loss_action(std::span<const double> pred, std::span<const double> target, int chunk) {
  if (pred.size() != target.size() || chunk < 1) throw DomainError("loss_action: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
  return s / chunk;
}

double loss_world(std::span<const double> z, std::span<const double> f, const std::vector<bool>& valid, int dim) {
  if (z.size() != f.size() || dim < 1 || z.size() != valid.size() * dim) throw DomainError("loss_world: shape mismatch");
  double s = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < valid.size(); ++i) {
    const double* zi = z.data() + i * dim;
    const double* fi = f.data() + i * dim;
    if (!valid[i] || !usable_slot(zi, fi, dim)) continue;
    s += 1.0 - dot(zi, fi, dim) / (std::sqrt(dot(zi, zi, dim)) * std::sqrt(dot(fi, fi, dim)));
    ++n;
  }
  return n ? s / n : 0.0;
}

LossBreakdown batch_loss(const PolicyParams& params, std::span<const Sample* const> batch, double lambda,
                         std::vector<double>* grad) {
  const NetShape& s = params.shape;
  if (batch.empty()) throw DomainError("batch_loss: empty batch");
  const int H = s.hidden, d = s.feature_dim, out = s.chunk * s.action_dim;
  const auto o = PolicyParams::offsets(s);

  std::vector<Cache> caches;
  caches.reserve(batch.size());
  int valid_slots = 0;
  LossBreakdown loss;
  double world_sum = 0.0;
  for (const Sample* smp : batch) {
    check_sample(s, *smp);
    caches.push_back(run_forward(params, smp->x));
    const Cache& c = caches.back();
    loss.action += loss_action(c.y, smp->action_target, s.chunk);
    for (int q = 0; q < s.queries; ++q) {
      const double* z = c.z.data() + static_cast<std::size_t>(q) * d;
      const double* f = smp->future_target.data() + static_cast<std::size_t>(q) * d;
      if (!smp->future_valid[q] || !usable_slot(z, f, d)) continue;
      world_sum += 1.0 - dot(z, f, d) / (std::sqrt(dot(z, z, d)) * std::sqrt(dot(f, f, d)));
      ++valid_slots;
    }
  }
  const double nb = static_cast<double>(batch.size());
  loss.action /= nb;
  loss.world = valid_slots ? world_sum / valid_slots : 0.0;
  loss.total = loss_total(loss.action, loss.world, lambda);
  if (!grad) return loss;

  grad->assign(params.theta.size(), 0.0);
  double* g = grad->data();
  const double* th = params.theta.data();
  const bool world_active = lambda != 0.0 && valid_slots > 0;
  std::vector<double> dh(H), dz(static_cast<std::size_t>(s.queries) * d), du(static_cast<std::size_t>(d) * H);

  for (std::size_t n = 0; n < batch.size(); ++n) {
    const Sample& smp = *batch[n];
    const Cache& c = caches[n];
    std::fill(dh.begin(), dh.end(), 0.0);

    for (int r = 0; r < out; ++r) {
      const double dy = sign(c.y[r] - smp.action_target[r]) / (s.chunk * nb);
      if (dy == 0.0) continue;
      g[o.ba + r] += dy;
      const double* w = th + o.wa + static_cast<std::size_t>(r) * H;
      double* gw = g + o.wa + static_cast<std::size_t>(r) * H;
      for (int i = 0; i < H; ++i) {
        gw[i] += dy * c.h[i];
        dh[i] += dy * w[i];
      }
    }

    if (world_active) {
      std::fill(dz.begin(), dz.end(), 0.0);
      bool any = false;
      for (int q = 0; q < s.queries; ++q) {
        const double* z = c.z.data() + static_cast<std::size_t>(q) * d;
        const double* f = smp.future_target.data() + static_cast<std::size_t>(q) * d;
        if (!smp.future_valid[q] || !usable_slot(z, f, d)) continue;
        const double nz = std::sqrt(dot(z, z, d)), nf = std::sqrt(dot(f, f, d));
        const double cosv = dot(z, f, d) / (nz * nf);
        const double scale = lambda / valid_slots;
        for (int j = 0; j < d; ++j) dz[static_cast<std::size_t>(q) * d + j] = -scale * (f[j] / (nz * nf) - cosv * z[j] / (nz * nz));
        any = true;
      }
      if (any) {
        std::fill(du.begin(), du.end(), 0.0);
        for (int q = 0; q < s.queries; ++q) {
          const double* qv = th + o.q + static_cast<std::size_t>(q) * H;
          double* gq = g + o.q + static_cast<std::size_t>(q) * H;
          for (int j = 0; j < d; ++j) {
            const double dzj = dz[static_cast<std::size_t>(q) * d + j];
            if (dzj == 0.0) continue;
            g[o.bz + j] += dzj;
            const double* uj = c.u.data() + static_cast<std::size_t>(j) * H;
            double* duj = du.data() + static_cast<std::size_t>(j) * H;
            for (int a = 0; a < H; ++a) {
              gq[a] += dzj * uj[a];
              duj[a] += dzj * qv[a];
            }
          }
        }
        for (int j = 0; j < d; ++j) {
          const double* bj = th + o.b + static_cast<std::size_t>(j) * H * H;
          double* gbj = g + o.b + static_cast<std::size_t>(j) * H * H;
          const double* duj = du.data() + static_cast<std::size_t>(j) * H;
          for (int a = 0; a < H; ++a) {
            if (duj[a] == 0.0) continue;
            for (int b = 0; b < H; ++b) {
              gbj[static_cast<std::size_t>(a) * H + b] += duj[a] * c.h[b];
              dh[b] += duj[a] * bj[static_cast<std::size_t>(a) * H + b];
            }
          }
        }
      }
    }

    for (int i = 0; i < H; ++i) dh[i] *= 1.0 - c.h[i] * c.h[i];
    for (int i = 0; i < H; ++i) g[o.b1 + i] += dh[i];
    for (const Feature& f : smp.x) {
      double* gw = g + o.w1 + static_cast<std::size_t>(f.index) * H;
      for (int i = 0; i < H; ++i) gw[i] += f.value * dh[i];
    }
  }
  return loss;
}

}  // namespace dynabench::policy
