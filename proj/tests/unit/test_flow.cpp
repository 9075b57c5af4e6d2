#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "../support/scenes.hpp"
#include "dynabench/flow.hpp"

using namespace dynabench;
using namespace dynabench::flow;
using dynabench::testing::disc_scene;
using dynabench::testing::interior_epe;

namespace fs = std::filesystem;

namespace {

FlowField uniform_field(int w, int h, float u, float v) {
  FlowField f(w, h);
  std::fill(f.u.begin(), f.u.end(), u);
  std::fill(f.v.begin(), f.v.end(), v);
  return f;
}

// Hue in degrees of an RGB pixel, or -1 when it is black.
double hue_of(const FlowMap& m, std::size_t i) {
  const double r = m.rgb[3 * i], g = m.rgb[3 * i + 1], b = m.rgb[3 * i + 2];
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  if (mx == 0 || mx == mn) return -1;
  double h;
  if (mx == r) h = 60 * std::fmod((g - b) / (mx - mn), 6.0);
  else if (mx == g) h = 60 * ((b - r) / (mx - mn) + 2);
  else h = 60 * ((r - g) / (mx - mn) + 4);
  return h < 0 ? h + 360 : h;
}

double hue_gap(double a, double b) {
  const double d = std::fabs(a - b);
  return std::min(d, 360 - d);
}

}  // namespace

TEST_CASE("zero motion") {
  const GrayImage a = disc_scene(0, 0);
  const FlowField f = dense_flow(a, a);
  for (std::size_t i = 0; i < f.u.size(); ++i) CHECK(std::hypot(f.u[i], f.v[i]) < 0.05);
}

TEST_CASE("synthetic translations") {
  const GrayImage a = disc_scene(0, 0);
  CHECK(interior_epe(dense_flow(a, disc_scene(2, 0)), 2, 0) <= 0.5);
  CHECK(interior_epe(dense_flow(a, disc_scene(-1, 3)), -1, 3) <= 0.5);
}

TEST_CASE("flow is roughly linear and antisymmetric") {
  const GrayImage a = disc_scene(0, 0);
  const auto mean_u = [](const FlowField& f) {
    double s = 0;
    for (float x : f.u) s += x;
    return s / f.u.size();
  };
  const double one = mean_u(dense_flow(a, disc_scene(1, 0)));
  const double two = mean_u(dense_flow(a, disc_scene(2, 0)));
  CHECK(two / one >= 1.6);
  CHECK(two / one <= 2.4);

  const GrayImage b = disc_scene(2, -1);
  const FlowField fw = dense_flow(a, b), bw = dense_flow(b, a);
  double sum = 0;
  int n = 0;
  for (int y = testing::kInteriorMargin; y < 64 - testing::kInteriorMargin; ++y)
    for (int x = testing::kInteriorMargin; x < 64 - testing::kInteriorMargin; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * 64 + x;
      sum += std::hypot(fw.u[i] + bw.u[i], fw.v[i] + bw.v[i]);
      ++n;
    }
  CHECK(sum / n <= 0.5);
}

TEST_CASE("parallel and reference implementations agree") {
  const GrayImage a = disc_scene(0, 0), b = disc_scene(2, -1);
  const FlowField p = dense_flow(a, b), r = dense_flow_reference(a, b);
  REQUIRE(p.u.size() == r.u.size());
  double worst = 0;
  for (std::size_t i = 0; i < p.u.size(); ++i)
    worst = std::max<double>(worst, std::fabs(p.u[i] - r.u[i]) + std::fabs(p.v[i] - r.v[i]));
  CHECK(worst < 1e-3);
}

TEST_CASE("flow input checks") {
  CHECK_THROWS_AS(dense_flow(GrayImage(32, 32), GrayImage(32, 24)), DomainError);
  CHECK_THROWS_AS(dense_flow(GrayImage(8, 8), GrayImage(8, 8)), DomainError);
  CHECK_THROWS_AS(flow_history({GrayImage(32, 32)}), DomainError);
}

TEST_CASE("flow maps") {
  FlowParams p;
  const FlowMap black = flow_to_rgb(FlowField(16, 16), p);
  for (auto c : black.rgb) CHECK(c == 0);

  const FlowMap right = flow_to_rgb(uniform_field(16, 16, 0.5f, 0.0f), p);
  for (std::size_t i = 0; i < 16 * 16; ++i) {
    CHECK(right.rgb[3 * i] == 255);
    CHECK(right.rgb[3 * i + 1] == 0);
    CHECK(right.rgb[3 * i + 2] == 0);
  }

  const FlowMap faint = flow_to_rgb(uniform_field(16, 16, 0.01f, 0.0f), p);
  for (auto c : faint.rgb) CHECK(c == 0);

  // Percentile normalization cancels a uniform scale.
  const GrayImage a = disc_scene(0, 0);
  FlowField f = dense_flow(a, disc_scene(1, 2));
  const FlowMap base = flow_to_rgb(f, p);
  for (auto& x : f.u) x *= 4;
  for (auto& x : f.v) x *= 4;
  CHECK(flow_to_rgb(f, p) == base);
}

TEST_CASE("flow history") {
  std::vector<GrayImage> frames;
  for (int k = 0; k < 5; ++k) frames.push_back(disc_scene(k, k * 0.5));
  const auto maps = flow_history(frames);
  REQUIRE(maps.size() == 4);
  CHECK(maps[0] == flow_to_rgb(dense_flow(frames[0], frames[1])));

  std::vector<double> hues;
  for (const FlowMap& m : maps) {
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < 64 * 64; ++i) {
      const double h = hue_of(m, i);
      if (h < 0) continue;
      sx += std::cos(h * M_PI / 180);
      sy += std::sin(h * M_PI / 180);
    }
    double mean = std::atan2(sy, sx) * 180 / M_PI;
    hues.push_back(mean < 0 ? mean + 360 : mean);
  }
  for (double h : hues) CHECK(hue_gap(h, hues[0]) <= 10);

  const auto still = flow_history(std::vector<GrayImage>(3, disc_scene(0, 0)));
  REQUIRE(still.size() == 2);
  for (const FlowMap& m : still)
    for (auto c : m.rgb) CHECK(c == 0);
}

TEST_CASE("cache keys") {
  FlowCacheKey k{"data", "traj", 3, {-4, 0}, 0, {64, 64}};
  const std::string d = k.digest();
  CHECK(d.size() == 64);
  CHECK(d.find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(d == sha256_hex(k.canonical()));
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

  std::set<std::string> canon, digests;
  for (int step = 0; step < 200; ++step)
    for (int view = 0; view < 2; ++view)
      for (int off = 1; off < 6; ++off) {
        const FlowCacheKey key{"data", "t", step, {-off, 0}, view, {64, 64}};
        canon.insert(key.canonical());
        digests.insert(key.digest());
      }
  CHECK(canon.size() == 2000);
  CHECK(digests.size() == canon.size());
}

TEST_CASE("cache round trip") {
  const fs::path dir = fs::temp_directory_path() / "dynabench_test_flowcache";
  fs::remove_all(dir);
  const FlowParams p;
  const GrayImage a = disc_scene(0, 0), b = disc_scene(1, 1);
  int computed = 0;
  const auto compute = [&] {
    ++computed;
    return flow_to_rgb(dense_flow(a, b, p), p);
  };
  const FlowCacheKey key{"data", "traj", 7, {-1, 0}, 0, {64, 64}};
  {
    FlowCache cache(dir, p);
    const FlowMap first = cache.get_or_compute(key, compute);
    const FlowMap second = cache.get_or_compute(key, compute);
    CHECK(first == second);
    CHECK(computed == 1);
    CHECK(cache.hits() == 1);
    CHECK(cache.misses() == 1);
    CHECK(encode_flow_map(first) == encode_flow_map(second));

    fs::remove(cache.path_for(key));
    CHECK(cache.get_or_compute(key, compute) == first);
    CHECK(computed == 2);

    // A corrupt payload is recomputed.
    { std::ofstream(cache.path_for(key), std::ios::binary) << "XXXX"; }
    CHECK(cache.get_or_compute(key, compute) == first);
    CHECK(computed == 3);
  }
  FlowParams other = p;
  other.window = 11;
  CHECK_THROWS_AS(FlowCache(dir, other), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("flow map payload") {
  FlowMap m(3, 2);
  for (std::size_t i = 0; i < m.rgb.size(); ++i) m.rgb[i] = static_cast<std::uint8_t>(i * 13);
  const auto bytes = encode_flow_map(m);
  REQUIRE(bytes.size() == 16 + 18);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "DFC1");
  FlowMap back;
  CHECK(decode_flow_map(bytes, back));
  CHECK(back == m);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_FALSE(decode_flow_map(bad, back));
  bad = bytes;
  bad.pop_back();
  CHECK_FALSE(decode_flow_map(bad, back));
}
