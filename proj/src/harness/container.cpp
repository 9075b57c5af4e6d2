#include "dynabench/container.hpp"

#include <zlib.h>

#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <thread>

#include "dynabench/serialize.hpp"

namespace dynabench::harness {
namespace {

constexpr char kMagic[4] = {'D', 'M', 'B', '1'};
constexpr std::size_t kPreambleSize = 16;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::size_t offset() const { return pos_; }
  void need(std::size_t n, const char* what) const {
    if (b_.size() - pos_ < n) throw ParseError(std::string("truncated container while reading ") + what, pos_);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = crc32(crc, bytes.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

json header_of(const Episode& ep) {
  const int arms = ep.task.arm_count();
  return {{"task", to_json(ep.task)},
          {"traj", to_json(ep.traj)},
          {"seed", ep.seed},
          {"dt", ep.task.dt},
          {"views", ep.views},
          {"resolution", {ep.resolution.width, ep.resolution.height}},
          {"steps", ep.steps.size()},
          {"mask_stride", ep.mask_stride},
          {"grasp_pose", to_json(ep.grasp_pose)},
          {"t_exec", ep.t_exec},
          {"outcome", to_json(ep.outcome)},
          {"schema",
           {{"frame", "u8[height][width] per view"},
            {"mask", "u8[height][width] per view when step % mask_stride == 0"},
            {"proprio", "f64[" + std::to_string(arms * kProprioPerArm) + "] x, y, gripper_closed, holding per arm"},
            {"action", "f64[" + std::to_string(arms * kActionPerArm) + "] vx, vy, gripper_code per arm"},
            {"object_pose", "f64[2]"}}}};
}

void check_grid(const Grid<std::uint8_t>& g, Resolution res) {
  if (g.width != res.width || g.height != res.height || g.size() != static_cast<std::size_t>(res.width) * res.height)
    throw DomainError("episode grid does not match the declared resolution");
}

}  // namespace

std::vector<std::uint8_t> encode_episode(const Episode& ep) {
  if (ep.views < 0 || ep.mask_stride < 1) throw DomainError("episode views/mask_stride out of range");
  const std::size_t arms = ep.task.arm_count();
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kContainerVersion);
  const std::string header = header_of(ep).dump();
  w.u64(header.size());
  w.bytes(header.data(), header.size());
  for (std::size_t k = 0; k < ep.steps.size(); ++k) {
    const StepRecord& s = ep.steps[k];
    if (s.frames.size() != static_cast<std::size_t>(ep.views)) throw DomainError("step frame count != views");
    for (const auto& f : s.frames) {
      check_grid(f, ep.resolution);
      w.bytes(f.data.data(), f.size());
    }
    const bool has_mask = k % ep.mask_stride == 0;
    if (s.masks.size() != (has_mask ? static_cast<std::size_t>(ep.views) : 0u))
      throw DomainError("step mask count inconsistent with mask_stride");
    for (const auto& m : s.masks) {
      check_grid(m, ep.resolution);
      w.bytes(m.data.data(), m.size());
    }
    if (s.proprio.size() != arms * kProprioPerArm || s.action.size() != arms * kActionPerArm)
      throw DomainError("step proprio/action length inconsistent with arm count");
    for (double v : s.proprio) w.f64(v);
    for (double v : s.action) w.f64(v);
    w.f64(s.object_pose.x);
    w.f64(s.object_pose.y);
  }
  w.u32(crc_of(w.buffer()));
  return std::move(w.buffer());
}

Episode decode_episode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw ParseError("bad container magic", 0);
  const std::uint32_t version = r.u32("version");
  if (version != kContainerVersion) throw UnsupportedVersion(version, kContainerVersion);
  const std::uint64_t header_len = r.u64("header length");
  if (header_len > bytes.size() - kPreambleSize) throw ParseError("header length exceeds file size", 8);
  if (bytes.size() < kPreambleSize + header_len + 4) throw ParseError("container too short for its trailer", 8);

  // Integrity first: a mutated byte anywhere must not decode silently.
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored_crc = 0;
  for (int i = 0; i < 4; ++i) stored_crc |= static_cast<std::uint32_t>(bytes[body + i]) << (8 * i);
  if (crc_of(bytes.first(body)) != stored_crc) throw ParseError("container checksum mismatch", body);

  const auto header_bytes = r.take(header_len, "header");
  json h;
  try {
    h = json::parse(header_bytes.begin(), header_bytes.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed header JSON: ") + e.what(), kPreambleSize + e.byte);
  }

  Episode ep;
  std::size_t steps = 0;
  try {
    ep.task = task_from_json(h.at("task"));
    ep.traj = trajectory_from_json(h.at("traj"));
    ep.seed = h.at("seed").get<std::uint64_t>();
    ep.views = h.at("views").get<int>();
    ep.resolution = {h.at("resolution").at(0).get<int>(), h.at("resolution").at(1).get<int>()};
    steps = h.at("steps").get<std::size_t>();
    ep.mask_stride = h.at("mask_stride").get<int>();
    ep.grasp_pose = vec2_from_json(h.at("grasp_pose"));
    ep.t_exec = h.at("t_exec").get<double>();
    ep.outcome = outcome_from_json(h.at("outcome"));
    if (h.at("dt").get<double>() != ep.task.dt) throw DomainError("header dt disagrees with the task");
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid header: ") + e.what(), kPreambleSize);
  }
  if (ep.views < 0 || ep.mask_stride < 1 || ep.resolution.width < 1 || ep.resolution.height < 1)
    throw ParseError("header declares an invalid layout", kPreambleSize);

  const std::size_t arms = ep.task.arm_count();
  const std::size_t pixels = static_cast<std::size_t>(ep.resolution.width) * ep.resolution.height;
  const std::size_t fixed = (arms * (kProprioPerArm + kActionPerArm) + 2) * 8 + ep.views * pixels;
  const std::size_t masked_steps = steps == 0 ? 0 : (steps - 1) / ep.mask_stride + 1;
  const std::size_t payload = body - r.offset();
  if (steps > payload / std::max<std::size_t>(fixed, 1) + 1 ||
      steps * fixed + masked_steps * ep.views * pixels != payload)
    throw ParseError("declared step count does not match the payload size", r.offset());

  ep.steps.resize(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    StepRecord& s = ep.steps[k];
    auto grid = [&](const char* what) {
      Grid<std::uint8_t> g(ep.resolution.width, ep.resolution.height);
      const auto px = r.take(pixels, what);
      std::copy(px.begin(), px.end(), g.data.begin());
      return g;
    };
    for (int v = 0; v < ep.views; ++v) s.frames.push_back(grid("frame"));
    if (k % ep.mask_stride == 0) {
      for (int v = 0; v < ep.views; ++v) {
        const std::size_t at = r.offset();
        s.masks.push_back(grid("mask"));
        for (auto b : s.masks.back().data)
          if (b > 1) throw ParseError("mask byte outside {0, 1}", at);
      }
    }
    for (std::size_t i = 0; i < arms * kProprioPerArm; ++i) s.proprio.push_back(r.f64("proprio"));
    for (std::size_t i = 0; i < arms * kActionPerArm; ++i) s.action.push_back(r.f64("action"));
    s.object_pose.x = r.f64("object pose");
    s.object_pose.y = r.f64("object pose");
  }
  return ep;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  static std::atomic<std::uint64_t> counter{0};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "." +
         std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_episode(const std::filesystem::path& path, const Episode& episode) {
  write_file_atomic(path, encode_episode(episode));
}

Episode read_episode(const std::filesystem::path& path) { return decode_episode(read_file(path)); }

void write_manifest(const std::filesystem::path& path, const expert::DatasetManifest& manifest) {
  const std::string text = to_json(manifest).dump(2) + "\n";
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

expert::DatasetManifest read_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return manifest_from_json(json::parse(bytes.begin(), bytes.end()));
  } catch (const json::exception& e) {
    throw ConfigError("invalid manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace dynabench::harness
