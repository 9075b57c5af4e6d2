#include <bit>
#include <cstring>

#include "dynabench/container.hpp"
#include "dynabench/policy.hpp"

namespace dynabench::policy {
namespace {

constexpr char kMagic[4] = {'D', 'P', 'P', '1'};

void put(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint64_t get(int bytes, const char* what) {
    if (b_.size() - pos_ < static_cast<std::size_t>(bytes))
      throw ParseError(std::string("truncated checkpoint while reading ") + what, pos_);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += bytes;
    return v;
  }
  int u32(const char* what) {
    const std::uint64_t v = get(4, what);
    if (v > 1u << 30) throw ParseError(std::string("implausible checkpoint field ") + what, pos_ - 4);
    return static_cast<int>(v);
  }
  double f64(const char* what) { return std::bit_cast<double>(get(8, what)); }
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const PolicyCheckpoint& c) {
  const NetShape& s = c.params.shape;
  if (c.params.theta.size() != PolicyParams::count(s)) throw DomainError("checkpoint parameter count mismatch");
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put(out, kCheckpointVersion, 4);
  for (int v : {s.chunk, c.history, s.queries, s.feature_dim, s.hidden, c.history_stride, c.future_stride, s.input_dim,
                s.action_dim, c.resolution.width, c.resolution.height})
    put(out, static_cast<std::uint32_t>(v), 4);
  for (int v : {c.flow.pyramid_levels, c.flow.window, c.flow.iterations, c.flow.poly_n})
    put(out, static_cast<std::uint32_t>(v), 4);
  for (double v : {c.flow.poly_sigma, c.flow.mag_percentile, c.flow.zero_threshold}) put(out, std::bit_cast<std::uint64_t>(v), 8);
  put(out, c.params.theta.size(), 8);
  for (double v : c.params.theta) put(out, std::bit_cast<std::uint64_t>(v), 8);
  return out;
}

PolicyCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw ParseError("bad checkpoint magic", 0);
  Reader r(bytes.subspan(4));
  const auto version = static_cast<std::uint32_t>(r.get(4, "version"));
  if (version != kCheckpointVersion) throw UnsupportedVersion(version, kCheckpointVersion);
  PolicyCheckpoint c;
  NetShape& s = c.params.shape;
  s.chunk = r.u32("K");
  c.history = r.u32("h");
  s.queries = r.u32("N");
  s.feature_dim = r.u32("d");
  s.hidden = r.u32("hidden");
  c.history_stride = r.u32("history stride");
  c.future_stride = r.u32("future stride");
  s.input_dim = r.u32("input dim");
  s.action_dim = r.u32("action dim");
  c.resolution.width = r.u32("width");
  c.resolution.height = r.u32("height");
  c.flow.pyramid_levels = r.u32("pyramid levels");
  c.flow.window = r.u32("window");
  c.flow.iterations = r.u32("iterations");
  c.flow.poly_n = r.u32("poly_n");
  c.flow.poly_sigma = r.f64("poly_sigma");
  c.flow.mag_percentile = r.f64("mag_percentile");
  c.flow.zero_threshold = r.f64("zero_threshold");
  try {
    s.validate();
    c.flow.validate();
  } catch (const DomainError& e) {
    throw ParseError(std::string("invalid checkpoint config: ") + e.what(), 8);
  }
  const std::uint64_t count = r.get(8, "parameter count");
  if (count != PolicyParams::count(s)) throw ParseError("parameter count does not match the shape", r.offset() + 4 - 8);
  if (r.remaining() != count * 8) throw ParseError("checkpoint payload size mismatch", r.offset() + 4);
  c.params.theta.resize(count);
  for (auto& v : c.params.theta) v = r.f64("weights");
  return c;
}

void write_checkpoint(const std::filesystem::path& path, const PolicyCheckpoint& ckpt) {
  harness::write_file_atomic(path, encode_checkpoint(ckpt));
}

PolicyCheckpoint read_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(harness::read_file(path)); }

}  // namespace dynabench::policy
