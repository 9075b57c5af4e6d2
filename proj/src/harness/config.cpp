#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "dynabench/harness.hpp"

namespace dynabench::harness {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> items;
  if (trim(text).empty()) return items;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    items.push_back(trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

// One config key: how to read it into a RunConfig and how to print it back.
struct Key {
  const char* name;
  std::function<bool(RunConfig&, std::string_view)> parse;
  std::function<std::string(const RunConfig&)> print;
};

template <class T>
Key number(const char* name, T RunConfig::*member) {
  return {name,
          [member](RunConfig& c, std::string_view v) { return parse_number(v, c.*member); },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*member);
            else return std::to_string(c.*member);
          }};
}

Key text(const char* name, std::string RunConfig::*member) {
  return {name,
          [member](RunConfig& c, std::string_view v) {
            c.*member = std::string(v);
            return true;
          },
          [member](const RunConfig& c) { return c.*member; }};
}

Key flag(const char* name, bool RunConfig::*member) {
  return {name,
          [member](RunConfig& c, std::string_view v) {
            if (v == "true") c.*member = true;
            else if (v == "false") c.*member = false;
            else return false;
            return true;
          },
          [member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

template <class T>
Key list(const char* name, std::vector<T> RunConfig::*member) {
  return {name,
          [member](RunConfig& c, std::string_view v) {
            std::vector<T> out;
            for (auto item : split_list(v)) {
              T x{};
              if (!parse_number(item, x)) return false;
              out.push_back(x);
            }
            c.*member = std::move(out);
            return true;
          },
          [member](const RunConfig& c) {
            std::string s;
            for (const T& x : c.*member) {
              if (!s.empty()) s += ", ";
              if constexpr (std::is_floating_point_v<T>) s += format_double(x);
              else s += std::to_string(x);
            }
            return s;
          }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      text("task", &RunConfig::task),
      text("taxonomy", &RunConfig::taxonomy),
      number("hold_window", &RunConfig::hold_window),
      number("level", &RunConfig::level),
      number("alpha", &RunConfig::alpha),
      number("dt", &RunConfig::dt),
      number("t_max", &RunConfig::t_max),
      number("contact_radius", &RunConfig::contact_radius),
      number("lift_height_proxy", &RunConfig::lift_height_proxy),
      number("a_max", &RunConfig::a_max),
      number("camera_latency", &RunConfig::camera_latency),
      number("clutter_count", &RunConfig::clutter_count),
      flag("dual_arm", &RunConfig::dual_arm),
      number("approach_speed", &RunConfig::approach_speed),
      number("approach_accel", &RunConfig::approach_accel),
      number("settle_steps", &RunConfig::settle_steps),
      number("max_retries", &RunConfig::max_retries),
      number("preclose_factor", &RunConfig::preclose_factor),
      flag("randomized", &RunConfig::randomized),
      number("episodes", &RunConfig::episodes),
      number("views", &RunConfig::views),
      number("width", &RunConfig::width),
      number("height", &RunConfig::height),
      number("mask_stride", &RunConfig::mask_stride),
      number("seed", &RunConfig::seed),
      number("flow_levels", &RunConfig::flow_levels),
      number("flow_window", &RunConfig::flow_window),
      number("flow_iterations", &RunConfig::flow_iterations),
      number("flow_poly_n", &RunConfig::flow_poly_n),
      number("flow_poly_sigma", &RunConfig::flow_poly_sigma),
      number("flow_mag_percentile", &RunConfig::flow_mag_percentile),
      number("flow_zero_threshold", &RunConfig::flow_zero_threshold),
      number("chunk", &RunConfig::chunk),
      number("history", &RunConfig::history),
      number("history_stride", &RunConfig::history_stride),
      number("queries", &RunConfig::queries),
      number("future_stride", &RunConfig::future_stride),
      number("lambda", &RunConfig::lambda),
      number("hidden", &RunConfig::hidden),
      number("lr", &RunConfig::lr),
      number("weight_decay", &RunConfig::weight_decay),
      number("warmup_fraction", &RunConfig::warmup_fraction),
      number("epochs", &RunConfig::epochs),
      number("batch_size", &RunConfig::batch_size),
      number("replan_every", &RunConfig::replan_every),
      number("eval_episodes", &RunConfig::eval_episodes),
      number("eval_seed", &RunConfig::eval_seed),
      list("alphas", &RunConfig::alphas),
      list("levels", &RunConfig::levels),
      text("data_dir", &RunConfig::data_dir),
      text("out_dir", &RunConfig::out_dir),
      text("cache_dir", &RunConfig::cache_dir),
  };
  return table;
}

sim::Taxonomy parse_taxonomy(const std::string& name) {
  if (name == "interception") return sim::Taxonomy::Interception;
  if (name == "tracking") return sim::Taxonomy::Tracking;
  throw ConfigError("taxonomy must be 'interception' or 'tracking', got '" + name + "'");
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = "config line " + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return key == k.name; });
    if (it == table.end()) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second) throw ConfigError(where + "duplicate key '" + std::string(key) + "'");
    if (!it->parse(cfg, value))
      throw ConfigError(where + "invalid value '" + std::string(value) + "' for '" + std::string(key) + "'");
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const Key& k : keys()) out += std::string(k.name) + " = " + k.print(cfg) + "\n";
  return out;
}

sim::TaskSpec task_spec(const RunConfig& cfg) {
  sim::TaskSpec t;
  t.name = cfg.task;
  t.taxonomy = parse_taxonomy(cfg.taxonomy);
  t.hold_window = cfg.hold_window;
  t.level = traj::level_from_int(cfg.level);
  t.alpha = cfg.alpha;
  t.dt = cfg.dt;
  t.t_max = cfg.t_max;
  t.contact_radius = cfg.contact_radius;
  t.lift_height_proxy = cfg.lift_height_proxy;
  t.a_max = cfg.a_max;
  t.camera_latency = cfg.camera_latency;
  t.clutter_count = cfg.clutter_count;
  t.dual_arm = cfg.dual_arm;
  return t;
}

expert::ExpertConfig expert_config(const RunConfig& cfg) {
  expert::ExpertConfig e;
  e.approach_speed = cfg.approach_speed;
  e.approach_accel = cfg.approach_accel;
  e.settle_steps = cfg.settle_steps;
  e.max_retries = cfg.max_retries;
  e.preclose_factor = cfg.preclose_factor;
  e.randomized = cfg.randomized;
  return e;
}

flow::FlowParams flow_params(const RunConfig& cfg) {
  flow::FlowParams f;
  f.pyramid_levels = cfg.flow_levels;
  f.window = cfg.flow_window;
  f.iterations = cfg.flow_iterations;
  f.poly_n = cfg.flow_poly_n;
  f.poly_sigma = cfg.flow_poly_sigma;
  f.mag_percentile = cfg.flow_mag_percentile;
  f.zero_threshold = cfg.flow_zero_threshold;
  return f;
}

policy::TrainConfig train_config(const RunConfig& cfg) {
  policy::TrainConfig t;
  t.chunk = cfg.chunk;
  t.history = cfg.history;
  t.history_stride = cfg.history_stride;
  t.queries = cfg.queries;
  t.future_stride = cfg.future_stride;
  t.lambda = cfg.lambda;
  t.hidden = cfg.hidden;
  t.lr = cfg.lr;
  t.weight_decay = cfg.weight_decay;
  t.warmup_fraction = cfg.warmup_fraction;
  t.epochs = cfg.epochs;
  t.batch_size = cfg.batch_size;
  t.seed = cfg.seed;
  t.flow = flow_params(cfg);
  return t;
}

metrics::EvalOptions eval_options(const RunConfig& cfg) {
  metrics::EvalOptions o;
  o.episodes = cfg.eval_episodes;
  o.base_seed = cfg.eval_seed;
  o.scenario_cfg = expert_config(cfg);
  return o;
}

void validate(const RunConfig& cfg) {
  try {
    const sim::TaskSpec task = task_spec(cfg);
    task.validate();
    expert_config(cfg).validate(task);
    train_config(cfg).validate();
    for (int level : cfg.levels) traj::level_from_int(level);
    for (double a : cfg.alphas)
      if (!(a >= 0.0)) throw DomainError("alphas must be >= 0");
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  if (cfg.episodes < 0 || cfg.eval_episodes < 1) throw ConfigError("invalid config: episodes must be >= 0, eval_episodes >= 1");
  if (cfg.views < 1 || cfg.views > 2) throw ConfigError("invalid config: views must be 1 or 2");
  if (cfg.width < 16 || cfg.height < 16) throw ConfigError("invalid config: width and height must be >= 16");
  if (cfg.mask_stride < 1) throw ConfigError("invalid config: mask_stride must be >= 1");
  if (cfg.replan_every < 1 || cfg.replan_every > cfg.chunk)
    throw ConfigError("invalid config: replan_every must lie in [1, chunk]");
}

}  // namespace dynabench::harness
