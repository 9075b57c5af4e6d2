#include "dynabench/serialize.hpp"

#include <string>

namespace dynabench::harness {

json to_json(Vec2 v) { return json::array({v.x, v.y}); }

Vec2 vec2_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw DomainError("expected a 2-element array");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json to_json(const Rect& r) { return {{"min", to_json(r.min)}, {"max", to_json(r.max)}}; }

Rect rect_from_json(const json& j) { return {vec2_from_json(j.at("min")), vec2_from_json(j.at("max"))}; }

json to_json(const traj::TrajectorySpec& spec) {
  json segments = json::array();
  for (const auto& seg : spec.segments) {
    json s;
    s["duration"] = seg.duration;
    if (const auto* cv = std::get_if<traj::ConstantVelocity>(&seg.kind)) {
      s["kind"] = "constant_velocity";
      s["start"] = to_json(cv->start);
      s["velocity"] = to_json(cv->velocity);
    } else {
      const auto& poly = std::get<traj::Polynomial>(seg.kind);
      s["kind"] = "polynomial";
      json coeffs = json::array();
      for (Vec2 c : poly.coeffs) coeffs.push_back(to_json(c));
      s["coeffs"] = coeffs;
    }
    segments.push_back(s);
  }
  return {{"level", static_cast<int>(spec.level)},
          {"segments", segments},
          {"total_duration", spec.total_duration},
          {"origin_offset", to_json(spec.origin_offset)}};
}

traj::TrajectorySpec trajectory_from_json(const json& j) {
  traj::TrajectorySpec spec;
  spec.level = traj::level_from_int(j.at("level").get<int>());
  spec.total_duration = j.at("total_duration").get<double>();
  spec.origin_offset = vec2_from_json(j.at("origin_offset"));
  for (const auto& s : j.at("segments")) {
    traj::Segment seg;
    seg.duration = s.at("duration").get<double>();
    const auto kind = s.at("kind").get<std::string>();
    if (kind == "constant_velocity") {
      seg.kind = traj::ConstantVelocity{vec2_from_json(s.at("start")), vec2_from_json(s.at("velocity"))};
    } else if (kind == "polynomial") {
      traj::Polynomial poly;
      for (const auto& c : s.at("coeffs")) poly.coeffs.push_back(vec2_from_json(c));
      seg.kind = poly;
    } else {
      throw DomainError("unknown segment kind '" + kind + "'");
    }
    spec.segments.push_back(seg);
  }
  return spec;
}

json to_json(const sim::TaskSpec& t) {
  return {{"name", t.name},
          {"taxonomy", t.taxonomy == sim::Taxonomy::Interception ? "interception" : "tracking"},
          {"hold_window", t.hold_window},
          {"level", static_cast<int>(t.level)},
          {"alpha", t.alpha},
          {"dt", t.dt},
          {"t_max", t.t_max},
          {"workspace", to_json(t.workspace)},
          {"fov", to_json(t.fov)},
          {"contact_radius", t.contact_radius},
          {"lift_height_proxy", t.lift_height_proxy},
          {"clutter_count", t.clutter_count},
          {"dual_arm", t.dual_arm},
          {"a_max", t.a_max},
          {"object_radius", t.object_radius},
          {"ee_radius", t.ee_radius},
          {"clutter_radius", t.clutter_radius},
          {"lift_direction", to_json(t.lift_direction)},
          {"camera_latency", t.camera_latency},
          {"home", json::array({to_json(t.home[0]), to_json(t.home[1])})}};
}

sim::TaskSpec task_from_json(const json& j) {
  sim::TaskSpec t;
  t.name = j.at("name").get<std::string>();
  const auto taxonomy = j.at("taxonomy").get<std::string>();
  if (taxonomy == "interception") t.taxonomy = sim::Taxonomy::Interception;
  else if (taxonomy == "tracking") t.taxonomy = sim::Taxonomy::Tracking;
  else throw DomainError("unknown taxonomy '" + taxonomy + "'");
  t.hold_window = j.at("hold_window").get<double>();
  t.level = traj::level_from_int(j.at("level").get<int>());
  t.alpha = j.at("alpha").get<double>();
  t.dt = j.at("dt").get<double>();
  t.t_max = j.at("t_max").get<double>();
  t.workspace = rect_from_json(j.at("workspace"));
  t.fov = rect_from_json(j.at("fov"));
  t.contact_radius = j.at("contact_radius").get<double>();
  t.lift_height_proxy = j.at("lift_height_proxy").get<double>();
  t.clutter_count = j.at("clutter_count").get<int>();
  t.dual_arm = j.at("dual_arm").get<bool>();
  t.a_max = j.at("a_max").get<double>();
  t.object_radius = j.at("object_radius").get<double>();
  t.ee_radius = j.at("ee_radius").get<double>();
  t.clutter_radius = j.at("clutter_radius").get<double>();
  t.lift_direction = vec2_from_json(j.at("lift_direction"));
  t.camera_latency = j.at("camera_latency").get<int>();
  const auto& home = j.at("home");
  if (!home.is_array() || home.size() != 2) throw DomainError("task home must list two poses");
  t.home = {vec2_from_json(home.at(0)), vec2_from_json(home.at(1))};
  return t;
}

json to_json(const Outcome& o) {
  json events = json::array();
  for (const auto& e : o.events) events.push_back({{"tag", std::string(to_string(e.tag))}, {"at", e.at}});
  json ee_initial = json::array();
  for (Vec2 p : o.p_ee_initial) ee_initial.push_back(to_json(p));
  json ee_final = json::array();
  for (Vec2 p : o.p_ee_final) ee_final.push_back(to_json(p));
  return {{"success", o.success},
          {"t_end", o.t_end},
          {"events", events},
          {"p_ee_initial", ee_initial},
          {"p_ee_final", ee_final},
          {"p_obj_final", to_json(o.p_obj_final)}};
}

Outcome outcome_from_json(const json& j) {
  Outcome o;
  o.success = j.at("success").get<bool>();
  o.t_end = j.at("t_end").get<double>();
  for (const auto& e : j.at("events"))
    o.events.push_back({event_tag_from_string(e.at("tag").get<std::string>()), e.at("at").get<double>()});
  for (const auto& p : j.at("p_ee_initial")) o.p_ee_initial.push_back(vec2_from_json(p));
  for (const auto& p : j.at("p_ee_final")) o.p_ee_final.push_back(vec2_from_json(p));
  o.p_obj_final = vec2_from_json(j.at("p_obj_final"));
  return o;
}

json to_json(const expert::DatasetManifest& m) {
  json episodes = json::array();
  for (const auto& e : m.episodes) episodes.push_back({{"path", e.path}, {"task", e.task}, {"draw_seed", e.draw_seed}});
  json stats = json::array();
  for (const auto& s : m.stats)
    stats.push_back({{"task", s.task},
                     {"draws", s.draws},
                     {"accepted", s.accepted},
                     {"rollouts", s.rollouts},
                     {"acceptance_rate", s.acceptance_rate()},
                     {"failed_seeds", s.failed_seeds}});
  return {{"seed", m.seed}, {"episode_count", m.episodes.size()}, {"episodes", episodes}, {"stats", stats}};
}

expert::DatasetManifest manifest_from_json(const json& j) {
  expert::DatasetManifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& e : j.at("episodes"))
    m.episodes.push_back({e.at("path").get<std::string>(), e.at("task").get<std::string>(),
                          e.at("draw_seed").get<std::uint64_t>()});
  for (const auto& s : j.at("stats")) {
    expert::TaskStats st;
    st.task = s.at("task").get<std::string>();
    st.draws = s.at("draws").get<int>();
    st.accepted = s.at("accepted").get<int>();
    st.rollouts = s.at("rollouts").get<int>();
    st.failed_seeds = s.at("failed_seeds").get<std::vector<std::uint64_t>>();
    m.stats.push_back(st);
  }
  return m;
}

}  // namespace dynabench::harness
