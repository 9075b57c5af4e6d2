#include "dynabench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace dynabench::metrics {

double route_completion(const Outcome& outcome) {
  if (outcome.success) return 100.0;
  if (outcome.p_ee_initial.size() != outcome.p_ee_final.size() || outcome.p_ee_final.empty())
    throw DomainError("route_completion: per-arm positions are inconsistent");
  double best = 0.0;
  for (std::size_t arm = 0; arm < outcome.p_ee_final.size(); ++arm) {
    const double initial = distance(outcome.p_ee_initial[arm], outcome.p_obj_final);
    double rho = 1.0;
    if (initial > 0.0) rho = 1.0 - distance(outcome.p_ee_final[arm], outcome.p_obj_final) / initial;
    best = std::max(best, std::clamp(rho, 0.0, 1.0));
  }
  return 100.0 * best;
}

double manipulation_score(double rc, const std::vector<Event>& events) {
  if (!(rc >= 0.0 && rc <= 100.0)) throw DomainError("manipulation_score: rc outside [0, 100]");
  double ms = rc;
  if (has_event(events, EventTag::OutOfView)) ms *= kOutOfViewPenalty;
  if (has_event(events, EventTag::ClutterCollision)) ms *= kCollisionPenalty;
  return ms;
}

double success_rate(std::span<const Outcome> outcomes) {
  if (outcomes.empty()) throw DomainError("success_rate: empty outcome list");
  const auto wins = std::count_if(outcomes.begin(), outcomes.end(), [](const Outcome& o) { return o.success; });
  return 100.0 * static_cast<double>(wins) / static_cast<double>(outcomes.size());
}

void CostConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("cost gamma must lie in [0, 1)");
  if (horizon < 1) throw DomainError("cost horizon must be >= 1");
  if (!(control_weight >= 0.0)) throw DomainError("cost control weight must be >= 0");
}

namespace {

double step_cost(const sim::WorldState& s, const sim::Action& a, double control_weight) {
  double nearest = std::numeric_limits<double>::infinity();
  for (const auto& ee : s.ee) nearest = std::min(nearest, distance(ee.position, s.object.pose));
  double effort = 0.0;
  for (const auto& arm : a.arms) effort += arm.velocity.squared_norm();
  return nearest + control_weight * effort;
}

}  // namespace

double evaluate_cost(std::span<const std::pair<sim::WorldState, sim::Action>> trace, const CostConfig& cfg) {
  cfg.validate();
  if (trace.empty()) throw DomainError("evaluate_cost: empty trace");
  const std::size_t n = std::min<std::size_t>(cfg.horizon, trace.size());
  double j = 0.0;
  double discount = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    j += discount * step_cost(trace[k].first, trace[k].second, cfg.control_weight);
    discount *= cfg.gamma;
  }
  return j;
}

double evaluate_cost(const sim::Trace& trace, const CostConfig& cfg) {
  std::vector<std::pair<sim::WorldState, sim::Action>> pairs;
  for (std::size_t k = 0; k < trace.actions.size(); ++k) pairs.emplace_back(trace.states[k], trace.actions[k]);
  return evaluate_cost(pairs, cfg);
}

ReportRow summarize(const std::string& task, int level, double alpha, std::span<const Outcome> outcomes) {
  ReportRow row;
  row.task = task;
  row.level = level;
  row.alpha = alpha;
  row.episodes = static_cast<int>(outcomes.size());
  row.sr = success_rate(outcomes);
  double ms = 0.0;
  double rc = 0.0;
  for (const auto& o : outcomes) {
    const double r = route_completion(o);
    rc += r;
    ms += manipulation_score(r, o.events);
    row.penalty_oov += has_event(o.events, EventTag::OutOfView) ? 1 : 0;
    row.penalty_collision += has_event(o.events, EventTag::ClutterCollision) ? 1 : 0;
  }
  row.ms = ms / outcomes.size();
  row.rc = rc / outcomes.size();
  return row;
}

std::string format_row(const ReportRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%d,%g,%d,%.2f,%.2f,%.2f,%d,%d", r.task.c_str(), r.level, r.alpha, r.episodes, r.sr,
                r.ms, r.rc, r.penalty_oov, r.penalty_collision);
  return buf;
}

void write_report_csv(std::ostream& os, std::span<const ReportRow> rows) {
  os << kReportHeader << '\n';
  for (const auto& r : rows) os << format_row(r) << '\n';
}

}  // namespace dynabench::metrics
