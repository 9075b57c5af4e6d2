#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dynabench/outcome.hpp"
#include "dynabench/rollout.hpp"

/// Success rate, route completion, manipulation score and the discounted
/// tracking cost used as a diagnostic.
namespace dynabench::metrics {

inline constexpr double kOutOfViewPenalty = 0.5;
inline constexpr double kCollisionPenalty = 0.8;

/// 100 on success, otherwise 100 * max over arms of the clamped progress ratio.
double route_completion(const Outcome& outcome);

/// RC scaled by the out-of-view and clutter penalties, each applied at most once.
double manipulation_score(double rc, const std::vector<Event>& events);

/// Percentage of successful outcomes. Throws DomainError on an empty list.
double success_rate(std::span<const Outcome> outcomes);

struct CostConfig {
  double gamma = 0.99;
  int horizon = 100;
  double control_weight = 0.0;
  void validate() const;
};

/// Discounted sum of (nearest-arm distance + control_weight * |a|^2).
double evaluate_cost(std::span<const std::pair<sim::WorldState, sim::Action>> trace, const CostConfig& cfg);
double evaluate_cost(const sim::Trace& trace, const CostConfig& cfg);

struct ReportRow {
  std::string task;
  int level = 1;
  double alpha = 0.0;
  int episodes = 0;
  double sr = 0.0;
  double ms = 0.0;
  double rc = 0.0;
  int penalty_oov = 0;
  int penalty_collision = 0;
};

ReportRow summarize(const std::string& task, int level, double alpha, std::span<const Outcome> outcomes);

inline constexpr const char* kReportHeader = "task,level,alpha,episodes,sr,ms,rc,penalty_oov,penalty_collision";

void write_report_csv(std::ostream& os, std::span<const ReportRow> rows);
std::string format_row(const ReportRow& row);

}  // namespace dynabench::metrics
