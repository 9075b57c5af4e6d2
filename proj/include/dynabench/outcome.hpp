#pragma once

#include <string_view>
#include <vector>

#include "dynabench/core.hpp"

namespace dynabench {

enum class EventTag { Contact, OutOfView, ClutterCollision, Success, Timeout };

std::string_view to_string(EventTag tag);
EventTag event_tag_from_string(std::string_view name);

struct Event {
  EventTag tag = EventTag::Contact;
  double at = 0.0;
  bool operator==(const Event&) const = default;
};

bool has_event(const std::vector<Event>& events, EventTag tag);

/// Terminal summary of one episode; positions are taken at termination time.
struct Outcome {
  bool success = false;
  double t_end = 0.0;
  std::vector<Event> events;
  std::vector<Vec2> p_ee_initial;
  std::vector<Vec2> p_ee_final;
  Vec2 p_obj_final;
  bool operator==(const Outcome&) const = default;
};

}  // namespace dynabench
