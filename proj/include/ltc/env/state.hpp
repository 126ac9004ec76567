#pragma once

#include <array>
#include <string>

#include "ltc/shape/features.hpp"

namespace ltc::env {

using shape::ShapeCategory;
using Vec2 = std::array<double, 2>;

enum class Attachment { kNone, kThrower, kCatcher };

enum class DoneReason { kNone, kFell, kOutOfBounds, kTimeout, kSuccessHold };

inline const char* done_reason_name(DoneReason r) {
  switch (r) {
    case DoneReason::kNone: return "none";
    case DoneReason::kFell: return "fell";
    case DoneReason::kOutOfBounds: return "out_of_bounds";
    case DoneReason::kTimeout: return "timeout";
    case DoneReason::kSuccessHold: return "success_hold";
  }
  return "?";
}

struct HandState {
  Vec2 pos{0.0, 0.0};
  Vec2 vel{0.0, 0.0};
  double palm_angle = 0.0;          // palm normal direction, world frame
  double palm_angular_velocity = 0.0;
  double aperture = 0.0;            // 0 = closed grip, 1 = fully open
};

struct ObjectState {
  Vec2 pos{0.0, 0.0};
  Vec2 vel{0.0, 0.0};
  double angle = 0.0;
  double angular_velocity = 0.0;
  double mass = 0.1;
  double friction = 0.75;
  ShapeCategory shape_category = ShapeCategory::kRegular;
  double characteristic_length = 0.1;
};

struct EnvState {
  HandState thrower;
  HandState catcher;
  ObjectState object;
  Vec2 target_pos{0.0, 0.0};
  double target_angle = 0.0;
  Attachment attachment = Attachment::kNone;
  int step_index = 0;

  // Internal bookkeeping, serialized with the rest.
  Vec2 grip_offset{0.0, 0.0};   // object pose in the holding hand's palm frame
  double grip_angle = 0.0;
  int hold_count = 0;           // consecutive steps satisfying the success pose
  double contact_force = 0.0;   // magnitude applied to the object last step
};

}  // namespace ltc::env
