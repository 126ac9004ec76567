#include "ltc/env/toss_catch.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "ltc/nn/serialize.hpp"

namespace ltc::env {

void TaskSpec::validate() const {
  if (episode_length <= 0) throw ConfigError("TaskSpec: episode_length must be positive");
  if (!(world.dt > 0.0)) throw ConfigError("TaskSpec: dt must be positive");
  if (!(world.capture_radius > 0.0 && world.capture_max_speed > 0.0))
    throw ConfigError("TaskSpec: capture constants must be positive");
  if (!(world.capture_cone_deg > 0.0 && world.capture_cone_deg <= 180.0))
    throw ConfigError("TaskSpec: capture cone must lie in (0, 180] degrees");
  if (!(target_pos_jitter >= 0.0 && target_angle_jitter >= 0.0))
    throw ConfigError("TaskSpec: jitters must be non-negative");
  reward.validate();
}

void RandomizationSpec::validate() const {
  if (!(mass_lo > 0.0 && mass_lo <= mass_hi))
    throw ConfigError("RandomizationSpec: mass range must be positive and ordered");
  if (!(friction_lo >= 0.0 && friction_lo <= friction_hi))
    throw ConfigError("RandomizationSpec: friction range must be non-negative and ordered");
  if (!(length_jitter >= 0.0 && length_jitter < 1.0))
    throw ConfigError("RandomizationSpec: length_jitter must lie in [0, 1)");
  if (!(spawn_pos_jitter >= 0.0 && spawn_angle_jitter >= 0.0 && spawn_vel_jitter >= 0.0))
    throw ConfigError("RandomizationSpec: spawn jitters must be non-negative");
}

TaskSpec make_task(const std::string& name) {
  TaskSpec t;
  t.name = name;
  if (name == "underarm") {
    t.thrower_palm_nominal = kPi / 2.0;
    t.catcher_palm_nominal = kPi / 2.0;
    t.thrower_base = {-0.19, 0.5};
    t.catcher_base = {0.19, 0.5};
  } else if (name == "abreast") {
    t.thrower_palm_nominal = kPi / 4.0;
    t.catcher_palm_nominal = 3.0 * kPi / 4.0;
    t.thrower_base = {-0.19, 0.5};
    t.catcher_base = {0.19, 0.5};
  } else if (name == "under2overarm") {
    t.thrower_palm_nominal = kPi / 2.0;
    t.catcher_palm_nominal = kPi;
    t.thrower_base = {-0.21, 0.5};
    t.catcher_base = {0.21, 0.5};
    t.suggested_threshold = 20.0;
  } else if (name == "overarm2abreast") {
    t.thrower_palm_nominal = 0.0;
    t.catcher_palm_nominal = 3.0 * kPi / 4.0;
    t.thrower_base = {-0.22, 0.5};
    t.catcher_base = {0.22, 0.5};
  } else if (name == "overarm") {
    t.thrower_palm_nominal = 0.0;
    t.catcher_palm_nominal = kPi;
    t.thrower_base = {-0.24, 0.5};
    t.catcher_base = {0.24, 0.5};
  } else {
    throw ConfigError("make_task: unknown task '" + name + "'");
  }
  return t;
}

std::vector<std::string> task_names() {
  return {"underarm", "abreast", "under2overarm", "overarm2abreast", "overarm"};
}

namespace {

double category_base_length(ShapeCategory c) {
  switch (c) {
    case ShapeCategory::kElongated: return 0.16;
    case ShapeCategory::kFlat: return 0.12;
    case ShapeCategory::kRegular: return 0.09;
  }
  return 0.1;
}

Vec2 rotate(double angle, const Vec2& v) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v[0] - s * v[1], s * v[0] + c * v[1]};
}

void integrate_hand(HandState& h, const double* a, bool holds_object, double object_mass,
                    double nominal_palm, const Vec2& base, const WorldParams& w) {
  const double m_eff = w.hand_mass + (holds_object ? object_mass : 0.0);
  for (int d = 0; d < 2; ++d) {
    const double force = w.force_scale * a[d] - w.hand_lin_damping * h.vel[d];
    h.vel[d] += w.dt * force / m_eff;
    h.pos[d] += w.dt * h.vel[d];
    const double half = d == 0 ? w.workspace_half_x : w.workspace_half_y;
    if (h.pos[d] < base[d] - half) {
      h.pos[d] = base[d] - half;
      h.vel[d] = 0.0;
    } else if (h.pos[d] > base[d] + half) {
      h.pos[d] = base[d] + half;
      h.vel[d] = 0.0;
    }
  }
  const double torque = w.torque_scale * a[2] - w.palm_ang_damping * h.palm_angular_velocity;
  h.palm_angular_velocity += w.dt * torque / w.palm_inertia;
  h.palm_angle += w.dt * h.palm_angular_velocity;
  if (h.palm_angle < nominal_palm - w.palm_travel) {
    h.palm_angle = nominal_palm - w.palm_travel;
    h.palm_angular_velocity = 0.0;
  } else if (h.palm_angle > nominal_palm + w.palm_travel) {
    h.palm_angle = nominal_palm + w.palm_travel;
    h.palm_angular_velocity = 0.0;
  }
  h.aperture = clamp(h.aperture + w.dt * (w.aperture_rate * a[3] +
                                          w.aperture_relax * (w.aperture_rest - h.aperture)),
                     0.0, 1.0);
}

bool capture_possible(const HandState& h, const ObjectState& o, const WorldParams& w) {
  if (h.aperture >= w.capture_max_aperture) return false;
  const double dx = o.pos[0] - h.pos[0];
  const double dy = o.pos[1] - h.pos[1];
  if (std::sqrt(dx * dx + dy * dy) >= w.capture_radius) return false;
  const double rvx = o.vel[0] - h.vel[0];
  const double rvy = o.vel[1] - h.vel[1];
  const double rspeed = std::sqrt(rvx * rvx + rvy * rvy);
  if (rspeed >= w.capture_max_speed) return false;
  if (rspeed < w.capture_min_speed) return true;  // hovering counts as in-cone
  // Approach must point into the palm: along -normal within the cone.
  const double nx = std::cos(h.palm_angle), ny = std::sin(h.palm_angle);
  const double into = -(rvx * nx + rvy * ny);
  return into >= rspeed * std::cos(w.capture_cone_deg * kPi / 180.0);
}

void attach_object(EnvState& s, Attachment who) {
  const HandState& h = who == Attachment::kThrower ? s.thrower : s.catcher;
  s.attachment = who;
  const Vec2 rel{s.object.pos[0] - h.pos[0], s.object.pos[1] - h.pos[1]};
  s.grip_offset = rotate(-h.palm_angle, rel);
  s.grip_angle = s.object.angle - h.palm_angle;
}

}  // namespace

StepResult step_state(const EnvState& state, const Vec& action, const TaskSpec& task) {
  check(action.size() == kActionDim, "step: action must have 8 components");
  for (double a : action) check(std::isfinite(a), "step: non-finite action");
  double a[kActionDim];
  for (int i = 0; i < kActionDim; ++i) a[i] = clamp(action[static_cast<std::size_t>(i)], -1.0, 1.0);

  const WorldParams& w = task.world;
  StepResult out;
  EnvState& s = out.next;
  s = state;

  integrate_hand(s.thrower, a + 0, s.attachment == Attachment::kThrower, s.object.mass,
                 task.thrower_palm_nominal, task.thrower_base, w);
  integrate_hand(s.catcher, a + 4, s.attachment == Attachment::kCatcher, s.object.mass,
                 task.catcher_palm_nominal, task.catcher_base, w);

  if (s.attachment != Attachment::kNone) {
    const HandState& h = s.attachment == Attachment::kThrower ? s.thrower : s.catcher;
    const Vec2 r = rotate(h.palm_angle, s.grip_offset);
    const Vec2 old_vel = s.object.vel;
    s.object.pos = {h.pos[0] + r[0], h.pos[1] + r[1]};
    s.object.angle = h.palm_angle + s.grip_angle;
    // Rigid-body velocity: hand translation plus rotation about the palm.
    s.object.vel = {h.vel[0] - h.palm_angular_velocity * r[1],
                    h.vel[1] + h.palm_angular_velocity * r[0]};
    s.object.angular_velocity = h.palm_angular_velocity;
    const double fx = s.object.mass * ((s.object.vel[0] - old_vel[0]) / w.dt);
    const double fy = s.object.mass * ((s.object.vel[1] - old_vel[1]) / w.dt + w.gravity);
    s.contact_force = std::sqrt(fx * fx + fy * fy);
    if (h.aperture > w.release_aperture) s.attachment = Attachment::kNone;
  } else {
    s.object.vel[1] -= w.gravity * w.dt;
    s.object.pos[0] += w.dt * s.object.vel[0];
    s.object.pos[1] += w.dt * s.object.vel[1];
    s.object.angle += w.dt * s.object.angular_velocity;
    s.contact_force = 0.0;

    // Catcher gets first claim when both hands could grab.
    if (capture_possible(s.catcher, s.object, w))
      attach_object(s, Attachment::kCatcher);
    else if (capture_possible(s.thrower, s.object, w))
      attach_object(s, Attachment::kThrower);
  }

  s.step_index = state.step_index + 1;

  const bool at_target =
      s.attachment == Attachment::kCatcher &&
      std::hypot(s.object.pos[0] - s.target_pos[0], s.object.pos[1] - s.target_pos[1]) <
          w.success_pos_tol &&
      std::fabs(wrap_angle(s.object.angle - s.target_angle)) < w.success_ang_tol;
  s.hold_count = at_target ? s.hold_count + 1 : 0;

  if (s.hold_count >= w.success_hold_steps)
    out.reason = DoneReason::kSuccessHold;
  else if (s.object.pos[1] < w.floor_y)
    out.reason = DoneReason::kFell;
  else if (std::fabs(s.object.pos[0]) > w.bounds_x || s.object.pos[1] > w.bounds_y_hi)
    out.reason = DoneReason::kOutOfBounds;
  else if (s.step_index >= task.episode_length)
    out.reason = DoneReason::kTimeout;
  out.done = out.reason != DoneReason::kNone;

  Vec clamped(action.size());
  for (std::size_t i = 0; i < action.size(); ++i) clamped[i] = a[i];
  out.reward = reward::total_reward(s, clamped, out.reason, task.reward);
  return out;
}

Vec observe(const EnvState& state, const TaskSpec& task,
            const std::array<double, 2>& shape_feature) {
  Vec o(obs::kDim, 0.0);
  auto put_hand = [&](int base, const HandState& h, const Vec2& hand_base) {
    o[static_cast<std::size_t>(base + 0)] = h.pos[0] - hand_base[0];
    o[static_cast<std::size_t>(base + 1)] = h.pos[1] - hand_base[1];
    o[static_cast<std::size_t>(base + 2)] = h.vel[0];
    o[static_cast<std::size_t>(base + 3)] = h.vel[1];
    o[static_cast<std::size_t>(base + 4)] = std::cos(h.palm_angle);
    o[static_cast<std::size_t>(base + 5)] = std::sin(h.palm_angle);
    o[static_cast<std::size_t>(base + 6)] = h.palm_angular_velocity;
    o[static_cast<std::size_t>(base + 7)] = h.aperture;
  };
  put_hand(obs::kThrower, state.thrower, task.thrower_base);
  put_hand(obs::kCatcher, state.catcher, task.catcher_base);

  o[obs::kObjectPos + 0] = state.object.pos[0] - task.catcher_base[0];
  o[obs::kObjectPos + 1] = state.object.pos[1] - task.catcher_base[1];
  o[obs::kObjectVel + 0] = state.object.vel[0];
  o[obs::kObjectVel + 1] = state.object.vel[1];
  o[obs::kObjectAngle + 0] = std::cos(state.object.angle);
  o[obs::kObjectAngle + 1] = std::sin(state.object.angle);
  o[obs::kObjectAvel] = state.object.angular_velocity;
  o[obs::kMass] = state.object.mass;
  o[obs::kFriction] = state.object.friction;
  o[obs::kCharLength] = state.object.characteristic_length;
  o[obs::kTargetPos + 0] = state.target_pos[0] - task.catcher_base[0];
  o[obs::kTargetPos + 1] = state.target_pos[1] - task.catcher_base[1];
  o[obs::kTargetAngle + 0] = std::cos(state.target_angle);
  o[obs::kTargetAngle + 1] = std::sin(state.target_angle);
  o[obs::kGoalRelPos + 0] = state.object.pos[0] - state.target_pos[0];
  o[obs::kGoalRelPos + 1] = state.object.pos[1] - state.target_pos[1];
  o[obs::kGoalRelAngle] = wrap_angle(state.object.angle - state.target_angle);
  o[obs::kRelVel + 0] = state.object.vel[0] - state.catcher.vel[0];
  o[obs::kRelVel + 1] = state.object.vel[1] - state.catcher.vel[1];
  o[obs::kAttachedThrower] = state.attachment == Attachment::kThrower ? 1.0 : 0.0;
  o[obs::kAttachedCatcher] = state.attachment == Attachment::kCatcher ? 1.0 : 0.0;
  o[obs::kContactForce] = state.contact_force;
  o[obs::kShapeFeature + 0] = shape_feature[0];
  o[obs::kShapeFeature + 1] = shape_feature[1];
  return o;
}

Vec to_goal_relative(const Vec& observation) {
  check(observation.size() == obs::kDim, "to_goal_relative: bad observation size");
  Vec o = observation;
  o[obs::kObjectPos + 0] = observation[obs::kGoalRelPos + 0];
  o[obs::kObjectPos + 1] = observation[obs::kGoalRelPos + 1];
  o[obs::kObjectAngle + 0] = std::cos(observation[obs::kGoalRelAngle]);
  o[obs::kObjectAngle + 1] = std::sin(observation[obs::kGoalRelAngle]);
  return o;
}

Vec equilibrium_observation(const TaskSpec& task) {
  EnvState s;
  const WorldParams& w = task.world;
  const double palm = task.catcher_palm_nominal;
  s.catcher.pos = task.catcher_base;
  s.catcher.palm_angle = palm;
  s.catcher.aperture = 0.2;
  s.thrower.pos = task.thrower_base;
  s.thrower.palm_angle = task.thrower_palm_nominal;
  s.thrower.aperture = 0.2;
  const Vec2 grip = rotate(palm, {w.grip_depth, 0.0});
  s.target_pos = {task.catcher_base[0] + grip[0], task.catcher_base[1] + grip[1]};
  s.target_angle = palm;
  s.object.pos = s.target_pos;
  s.object.angle = s.target_angle;
  s.object.mass = w.object_base_mass;
  s.object.friction = 0.75;
  s.object.characteristic_length = category_base_length(ShapeCategory::kRegular);
  s.attachment = Attachment::kCatcher;
  s.grip_offset = {w.grip_depth, 0.0};
  s.grip_angle = 0.0;
  s.contact_force = s.object.mass * w.gravity;  // holding still against gravity
  return to_goal_relative(observe(s, task, {0.0, 0.0}));
}

EnvState make_reset_state(const TaskSpec& task, const RandomizationSpec& rand,
                          ShapeCategory category, Rng& rng) {
  const WorldParams& w = task.world;
  EnvState s;

  s.object.shape_category = category;
  s.object.mass = w.object_base_mass * rng.uniform(rand.mass_lo, rand.mass_hi);
  s.object.friction = rng.uniform(rand.friction_lo, rand.friction_hi);
  s.object.characteristic_length =
      category_base_length(category) * (1.0 + rand.length_jitter * rng.uniform(-1.0, 1.0));

  // Hands spawn near their bases; pose jitter scatters them inside the
  // workspace box so early training sees varied interception geometry.
  auto spawn_hand = [&](HandState& h, const Vec2& base, double nominal) {
    h.pos = base;
    for (int d = 0; d < 2; ++d) {
      const double half = d == 0 ? w.workspace_half_x : w.workspace_half_y;
      h.pos[d] += rng.uniform(-rand.spawn_pos_jitter, rand.spawn_pos_jitter);
      h.pos[d] = clamp(h.pos[d], base[d] - half, base[d] + half);
    }
    h.palm_angle = nominal;
    h.aperture = 0.2;
  };
  spawn_hand(s.thrower, task.thrower_base, task.thrower_palm_nominal);
  spawn_hand(s.catcher, task.catcher_base, task.catcher_palm_nominal);

  // Object in the thrower's grip, slightly jittered around the palm rest pose.
  // The grip jitter is capped at the palm scale regardless of how widely the
  // hands themselves are scattered.
  const double grip_jitter = std::min(rand.spawn_pos_jitter, 0.02);
  const double jx = rng.uniform(-grip_jitter, grip_jitter);
  const double jy = rng.uniform(-grip_jitter, grip_jitter);
  const double ja = rng.uniform(-rand.spawn_angle_jitter, rand.spawn_angle_jitter);
  s.attachment = Attachment::kThrower;
  s.grip_offset = {w.grip_depth + jx, jy};
  s.grip_angle = ja;
  const Vec2 r = rotate(s.thrower.palm_angle, s.grip_offset);
  s.object.pos = {s.thrower.pos[0] + r[0], s.thrower.pos[1] + r[1]};
  s.object.angle = s.thrower.palm_angle + s.grip_angle;

  s.thrower.vel = {rng.uniform(-rand.spawn_vel_jitter, rand.spawn_vel_jitter),
                   rng.uniform(-rand.spawn_vel_jitter, rand.spawn_vel_jitter)};
  s.catcher.vel = {rng.uniform(-rand.spawn_vel_jitter, rand.spawn_vel_jitter),
                   rng.uniform(-rand.spawn_vel_jitter, rand.spawn_vel_jitter)};
  s.object.vel = s.thrower.vel;

  const Vec2 cgrip = rotate(task.catcher_palm_nominal, {w.grip_depth, 0.0});
  s.target_pos = {task.catcher_base[0] + cgrip[0] +
                      rng.uniform(-task.target_pos_jitter, task.target_pos_jitter),
                  task.catcher_base[1] + cgrip[1] +
                      rng.uniform(-task.target_pos_jitter, task.target_pos_jitter)};
  // The placement angle tracks the thrower's palm: the object keeps its
  // orientation in flight, and the catcher palm's limited travel cannot
  // un-rotate a mismatched grip after the catch.
  s.target_angle = task.thrower_palm_nominal +
                   rng.uniform(-task.target_angle_jitter, task.target_angle_jitter);

  s.contact_force = s.object.mass * w.gravity;
  return s;
}

Vec perturb_observation(const Vec& observation, const DisturbanceSpec& spec, Rng& rng) {
  check(observation.size() == obs::kDim, "perturb_observation: bad observation size");
  Vec o = observation;

  auto jitter_angle = [&](int cos_slot, double range) {
    const double angle = std::atan2(o[static_cast<std::size_t>(cos_slot + 1)],
                                    o[static_cast<std::size_t>(cos_slot)]) +
                         rng.uniform(-range, range);
    o[static_cast<std::size_t>(cos_slot)] = std::cos(angle);
    o[static_cast<std::size_t>(cos_slot + 1)] = std::sin(angle);
  };

  jitter_angle(obs::kThrower + 4, spec.palm_angle);
  jitter_angle(obs::kCatcher + 4, spec.palm_angle);

  // Hand distance: opposite shifts along the base axis (x).
  const double u = rng.uniform(-spec.hand_distance / 2.0, spec.hand_distance / 2.0);
  o[obs::kThrower + 0] -= u;
  o[obs::kCatcher + 0] += u;

  o[obs::kObjectPos + 0] += rng.uniform(-spec.object_pos, spec.object_pos);
  o[obs::kObjectPos + 1] += rng.uniform(-spec.object_pos, spec.object_pos);
  o[obs::kTargetPos + 0] += rng.uniform(-spec.target_pos, spec.target_pos);
  o[obs::kTargetPos + 1] += rng.uniform(-spec.target_pos, spec.target_pos);

  const double obj_angle = std::atan2(o[obs::kObjectAngle + 1], o[obs::kObjectAngle + 0]) +
                           rng.uniform(-spec.object_angle, spec.object_angle);
  o[obs::kObjectAngle + 0] = std::cos(obj_angle);
  o[obs::kObjectAngle + 1] = std::sin(obj_angle);

  const double f = 1.0 + rng.uniform(-spec.velocity_frac, spec.velocity_frac);
  o[obs::kObjectVel + 0] *= f;
  o[obs::kObjectVel + 1] *= f;

  // Recompute the derived blocks from the perturbed primitives.
  o[obs::kGoalRelPos + 0] = o[obs::kObjectPos + 0] - o[obs::kTargetPos + 0];
  o[obs::kGoalRelPos + 1] = o[obs::kObjectPos + 1] - o[obs::kTargetPos + 1];
  const double target_angle = std::atan2(o[obs::kTargetAngle + 1], o[obs::kTargetAngle + 0]);
  o[obs::kGoalRelAngle] = wrap_angle(obj_angle - target_angle);
  o[obs::kRelVel + 0] = o[obs::kObjectVel + 0] - o[obs::kCatcher + 2];
  o[obs::kRelVel + 1] = o[obs::kObjectVel + 1] - o[obs::kCatcher + 3];
  return o;
}

Vec ObsScaler::apply(const Vec& observation) const {
  check(observation.size() == offset.size(), "ObsScaler: size mismatch");
  Vec o(observation.size());
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = (observation[i] - offset[i]) * gain[i];
  return o;
}

ObsScaler make_scaler(const TaskSpec& task) {
  (void)task;  // all tasks share desk-scale magnitudes
  ObsScaler s;
  s.offset.assign(obs::kDim, 0.0);
  s.gain.assign(obs::kDim, 1.0);
  auto set = [&](int slot, double offset, double gain) {
    s.offset[static_cast<std::size_t>(slot)] = offset;
    s.gain[static_cast<std::size_t>(slot)] = gain;
  };
  for (int base : {obs::kThrower, obs::kCatcher}) {
    set(base + 0, 0.0, 5.0);
    set(base + 1, 0.0, 5.0);
    set(base + 2, 0.0, 0.4);
    set(base + 3, 0.0, 0.4);
    set(base + 6, 0.0, 0.125);
    set(base + 7, 0.5, 2.0);
  }
  set(obs::kObjectPos + 0, 0.0, 1.0 / 0.6);
  set(obs::kObjectPos + 1, 0.0, 1.0 / 0.6);
  set(obs::kObjectVel + 0, 0.0, 1.0 / 3.0);
  set(obs::kObjectVel + 1, 0.0, 1.0 / 3.0);
  set(obs::kObjectAvel, 0.0, 0.125);
  set(obs::kMass, 0.1, 10.0);
  set(obs::kFriction, 0.75, 1.0 / 0.45);
  set(obs::kCharLength, 0.12, 12.5);
  set(obs::kTargetPos + 0, 0.0, 1.0 / 0.6);
  set(obs::kTargetPos + 1, 0.0, 1.0 / 0.6);
  set(obs::kGoalRelPos + 0, 0.0, 1.0 / 0.3);
  set(obs::kGoalRelPos + 1, 0.0, 1.0 / 0.3);
  set(obs::kGoalRelAngle, 0.0, 0.5);
  set(obs::kRelVel + 0, 0.0, 1.0 / 3.0);
  set(obs::kRelVel + 1, 0.0, 1.0 / 3.0);
  set(obs::kAttachedThrower, 0.5, 2.0);
  set(obs::kAttachedCatcher, 0.5, 2.0);
  set(obs::kContactForce, 0.0, 1.0 / 3.0);
  set(obs::kShapeFeature + 0, 0.0, 2.0);
  set(obs::kShapeFeature + 1, 0.0, 2.0);
  return s;
}

TossCatchEnv::TossCatchEnv(TaskSpec task, RandomizationSpec rand, ShapeCategory category,
                           shape::PcaModel pca, bool use_shape_feature, Rng rng)
    : task_(std::move(task)),
      rand_(rand),
      category_(category),
      pca_(std::move(pca)),
      use_shape_feature_(use_shape_feature),
      rng_(rng) {
  task_.validate();
  rand_.validate();
  reset();
}

Vec TossCatchEnv::reset() {
  if (use_shape_feature_) {
    const auto cloud = shape::generate_cloud(category_, 256, rng_);
    const auto f = shape::pca_project(pca_, shape::descriptor(cloud));
    feature_ = {f.x, f.y};
  } else {
    feature_ = {0.0, 0.0};
  }
  state_ = make_reset_state(task_, rand_, category_, rng_);
  return observe(state_, task_, feature_);
}

TossCatchEnv::StepOut TossCatchEnv::step(const Vec& action) {
  StepResult r = step_state(state_, action, task_);
  state_ = r.next;
  StepOut out;
  out.obs = observe(state_, task_, feature_);
  out.reward = r.reward;
  out.done = r.done;
  out.reason = r.reason;
  return out;
}

namespace {

void write_hand(std::ostream& os, const HandState& h) {
  using nn::io::write_f64;
  write_f64(os, h.pos[0]);
  write_f64(os, h.pos[1]);
  write_f64(os, h.vel[0]);
  write_f64(os, h.vel[1]);
  write_f64(os, h.palm_angle);
  write_f64(os, h.palm_angular_velocity);
  write_f64(os, h.aperture);
}

void read_hand(std::istream& is, HandState& h) {
  using nn::io::read_f64;
  h.pos[0] = read_f64(is);
  h.pos[1] = read_f64(is);
  h.vel[0] = read_f64(is);
  h.vel[1] = read_f64(is);
  h.palm_angle = read_f64(is);
  h.palm_angular_velocity = read_f64(is);
  h.aperture = read_f64(is);
}

}  // namespace

void TossCatchEnv::save(std::ostream& os) const {
  using namespace nn::io;
  write_hand(os, state_.thrower);
  write_hand(os, state_.catcher);
  write_f64(os, state_.object.pos[0]);
  write_f64(os, state_.object.pos[1]);
  write_f64(os, state_.object.vel[0]);
  write_f64(os, state_.object.vel[1]);
  write_f64(os, state_.object.angle);
  write_f64(os, state_.object.angular_velocity);
  write_f64(os, state_.object.mass);
  write_f64(os, state_.object.friction);
  write_u8(os, static_cast<std::uint8_t>(state_.object.shape_category));
  write_f64(os, state_.object.characteristic_length);
  write_f64(os, state_.target_pos[0]);
  write_f64(os, state_.target_pos[1]);
  write_f64(os, state_.target_angle);
  write_u8(os, static_cast<std::uint8_t>(state_.attachment));
  write_u64(os, static_cast<std::uint64_t>(state_.step_index));
  write_f64(os, state_.grip_offset[0]);
  write_f64(os, state_.grip_offset[1]);
  write_f64(os, state_.grip_angle);
  write_u64(os, static_cast<std::uint64_t>(state_.hold_count));
  write_f64(os, state_.contact_force);
  write_f64(os, feature_[0]);
  write_f64(os, feature_[1]);
  write_string(os, rng_.serialize());
}

void TossCatchEnv::load(std::istream& is) {
  using namespace nn::io;
  read_hand(is, state_.thrower);
  read_hand(is, state_.catcher);
  state_.object.pos[0] = read_f64(is);
  state_.object.pos[1] = read_f64(is);
  state_.object.vel[0] = read_f64(is);
  state_.object.vel[1] = read_f64(is);
  state_.object.angle = read_f64(is);
  state_.object.angular_velocity = read_f64(is);
  state_.object.mass = read_f64(is);
  state_.object.friction = read_f64(is);
  state_.object.shape_category = static_cast<ShapeCategory>(read_u8(is));
  state_.object.characteristic_length = read_f64(is);
  state_.target_pos[0] = read_f64(is);
  state_.target_pos[1] = read_f64(is);
  state_.target_angle = read_f64(is);
  state_.attachment = static_cast<Attachment>(read_u8(is));
  state_.step_index = static_cast<int>(read_u64(is));
  state_.grip_offset[0] = read_f64(is);
  state_.grip_offset[1] = read_f64(is);
  state_.grip_angle = read_f64(is);
  state_.hold_count = static_cast<int>(read_u64(is));
  state_.contact_force = read_f64(is);
  feature_[0] = read_f64(is);
  feature_[1] = read_f64(is);
  rng_.deserialize(read_string(is));
}

void write_trajectory_header(std::ostream& os) {
  os << "# ltc-traj-v1\n";
  os << "step,thrower_px,thrower_py,thrower_vx,thrower_vy,thrower_palm,thrower_palm_vel,"
        "thrower_aperture,catcher_px,catcher_py,catcher_vx,catcher_vy,catcher_palm,"
        "catcher_palm_vel,catcher_aperture,object_px,object_py,object_vx,object_vy,"
        "object_angle,object_avel,object_mass,object_friction,object_category,"
        "object_char_length,target_x,target_y,target_angle,attachment,hold_count,"
        "contact_force,r_p,r_o,r_a,r_succ,r_fall,r_total,done_reason\n";
}

void write_trajectory_row(std::ostream& os, const EnvState& s,
                          const reward::RewardTerms& t, DoneReason reason) {
  char buf[64];
  auto put = [&](double v, bool last = false) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf << (last ? "\n" : ",");
  };
  os << s.step_index << ',';
  const HandState* hands[2] = {&s.thrower, &s.catcher};
  for (const HandState* h : hands) {
    put(h->pos[0]);
    put(h->pos[1]);
    put(h->vel[0]);
    put(h->vel[1]);
    put(h->palm_angle);
    put(h->palm_angular_velocity);
    put(h->aperture);
  }
  put(s.object.pos[0]);
  put(s.object.pos[1]);
  put(s.object.vel[0]);
  put(s.object.vel[1]);
  put(s.object.angle);
  put(s.object.angular_velocity);
  put(s.object.mass);
  put(s.object.friction);
  os << shape::category_name(s.object.shape_category) << ',';
  put(s.object.characteristic_length);
  put(s.target_pos[0]);
  put(s.target_pos[1]);
  put(s.target_angle);
  os << (s.attachment == Attachment::kNone
             ? "none"
             : (s.attachment == Attachment::kThrower ? "thrower" : "catcher"))
     << ',' << s.hold_count << ',';
  put(s.contact_force);
  put(t.r_p);
  put(t.r_o);
  put(t.r_a);
  put(t.r_succ);
  put(t.r_fall);
  put(t.total);
  os << done_reason_name(reason) << "\n";
}

}  // namespace ltc::env
