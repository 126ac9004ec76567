#pragma once

#include <iosfwd>
#include <optional>

#include "ltc/env/state.hpp"
#include "ltc/reward/reward.hpp"

namespace ltc::env {

// Physics and interaction constants for the 2D toss-catch world.
struct WorldParams {
  double dt = 1.0 / 60.0;
  double gravity = 9.81;

  double hand_mass = 0.4;             // kg; holding a heavy object slows the hand
  double hand_lin_damping = 2.0;      // N s/m
  double palm_inertia = 0.02;         // kg m^2
  double palm_ang_damping = 0.05;
  double force_scale = 12.0;          // N at |action| = 1
  double torque_scale = 0.6;          // N m at |action| = 1
  double aperture_rate = 8.0;         // full open/close in ~1/8 s
  double aperture_rest = 0.55;        // relaxed hands drift slightly open,
  double aperture_relax = 2.0;        // so a grip needs active closure (1/s)

  double capture_radius = 0.08;       // m around the palm center
  double capture_max_speed = 2.5;     // m/s relative speed limit
  double capture_cone_deg = 75.0;     // half-angle around the palm normal
  double capture_min_speed = 0.05;    // below this the approach cone is waived
  double capture_max_aperture = 0.5;  // hand must be closed enough to grip
  double release_aperture = 0.5;      // attached object lets go above this
  double grip_depth = 0.025;          // rest offset along the palm normal

  double success_pos_tol = 0.05;
  double success_ang_tol = 0.3;
  int success_hold_steps = 10;

  double floor_y = 0.05;
  double bounds_x = 1.0;
  double bounds_y_hi = 1.8;
  double workspace_half_x = 0.18;     // hand travel box around its base
  double workspace_half_y = 0.22;
  double palm_travel = 0.6;           // rad of deviation from the nominal angle

  double object_base_mass = 0.1;      // kg before randomization
};

struct TaskSpec {
  std::string name = "underarm";
  double thrower_palm_nominal = kPi / 2.0;
  double catcher_palm_nominal = kPi / 2.0;
  Vec2 thrower_base{-0.30, 0.5};
  Vec2 catcher_base{0.30, 0.5};
  double target_pos_jitter = 0.02;    // m, around the canonical catch pose
  double target_angle_jitter = 0.15;  // rad
  int episode_length = 100;
  double suggested_threshold = 15.0;  // eval success threshold default
  WorldParams world;
  reward::RewardConfig reward;

  void validate() const;
};

// Palm-angle analogs of the five tasks. Angles are palm-normal directions:
// pi/2 = palm up, 0 = palm facing +x, pi = palm facing -x.
TaskSpec make_task(const std::string& name);
std::vector<std::string> task_names();

struct RandomizationSpec {
  double mass_lo = 0.5, mass_hi = 2.0;          // multiplicative
  double friction_lo = 0.3, friction_hi = 1.2;  // absolute
  double length_jitter = 0.2;                   // +- fraction of category base
  double spawn_pos_jitter = 0.01;               // m, grip pose at spawn
  double spawn_angle_jitter = 0.2;              // rad
  double spawn_vel_jitter = 0.05;               // m/s, initial hand velocities

  void validate() const;
};

constexpr int kActionDim = 8;  // per hand: force x/y, palm torque, aperture rate

// Observation layout. Hand positions are relative to their base, object and
// target positions to the catcher base; the goal block is object-minus-target.
// The last two entries are the 2D shape feature.
namespace obs {
constexpr int kThrower = 0;        // dpos(2) vel(2) cos sin palm_avel aperture
constexpr int kCatcher = 8;
constexpr int kObjectPos = 16;
constexpr int kObjectVel = 18;
constexpr int kObjectAngle = 20;   // cos, sin
constexpr int kObjectAvel = 22;
constexpr int kMass = 23;
constexpr int kFriction = 24;
constexpr int kCharLength = 25;
constexpr int kTargetPos = 26;
constexpr int kTargetAngle = 28;   // cos, sin
constexpr int kGoalRelPos = 30;
constexpr int kGoalRelAngle = 32;  // wrapped difference
constexpr int kRelVel = 33;        // object velocity minus catcher hand velocity
constexpr int kAttachedThrower = 35;
constexpr int kAttachedCatcher = 36;
constexpr int kContactForce = 37;
constexpr int kShapeFeature = 38;
constexpr int kDim = 40;
}  // namespace obs

struct StepResult {
  EnvState next;
  reward::RewardTerms reward;
  bool done = false;
  DoneReason reason = DoneReason::kNone;
};

// Pure physics step: semi-implicit Euler at task.world.dt, gravity on the
// detached object, rigid attachment otherwise. Non-finite actions error;
// out-of-range components are clamped to [-1, 1].
StepResult step_state(const EnvState& state, const Vec& action, const TaskSpec& task);

// Pure observation builder.
Vec observe(const EnvState& state, const TaskSpec& task,
            const std::array<double, 2>& shape_feature);

// Rewrites the object pose blocks goal-relatively (object minus target) for
// the Lyapunov critic's input.
Vec to_goal_relative(const Vec& observation);

// Observation at the designated equilibrium: object at the canonical target,
// held by the catcher, everything at rest.
Vec equilibrium_observation(const TaskSpec& task);

// Randomized initial state; draws a fixed number of rng values.
EnvState make_reset_state(const TaskSpec& task, const RandomizationSpec& rand,
                          ShapeCategory category, Rng& rng);

struct DisturbanceSpec {
  double palm_angle = 5.0 * kPi / 180.0;   // rad
  double hand_distance = 0.05;             // m, total distance change bound
  double object_pos = 0.05;                // m per component
  double target_pos = 0.05;
  double object_angle = 20.0 * kPi / 180.0;
  double velocity_frac = 0.2;              // multiplicative on object velocity
};

// Sensor-noise model of Appendix-style disturbance evaluation: uniform noise
// per block, derived blocks recomputed for consistency, shape feature and
// everything else untouched.
Vec perturb_observation(const Vec& observation, const DisturbanceSpec& spec, Rng& rng);

// Fixed affine observation scaler (not learned): scaled = (x - offset) * gain.
struct ObsScaler {
  Vec offset;
  Vec gain;
  Vec apply(const Vec& observation) const;
};

ObsScaler make_scaler(const TaskSpec& task);

// Stateful convenience wrapper owning an rng stream and the current episode's
// shape feature. Does not auto-reset; the caller decides when.
class TossCatchEnv {
 public:
  TossCatchEnv(TaskSpec task, RandomizationSpec rand, ShapeCategory category,
               shape::PcaModel pca, bool use_shape_feature, Rng rng);

  Vec reset();
  struct StepOut {
    Vec obs;
    reward::RewardTerms reward;
    bool done = false;
    DoneReason reason = DoneReason::kNone;
  };
  StepOut step(const Vec& action);

  const EnvState& state() const { return state_; }
  const TaskSpec& task() const { return task_; }
  std::array<double, 2> shape_feature() const { return feature_; }
  Vec observation() const { return observe(state_, task_, feature_); }

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  TaskSpec task_;
  RandomizationSpec rand_;
  ShapeCategory category_;
  shape::PcaModel pca_;
  bool use_shape_feature_;
  Rng rng_;
  EnvState state_;
  std::array<double, 2> feature_{0.0, 0.0};
};

// Versioned trajectory dump: "# ltc-traj-v1" then a CSV header row, one row
// per step with every EnvState scalar and the reward breakdown.
void write_trajectory_header(std::ostream& os);
void write_trajectory_row(std::ostream& os, const EnvState& state,
                          const reward::RewardTerms& terms, DoneReason reason);

}  // namespace ltc::env
