#pragma once

#include "qdgrasp/environment.hpp"
#include "qdgrasp/types.hpp"

#include <array>
#include <optional>
#include <ostream>
#include <vector>

namespace qdgrasp::grasp {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const;
    bool operator==(const Vec2&) const = default;
};

struct GripperConfig {
    double finger_length = 0.08;
    double max_aperture = 0.12;
    // Aperture reduction per timestep once closing starts.
    double close_speed = 0.004;
};

struct ObjectConfig {
    double radius = 0.03;
    // Carried for config compatibility; kinematic model ignores mass.
    double mass = 0.1;
    Vec2 position{0.6, -0.2};
};

struct Tolerances {
    double contact_eps = 0.005;
    double penetration_max = 0.005;
    double lift_height_min = 0.05;
    int touch_window_steps = 10;
    double min_bearing_difference_deg = 120.0;
};

/// Planar arm in the vertical plane, base at the origin, next to a table whose resting
/// disc centers sit at `table_height`. Outside the table the work surface is the floor.
struct EnvConfig {
    int n_dof = 3;
    std::vector<double> link_lengths{0.4, 0.35, 0.25};
    int T = 300;
    double table_height = -0.2;
    // Horizontal span of the tabletop; a disc pushed past either edge falls to the floor.
    Interval table_extent{0.3, 0.9};
    double floor_height = -0.6;
    ObjectConfig object;
    GripperConfig gripper;
    Tolerances tolerances;
    // Fixed initial joint pose; empty means all zeros.
    std::vector<double> initial_joints;
    Interval joint_limit{-3.14159265358979323846, 3.14159265358979323846};
};

/// Throws ConfigError on inconsistent or unreachable settings.
void validate(const EnvConfig& cfg);
double arm_reach(const EnvConfig& cfg);
std::size_t genome_size(const EnvConfig& cfg);
std::vector<double> initial_pose(const EnvConfig& cfg);

using JointVector = std::vector<double>;

struct DecodedPolicy {
    // Joint targets at T/3, 2T/3 and T.
    std::array<JointVector, 3> waypoints;
    int t_grasp = 0;
};

DecodedPolicy decode(const Genome& genome, const EnvConfig& cfg);
/// Inverse of decode for policies inside the joint limits.
Genome encode(const DecodedPolicy& policy, const EnvConfig& cfg);

/// Per-joint natural cubic spline through (0, q0), (T/3, w1), (2T/3, w2), (T, w3),
/// sampled at every integer step 0..T.
std::vector<JointVector> interpolate(const JointVector& q0, const DecodedPolicy& policy, const EnvConfig& cfg);

struct GripperPose {
    Vec2 wrist;
    // Point between the finger midpoints; what behavior descriptors report as gripper position.
    Vec2 position;
    double orientation = 0.0;
};

GripperPose forward_kinematics(const JointVector& q, const EnvConfig& cfg);

struct Segment {
    Vec2 a, b;
};

/// The two finger segments (left then right of the approach axis) at the given aperture.
std::array<Segment, 2> finger_segments(const GripperPose& pose, double aperture, const EnvConfig& cfg);

double distance_to_segment(Vec2 p, const Segment& s, Vec2* closest = nullptr);

struct TraceStep {
    int step = 0;
    Vec2 gripper;
    double orientation = 0.0;
    double aperture = 0.0;
    Vec2 object;
    bool contact = false;
    bool grasped = false;
};

struct RolloutTrace {
    std::vector<TraceStep> steps;
    std::optional<int> t_touch;
    std::optional<int> t_grasped;
    bool grasped = false;
    bool grasp_stable_at_end = false;
    // Sum over steps of the squared joint displacement.
    double joint_energy = 0.0;
};

/// Kinematic rollout of one policy. Deterministic; throws EvaluationError on non-finite joints.
RolloutTrace rollout(const Genome& genome, const EnvConfig& cfg);

struct BehaviorExtraction {
    BehaviorVector behavior;
    bool success = false;
};

/// Components: object position at T (always), gripper orientation at T/2 (if touched),
/// gripper position and orientation at first touch (if the grasp succeeded).
BehaviorExtraction extract_behavior(const RolloutTrace& trace, const EnvConfig& cfg);

std::vector<BehaviorComponentSpec> behavior_specs(const EnvConfig& cfg);

/// Per-step CSV for plotting and debugging.
void write_trace_csv(const RolloutTrace& trace, std::ostream& out);

class GraspEnvironment final : public Environment {
public:
    explicit GraspEnvironment(EnvConfig cfg);

    std::size_t genome_size() const override { return bounds_.size(); }
    const Bounds& genome_bounds() const override { return bounds_; }
    const std::vector<BehaviorComponentSpec>& behavior_specs() const override { return specs_; }
    Evaluation evaluate(const Genome& genome) const override;

    const EnvConfig& config() const { return cfg_; }

private:
    EnvConfig cfg_;
    Bounds bounds_;
    std::vector<BehaviorComponentSpec> specs_;
};

} // namespace qdgrasp::grasp
