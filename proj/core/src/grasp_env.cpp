#include "qdgrasp/grasp_env.hpp"

#include "qdgrasp/spline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace qdgrasp::grasp {

namespace {

constexpr double pi = std::numbers::pi;

double wrap_angle(double a)
{
    a = std::remainder(a, 2.0 * pi);
    return a <= -pi ? a + 2.0 * pi : a;
}

double aperture_at(int t, int t_grasp, const GripperConfig& g)
{
    if (t < t_grasp)
        return g.max_aperture;
    return std::max(0.0, g.max_aperture - static_cast<double>(t - t_grasp) * g.close_speed);
}

// First step at which the closing aperture is no wider than the disc.
int diameter_reached_step(int t_grasp, const EnvConfig& cfg)
{
    const double diameter = 2.0 * cfg.object.radius;
    const double excess = cfg.gripper.max_aperture - diameter;
    if (excess <= 0.0)
        return t_grasp;
    return t_grasp + static_cast<int>(std::ceil(excess / cfg.gripper.close_speed - 1e-9));
}

// Flat [step][joint] trajectory, the allocation-light twin of interpolate().
std::vector<double> joint_trajectory(const JointVector& q0, const DecodedPolicy& policy, const EnvConfig& cfg)
{
    const std::size_t n = static_cast<std::size_t>(cfg.n_dof);
    const double T = cfg.T;
    const double times[4] = {0.0, T / 3.0, 2.0 * T / 3.0, T};
    std::vector<double> out((static_cast<std::size_t>(cfg.T) + 1) * n);
    for (std::size_t j = 0; j < n; ++j) {
        const double values[4] = {q0[j], policy.waypoints[0][j], policy.waypoints[1][j], policy.waypoints[2][j]};
        const NaturalCubicSpline spline(times, values);
        for (int t = 0; t <= cfg.T; ++t)
            out[static_cast<std::size_t>(t) * n + j] = spline(static_cast<double>(t));
    }
    return out;
}

GripperPose fk(const double* q, const EnvConfig& cfg)
{
    GripperPose pose;
    double angle = 0.0;
    for (int i = 0; i < cfg.n_dof; ++i) {
        angle += q[i];
        pose.wrist.x += cfg.link_lengths[static_cast<std::size_t>(i)] * std::cos(angle);
        pose.wrist.y += cfg.link_lengths[static_cast<std::size_t>(i)] * std::sin(angle);
    }
    pose.orientation = wrap_angle(angle);
    const Vec2 approach{std::cos(angle), std::sin(angle)};
    pose.position = pose.wrist + approach * (0.5 * cfg.gripper.finger_length);
    return pose;
}

// Shift along +x (sign > 0) or -x that brings the disc center out of the segment's overlap.
double push_distance(const Segment& seg, Vec2 center, double radius, double sign)
{
    auto dist_at = [&](double s) { return distance_to_segment({center.x + sign * s, center.y}, seg); };
    double hi = radius + (seg.b - seg.a).norm() + 1e-3;
    for (int i = 0; i < 8 && dist_at(hi) < radius; ++i)
        hi *= 2.0;
    double lo = 0.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (dist_at(mid) < radius)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

// Height of the solid surface under x: the tabletop over the table, the floor elsewhere.
double surface_height(double x, const EnvConfig& cfg)
{
    return cfg.table_extent.contains(x) ? cfg.table_height - cfg.object.radius : cfg.floor_height;
}

bool below_surface(Vec2 p, const EnvConfig& cfg)
{
    return p.y < surface_height(p.x, cfg) - cfg.tolerances.penetration_max;
}

// True when an arm joint (base excluded) is inside the table or the floor.
bool arm_collides(const double* q, const EnvConfig& cfg)
{
    double angle = 0.0;
    Vec2 p;
    for (int i = 0; i < cfg.n_dof; ++i) {
        angle += q[i];
        p.x += cfg.link_lengths[static_cast<std::size_t>(i)] * std::cos(angle);
        p.y += cfg.link_lengths[static_cast<std::size_t>(i)] * std::sin(angle);
        if (below_surface(p, cfg))
            return true;
    }
    return false;
}

// Slides a resting disc along the table line until no gripper segment overlaps it.
// A disc pinched from both sides stays in place.
Vec2 resolve_pushing(const std::array<Segment, 3>& segments, Vec2 center, double radius)
{
    for (int iter = 0; iter < 3; ++iter) {
        double shift = 0.0;
        int sign_seen = 0;
        bool pinched = false;
        for (const auto& seg : segments) {
            Vec2 closest;
            const double d = distance_to_segment(center, seg, &closest);
            if (d >= radius)
                continue;
            const int sign = center.x - closest.x >= 0.0 ? 1 : -1;
            if (sign_seen != 0 && sign != sign_seen) {
                pinched = true;
                break;
            }
            sign_seen = sign;
            shift = std::max(shift, push_distance(seg, center, radius, sign));
        }
        if (pinched || sign_seen == 0)
            break;
        center.x += sign_seen * shift;
    }
    return center;
}

} // namespace

double Vec2::norm() const { return std::hypot(x, y); }

double arm_reach(const EnvConfig& cfg) { return std::accumulate(cfg.link_lengths.begin(), cfg.link_lengths.end(), 0.0); }

std::size_t genome_size(const EnvConfig& cfg) { return 3 * static_cast<std::size_t>(cfg.n_dof) + 1; }

std::vector<double> initial_pose(const EnvConfig& cfg)
{
    if (cfg.initial_joints.empty())
        return std::vector<double>(static_cast<std::size_t>(cfg.n_dof), 0.0);
    return cfg.initial_joints;
}

void validate(const EnvConfig& cfg)
{
    if (cfg.n_dof < 1)
        throw ConfigError("environment.n_dof must be >= 1");
    if (cfg.link_lengths.size() != static_cast<std::size_t>(cfg.n_dof))
        throw ConfigError("environment.link_lengths must have n_dof entries");
    if (std::any_of(cfg.link_lengths.begin(), cfg.link_lengths.end(), [](double l) { return !(l > 0.0); }))
        throw ConfigError("environment.link_lengths must be positive");
    if (cfg.T < 3)
        throw ConfigError("environment.T must be >= 3");
    if (!cfg.initial_joints.empty() && cfg.initial_joints.size() != cfg.link_lengths.size())
        throw ConfigError("environment.initial_joints must have n_dof entries");
    if (!(cfg.object.radius > 0.0))
        throw ConfigError("environment.object.radius must be positive");
    if (!(cfg.gripper.finger_length > 0.0) || !(cfg.gripper.max_aperture > 0.0) || !(cfg.gripper.close_speed > 0.0))
        throw ConfigError("environment.gripper values must be positive");
    if (cfg.tolerances.touch_window_steps < 0 || cfg.tolerances.contact_eps < 0.0 || cfg.tolerances.penetration_max < 0.0)
        throw ConfigError("environment.tolerances must be non-negative");
    if (!(cfg.joint_limit.lo < cfg.joint_limit.hi))
        throw ConfigError("environment.joint_limit must satisfy lo < hi");

    double inner = cfg.link_lengths[0];
    for (std::size_t i = 1; i < cfg.link_lengths.size(); ++i)
        inner -= cfg.link_lengths[i];
    const double d = cfg.object.position.norm();
    const double outer = arm_reach(cfg) + cfg.gripper.finger_length;
    if (d > outer || d < std::max(0.0, inner))
        throw ConfigError("environment.object.position is outside the arm's reachable annulus");
    if (std::abs(cfg.object.position.y - cfg.table_height) > 1e-12)
        throw ConfigError("environment.object.position must rest on the table line");
    if (!(cfg.table_extent.lo < cfg.table_extent.hi) || !cfg.table_extent.contains(cfg.object.position.x))
        throw ConfigError("environment.table_extent must be a non-empty span containing the object");
    if (!(cfg.floor_height < cfg.table_height - cfg.object.radius))
        throw ConfigError("environment.floor_height must lie below the tabletop");
}

DecodedPolicy decode(const Genome& genome, const EnvConfig& cfg)
{
    const std::size_t n = static_cast<std::size_t>(cfg.n_dof);
    if (genome.size() != genome_size(cfg))
        throw ConfigError("genome length " + std::to_string(genome.size()) + " does not match 3*n_dof+1 = " +
                          std::to_string(genome_size(cfg)));
    const Interval& lim = cfg.joint_limit;
    DecodedPolicy policy;
    for (std::size_t w = 0; w < 3; ++w) {
        policy.waypoints[w].resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double g = genome[w * n + j];
            policy.waypoints[w][j] = lim.lo + (g + 1.0) * 0.5 * lim.width();
        }
    }
    const double g = genome[3 * n];
    policy.t_grasp = std::clamp(static_cast<int>(std::lround((g + 1.0) * 0.5 * cfg.T)), 0, cfg.T);
    return policy;
}

Genome encode(const DecodedPolicy& policy, const EnvConfig& cfg)
{
    const std::size_t n = static_cast<std::size_t>(cfg.n_dof);
    const Interval& lim = cfg.joint_limit;
    Genome g;
    g.params.reserve(genome_size(cfg));
    for (std::size_t w = 0; w < 3; ++w) {
        for (std::size_t j = 0; j < n; ++j)
            g.params.push_back(2.0 * (policy.waypoints[w][j] - lim.lo) / lim.width() - 1.0);
    }
    g.params.push_back(2.0 * policy.t_grasp / static_cast<double>(cfg.T) - 1.0);
    return g;
}

std::vector<JointVector> interpolate(const JointVector& q0, const DecodedPolicy& policy, const EnvConfig& cfg)
{
    const std::size_t n = static_cast<std::size_t>(cfg.n_dof);
    const auto flat = joint_trajectory(q0, policy, cfg);
    std::vector<JointVector> out(static_cast<std::size_t>(cfg.T) + 1);
    for (std::size_t t = 0; t < out.size(); ++t)
        out[t].assign(flat.begin() + static_cast<std::ptrdiff_t>(t * n), flat.begin() + static_cast<std::ptrdiff_t>((t + 1) * n));
    return out;
}

GripperPose forward_kinematics(const JointVector& q, const EnvConfig& cfg) { return fk(q.data(), cfg); }

std::array<Segment, 2> finger_segments(const GripperPose& pose, double aperture, const EnvConfig& cfg)
{
    const Vec2 approach{std::cos(pose.orientation), std::sin(pose.orientation)};
    const Vec2 normal{-approach.y, approach.x};
    const Vec2 tip = approach * cfg.gripper.finger_length;
    const Vec2 left = pose.wrist + normal * (0.5 * aperture);
    const Vec2 right = pose.wrist - normal * (0.5 * aperture);
    return {Segment{left, left + tip}, Segment{right, right + tip}};
}

double distance_to_segment(Vec2 p, const Segment& s, Vec2* closest)
{
    const Vec2 ab = s.b - s.a;
    const double len2 = ab.dot(ab);
    double u = len2 > 0.0 ? (p - s.a).dot(ab) / len2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    const Vec2 c = s.a + ab * u;
    if (closest)
        *closest = c;
    return (p - c).norm();
}

RolloutTrace rollout(const Genome& genome, const EnvConfig& cfg)
{
    for (double g : genome.params) {
        if (!std::isfinite(g))
            throw EvaluationError("non-finite genome coordinate");
    }
    const DecodedPolicy policy = decode(genome, cfg);
    const std::size_t n = static_cast<std::size_t>(cfg.n_dof);
    const auto q = joint_trajectory(initial_pose(cfg), policy, cfg);

    const double r = cfg.object.radius;
    const double contact_range = r + cfg.tolerances.contact_eps;
    const double min_bearing = cfg.tolerances.min_bearing_difference_deg * pi / 180.0;
    const int t_diameter = diameter_reached_step(policy.t_grasp, cfg);

    RolloutTrace trace;
    trace.steps.reserve(static_cast<std::size_t>(cfg.T) + 1);
    Vec2 object = cfg.object.position;
    bool collided = false;
    bool fallen = false;
    Vec2 held_offset;
    double held_aperture = 0.0;

    for (int t = 0; t <= cfg.T; ++t) {
        const double* qt = &q[static_cast<std::size_t>(t) * n];
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(qt[j]))
                throw EvaluationError("non-finite joint value at step " + std::to_string(t));
        }
        if (t > 0) {
            const double* qp = qt - n;
            for (std::size_t j = 0; j < n; ++j)
                trace.joint_energy += (qt[j] - qp[j]) * (qt[j] - qp[j]);
        }
        const GripperPose pose = fk(qt, cfg);
        const Vec2 approach{std::cos(pose.orientation), std::sin(pose.orientation)};
        const Vec2 normal{-approach.y, approach.x};

        TraceStep step;
        step.step = t;
        step.gripper = pose.position;
        step.orientation = pose.orientation;

        if (trace.grasped) {
            object = pose.wrist + approach * held_offset.x + normal * held_offset.y;
            step.aperture = held_aperture;
            step.contact = true;
            step.grasped = true;
        }
        else {
            const double aperture = aperture_at(t, policy.t_grasp, cfg.gripper);
            step.aperture = aperture;
            const auto fingers = finger_segments(pose, aperture, cfg);
            const Segment palm{fingers[0].a, fingers[1].a};
            collided = collided || arm_collides(qt, cfg) || below_surface(fingers[0].a, cfg) ||
                       below_surface(fingers[1].a, cfg) || below_surface(fingers[0].b, cfg) ||
                       below_surface(fingers[1].b, cfg);
            if (collided || fallen) {
                // After hitting the table or the floor the arm no longer interacts with the object,
                // and a disc on the floor is out of play.
                step.object = object;
                trace.steps.push_back(step);
                continue;
            }
            object = resolve_pushing({fingers[0], fingers[1], palm}, object, r);
            if (!cfg.table_extent.contains(object.x)) {
                fallen = true;
                object.y = cfg.floor_height + r;
                step.object = object;
                trace.steps.push_back(step);
                continue;
            }

            Vec2 contact_point[2];
            double d[2];
            for (int k = 0; k < 2; ++k)
                d[k] = distance_to_segment(object, fingers[static_cast<std::size_t>(k)], &contact_point[k]);
            step.contact = std::min(d[0], d[1]) <= contact_range;
            if (step.contact && !trace.t_touch)
                trace.t_touch = t;

            const bool in_window = t >= t_diameter && t <= t_diameter + cfg.tolerances.touch_window_steps;
            if (in_window && d[0] <= contact_range && d[1] <= contact_range && r - d[0] <= cfg.tolerances.penetration_max &&
                r - d[1] <= cfg.tolerances.penetration_max &&
                r - distance_to_segment(object, palm) <= cfg.tolerances.penetration_max) {
                const Vec2 u0 = contact_point[0] - object;
                const Vec2 u1 = contact_point[1] - object;
                const double bearing = std::abs(wrap_angle(std::atan2(u0.y, u0.x) - std::atan2(u1.y, u1.x)));
                if (bearing >= min_bearing) {
                    trace.grasped = true;
                    trace.t_grasped = t;
                    held_aperture = aperture;
                    const Vec2 rel = object - pose.wrist;
                    held_offset = {rel.dot(approach), rel.dot(normal)};
                    step.grasped = true;
                }
            }
        }
        step.object = object;
        trace.steps.push_back(step);
    }

    const TraceStep& last = trace.steps.back();
    trace.grasp_stable_at_end = trace.grasped && last.object.y >= cfg.table_height + cfg.tolerances.lift_height_min &&
                                last.aperture < cfg.gripper.max_aperture;
    return trace;
}

std::vector<BehaviorComponentSpec> behavior_specs(const EnvConfig& cfg)
{
    const double extent = arm_reach(cfg) + cfg.gripper.finger_length + cfg.object.radius;
    const Interval span{-extent, extent};
    const Interval angle{-pi, pi};
    return {
        {0, 2, Metric::euclidean, {span, span}, "object_position_final"},
        {1, 1, Metric::wrapped_angle, {angle}, "gripper_orientation_mid"},
        {2, 2, Metric::euclidean, {span, span}, "gripper_position_touch"},
        {3, 1, Metric::wrapped_angle, {angle}, "gripper_orientation_touch"},
    };
}

BehaviorExtraction extract_behavior(const RolloutTrace& trace, const EnvConfig& cfg)
{
    const auto specs = behavior_specs(cfg);
    auto clamp_point = [&](std::size_t comp, BehaviorPoint p) {
        for (std::size_t j = 0; j < p.size(); ++j)
            p[j] = std::clamp(p[j], specs[comp].bounds[j].lo, specs[comp].bounds[j].hi);
        return p;
    };

    BehaviorExtraction out;
    out.behavior.components.resize(4);
    const TraceStep& final_step = trace.steps.back();
    out.behavior.components[0] = clamp_point(0, {final_step.object.x, final_step.object.y});
    if (trace.t_touch) {
        const TraceStep& mid = trace.steps[static_cast<std::size_t>(cfg.T / 2)];
        out.behavior.components[1] = BehaviorPoint{mid.orientation};
    }
    out.success = trace.grasp_stable_at_end;
    if (out.success) {
        const TraceStep& touch = trace.steps[static_cast<std::size_t>(*trace.t_touch)];
        out.behavior.components[2] = clamp_point(2, {touch.gripper.x, touch.gripper.y});
        out.behavior.components[3] = BehaviorPoint{touch.orientation};
    }
    return out;
}

void write_trace_csv(const RolloutTrace& trace, std::ostream& out)
{
    const auto old_precision = out.precision(17);
    out << "step,gripper_x,gripper_y,gripper_theta,aperture,object_x,object_y,contact,grasped\n";
    for (const auto& s : trace.steps) {
        out << s.step << ',' << s.gripper.x << ',' << s.gripper.y << ',' << s.orientation << ',' << s.aperture << ','
            << s.object.x << ',' << s.object.y << ',' << (s.contact ? 1 : 0) << ',' << (s.grasped ? 1 : 0) << '\n';
    }
    out.precision(old_precision);
}

GraspEnvironment::GraspEnvironment(EnvConfig cfg) : cfg_(std::move(cfg))
{
    validate(cfg_);
    bounds_.assign(grasp::genome_size(cfg_), Interval{-1.0, 1.0});
    specs_ = grasp::behavior_specs(cfg_);
}

Evaluation GraspEnvironment::evaluate(const Genome& genome) const
{
    const RolloutTrace trace = rollout(genome, cfg_);
    auto [behavior, success] = extract_behavior(trace, cfg_);
    return {std::move(behavior), success, -trace.joint_energy};
}

} // namespace qdgrasp::grasp
