#include "qdgrasp/grasp_env.hpp"
#include "qdgrasp/rng.hpp"
#include "qdgrasp/spline.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace qdgrasp;
using namespace qdgrasp::grasp;

namespace {

constexpr double pi = std::numbers::pi;

// Open gripper with approach angle phi, fingertips dy above disc-center height, swept along the
// table from x_from to x_to. The gripper never closes.
Genome sweep_genome(const EnvConfig& cfg, double x_from, double x_to, double phi, double dy, double elbow)
{
    const Vec2 approach{std::cos(phi), std::sin(phi)};
    DecodedPolicy policy;
    const double xs[3] = {x_from, 0.5 * (x_from + x_to), x_to};
    for (int w = 0; w < 3; ++w) {
        const Vec2 tip{xs[w], cfg.object.position.y + dy};
        auto q = oracle::planar_ik(cfg.link_lengths, tip - approach * cfg.gripper.finger_length, phi, elbow);
        REQUIRE(q.has_value());
        policy.waypoints[static_cast<std::size_t>(w)] = *q;
    }
    policy.t_grasp = cfg.T;
    return encode(policy, cfg);
}

Genome random_genome10(RngStream& rng)
{
    Genome g;
    for (int i = 0; i < 10; ++i)
        g.params.push_back(rng.uniform(-1.0, 1.0));
    return g;
}

} // namespace

TEST_CASE("genome decoding")
{
    const EnvConfig cfg;
    CHECK(genome_size(cfg) == 10);

    const Genome zero{std::vector<double>(10, 0.0)};
    const auto p = decode(zero, cfg);
    for (const auto& w : p.waypoints) {
        REQUIRE(w.size() == 3);
        for (double q : w)
            CHECK(std::abs(q) < 1e-12);
    }
    CHECK(p.t_grasp == cfg.T / 2);

    Genome end = zero;
    end[9] = 1.0;
    CHECK(decode(end, cfg).t_grasp == cfg.T);
    end[9] = -1.0;
    CHECK(decode(end, cfg).t_grasp == 0);

    RngStream rng(3, "decode");
    for (int i = 0; i < 100; ++i) {
        Genome g = random_genome10(rng);
        const auto back = encode(decode(g, cfg), cfg);
        for (std::size_t j = 0; j < 9; ++j)
            CHECK(back[j] == doctest::Approx(g[j]).epsilon(1e-12));
    }

    CHECK_THROWS_AS(decode(Genome{std::vector<double>(9, 0.0)}, cfg), ConfigError);
}

TEST_CASE("natural spline through unit-spaced knots")
{
    const std::vector<double> t{0, 1, 2, 3}, y{0, 1, 0, 1};
    const NaturalCubicSpline s(t, y);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(std::abs(s(t[i]) - y[i]) <= 1e-12);
    for (double x = 0.0; x <= 3.0; x += 0.05)
        CHECK(std::abs(s(x) - oracle::dense_natural_spline(t, y, x)) <= 1e-9);
    CHECK(std::abs(s.second_derivatives().front()) < 1e-15);
    CHECK(std::abs(s.second_derivatives().back()) < 1e-15);
}

TEST_CASE("joint interpolation")
{
    EnvConfig cfg;
    cfg.initial_joints = {0.3, -0.2, 0.1};
    DecodedPolicy still;
    still.waypoints = {cfg.initial_joints, cfg.initial_joints, cfg.initial_joints};
    const auto flat = interpolate(initial_pose(cfg), still, cfg);
    REQUIRE(flat.size() == static_cast<std::size_t>(cfg.T) + 1);
    for (const auto& q : flat)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(std::abs(q[j] - cfg.initial_joints[j]) < 1e-12);

    RngStream rng(6, "spline");
    for (int trial = 0; trial < 20; ++trial) {
        const Genome g = random_genome10(rng);
        const auto policy = decode(g, cfg);
        const auto traj = interpolate(initial_pose(cfg), policy, cfg);
        const int knots[4] = {0, cfg.T / 3, 2 * cfg.T / 3, cfg.T};
        for (std::size_t j = 0; j < 3; ++j) {
            const std::vector<double> kt{0.0, cfg.T / 3.0, 2.0 * cfg.T / 3.0, double(cfg.T)};
            const std::vector<double> ky{cfg.initial_joints[j], policy.waypoints[0][j], policy.waypoints[1][j],
                                         policy.waypoints[2][j]};
            for (int w = 0; w < 4; ++w)
                CHECK(std::abs(traj[static_cast<std::size_t>(knots[w])][j] - ky[static_cast<std::size_t>(w)]) <= 1e-12);
            for (int t = 0; t <= cfg.T; t += 7)
                CHECK(std::abs(traj[static_cast<std::size_t>(t)][j] - oracle::dense_natural_spline(kt, ky, t)) <= 1e-9);
        }
    }
}

TEST_CASE("a policy that stays away never touches the disc")
{
    const EnvConfig cfg;
    const Genome zero{std::vector<double>(10, 0.0)};
    const auto trace = rollout(zero, cfg);
    CHECK_FALSE(trace.t_touch.has_value());
    CHECK_FALSE(trace.grasped);
    CHECK(trace.steps.back().object == cfg.object.position);

    const auto ex = extract_behavior(trace, cfg);
    REQUIRE(ex.behavior.size() == 4);
    CHECK(ex.behavior.defined(0));
    CHECK_FALSE(ex.behavior.defined(1));
    CHECK_FALSE(ex.behavior.defined(2));
    CHECK_FALSE(ex.behavior.defined(3));
    CHECK_FALSE(ex.success);
    CHECK((*ex.behavior.components[0])[0] == doctest::Approx(cfg.object.position.x));
}

TEST_CASE("scripted grasp succeeds")
{
    const EnvConfig cfg;
    const auto g = oracle::scripted_grasp_genome(cfg);
    REQUIRE(g.has_value());
    const auto trace = rollout(*g, cfg);
    CHECK(trace.grasped);
    CHECK(trace.grasp_stable_at_end);
    REQUIRE(trace.t_touch.has_value());
    REQUIRE(trace.t_grasped.has_value());
    CHECK(*trace.t_touch <= *trace.t_grasped);

    const auto ex = extract_behavior(trace, cfg);
    CHECK(ex.success);
    for (std::size_t c = 0; c < 4; ++c)
        CHECK(ex.behavior.defined(c));
    const auto& b3 = *ex.behavior.components[2];
    const double d = std::hypot(b3[0] - cfg.object.position.x, b3[1] - cfg.object.position.y);
    CHECK(d <= cfg.tolerances.contact_eps + cfg.gripper.finger_length);

    // Orientation at touch is the straight-down approach.
    CHECK(std::abs(std::remainder((*ex.behavior.components[3])[0] + pi / 2.0, 2.0 * pi)) < 0.05);
}

TEST_CASE("the held disc moves rigidly with the gripper")
{
    const EnvConfig cfg;
    const auto g = oracle::scripted_grasp_genome(cfg);
    REQUIRE(g.has_value());
    const auto trace = rollout(*g, cfg);
    REQUIRE(trace.t_grasped.has_value());
    auto offset = [](const TraceStep& s) {
        const Vec2 a{std::cos(s.orientation), std::sin(s.orientation)};
        const Vec2 n{-a.y, a.x};
        const Vec2 rel = s.object - s.gripper;
        return Vec2{rel.dot(a), rel.dot(n)};
    };
    const Vec2 ref = offset(trace.steps[static_cast<std::size_t>(*trace.t_grasped)]);
    for (std::size_t t = static_cast<std::size_t>(*trace.t_grasped); t < trace.steps.size(); ++t) {
        const Vec2 o = offset(trace.steps[t]);
        CHECK(std::abs(o.x - ref.x) <= 1e-9);
        CHECK(std::abs(o.y - ref.y) <= 1e-9);
        CHECK(trace.steps[t].grasped);
    }
}

TEST_CASE("closing too late or too early does not grasp")
{
    const EnvConfig cfg;
    auto g = oracle::scripted_grasp_genome(cfg);
    REQUIRE(g.has_value());
    Genome never = *g;
    never[9] = 1.0;
    CHECK_FALSE(rollout(never, cfg).grasped);
    Genome early = *g;
    early[9] = -1.0;
    CHECK_FALSE(rollout(early, cfg).grasp_stable_at_end);
}

TEST_CASE("an open gripper sweeping through the disc pushes it")
{
    const EnvConfig cfg;
    const auto trace = rollout(sweep_genome(cfg, 0.45, 0.8, -1.2, 0.02, 1.0), cfg);
    CHECK(trace.t_touch.has_value());
    CHECK_FALSE(trace.grasped);
    const Vec2 end = trace.steps.back().object;
    CHECK(end.x != cfg.object.position.x);
    CHECK(end.y == cfg.object.position.y);

    const auto ex = extract_behavior(trace, cfg);
    CHECK(ex.behavior.defined(0));
    CHECK(ex.behavior.defined(1));
    CHECK_FALSE(ex.behavior.defined(2));
    CHECK_FALSE(ex.behavior.defined(3));
    CHECK_FALSE(ex.success);
}

TEST_CASE("a disc pushed past the table edge falls to the floor")
{
    const EnvConfig cfg;
    const auto trace = rollout(sweep_genome(cfg, 0.7, 0.2, -pi / 2.0, 0.0, -1.0), cfg);
    const Vec2 end = trace.steps.back().object;
    CHECK_FALSE(cfg.table_extent.contains(end.x));
    CHECK(end.y == doctest::Approx(cfg.floor_height + cfg.object.radius));
    CHECK_FALSE(trace.grasped);
}

TEST_CASE("eligibility cascade and kinematic bounds on random policies")
{
    const EnvConfig cfg;
    RngStream rng(12, "env-test");
    const double reach = arm_reach(cfg) + cfg.gripper.finger_length;
    int touched = 0;
    for (int i = 0; i < 2000; ++i) {
        const auto trace = rollout(random_genome10(rng), cfg);
        REQUIRE(trace.steps.size() == static_cast<std::size_t>(cfg.T) + 1);
        for (const auto& s : trace.steps)
            CHECK(s.gripper.norm() <= reach + 1e-12);
        if (trace.grasped)
            CHECK(trace.t_touch.has_value());
        if (trace.t_touch) {
            ++touched;
            CHECK(trace.steps[static_cast<std::size_t>(*trace.t_touch)].contact);
            for (int t = 0; t < *trace.t_touch; ++t)
                CHECK_FALSE(trace.steps[static_cast<std::size_t>(t)].contact);
        }
        const auto ex = extract_behavior(trace, cfg);
        CHECK(ex.behavior.defined(0));
        CHECK(ex.behavior.defined(1) == trace.t_touch.has_value());
        CHECK(ex.behavior.defined(2) == ex.success);
        CHECK(ex.behavior.defined(3) == ex.success);
        if (ex.success)
            CHECK(trace.grasped);
    }
    CHECK(touched > 0);
}

TEST_CASE("rollouts are deterministic")
{
    const EnvConfig cfg;
    RngStream rng(13, "env-test");
    for (int i = 0; i < 20; ++i) {
        const Genome g = random_genome10(rng);
        const auto a = rollout(g, cfg), b = rollout(g, cfg);
        REQUIRE(a.steps.size() == b.steps.size());
        for (std::size_t t = 0; t < a.steps.size(); ++t) {
            CHECK(a.steps[t].gripper == b.steps[t].gripper);
            CHECK(a.steps[t].object == b.steps[t].object);
            CHECK(a.steps[t].aperture == b.steps[t].aperture);
        }
        CHECK(a.t_touch == b.t_touch);
        CHECK(a.joint_energy == b.joint_energy);
    }
}

TEST_CASE("non-finite genomes fail evaluation")
{
    const EnvConfig cfg;
    Genome g{std::vector<double>(10, 0.0)};
    g[4] = std::nan("");
    CHECK_THROWS_AS(rollout(g, cfg), EvaluationError);
    g[4] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(GraspEnvironment(cfg).evaluate(g), EvaluationError);
}

TEST_CASE("environment interface")
{
    const GraspEnvironment env{EnvConfig{}};
    CHECK(env.genome_size() == 10);
    CHECK(env.genome_bounds().size() == 10);
    CHECK(env.behavior_specs().size() == 4);
    CHECK_NOTHROW(validate_specs(env.behavior_specs()));
    CHECK(env.behavior_specs()[1].metric == Metric::wrapped_angle);
    CHECK(env.behavior_specs()[3].metric == Metric::wrapped_angle);

    const auto g = oracle::scripted_grasp_genome(env.config());
    REQUIRE(g.has_value());
    const auto e = env.evaluate(*g);
    CHECK(e.success);
    CHECK(e.quality == doctest::Approx(-rollout(*g, env.config()).joint_energy));
    CHECK(e.quality < 0.0);

    std::ostringstream csv;
    write_trace_csv(rollout(*g, env.config()), csv);
    const std::string text = csv.str();
    CHECK(text.rfind("step,gripper_x", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == env.config().T + 2);
}

TEST_CASE("configuration validation")
{
    CHECK_NOTHROW(validate(EnvConfig{}));
    auto broken = [](auto mutate) {
        EnvConfig c;
        mutate(c);
        return c;
    };
    CHECK_THROWS_AS(validate(broken([](EnvConfig& c) { c.T = 2; })), ConfigError);
    CHECK_THROWS_AS(validate(broken([](EnvConfig& c) { c.link_lengths = {0.4, 0.35}; })), ConfigError);
    CHECK_THROWS_AS(validate(broken([](EnvConfig& c) { c.link_lengths[1] = 0.0; })), ConfigError);
    CHECK_THROWS_AS(validate(broken([](EnvConfig& c) { c.object.position = {2.0, -0.2}; })), ConfigError);
    CHECK_THROWS_AS(validate(broken([](EnvConfig& c) { c.object.position = {0.6, -0.1}; })), ConfigError);
    CHECK_THROWS_AS(validate(broken([](EnvConfig& c) { c.object.radius = -0.01; })), ConfigError);
    CHECK_THROWS_AS(validate(broken([](EnvConfig& c) { c.table_extent = {0.7, 0.9}; })), ConfigError);
    CHECK_THROWS_AS(validate(broken([](EnvConfig& c) { c.floor_height = -0.2; })), ConfigError);
    CHECK_THROWS_AS(validate(broken([](EnvConfig& c) { c.initial_joints = {0.0}; })), ConfigError);
    CHECK_THROWS_AS(GraspEnvironment(broken([](EnvConfig& c) { c.T = 1; })), ConfigError);
}
