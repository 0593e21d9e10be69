#include "neuroplan/cspace/ops.hpp"
#include "neuroplan/planner/mpnet.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace neuroplan;

namespace {

Box bounds2d()
{
    Box b;
    b.dim = 2;
    b.lo = {-20, -20, 0};
    b.hi = {20, 20, 0};
    return b;
}

Box rect(double x0, double y0, double x1, double y1)
{
    Box b;
    b.dim = 2;
    b.lo = {x0, y0, 0};
    b.hi = {x1, y1, 0};
    return b;
}

PlanningProblem problem2d(std::vector<Box> obs, Config s, Config g)
{
    PlanningProblem p;
    p.robot = RobotModel::point2d();
    p.ws = Workspace(bounds2d(), std::move(obs));
    p.c_init = s;
    p.c_goal = g;
    p.pc = make_point_cloud(p.ws, 50, 1);
    return p;
}

Config pt(double x, double y) { return RobotModel::point2d().make_config({x, y}); }

MPNetModel small_model(std::uint64_t seed)
{
    ModelOptions o;
    o.cloud_points = 50;
    o.latent_dim = 8;
    o.enet_hidden = {32};
    o.pnet_hidden = {64, 32};
    Rng rng(seed);
    return make_model(RobotModel::point2d(), bounds2d(), o, rng);
}

MPNetModel zero_model()
{
    MPNetModel m = small_model(1);
    m.pnet.mutable_flat().setZero();
    return m;
}

// Seven disjoint side-5 boxes.
std::vector<Box> clutter()
{
    return {rect(-15, -15, -10, -10), rect(-5, -12, 0, -7), rect(8, -16, 13, -11), rect(-14, 2, -9, 7),
            rect(-2, 3, 3, 8),        rect(10, 0, 15, 5),   rect(2, 12, 7, 17)};
}

PlanningProblem random_problem(std::vector<Box> obs, Rng& rng)
{
    PlanningProblem p = problem2d(std::move(obs), pt(0, 0), pt(0, 0));
    do
    {
        p.c_init = sample_free(p.robot, p.ws, rng);
        p.c_goal = sample_free(p.robot, p.ws, rng);
    } while (distance(p.c_init, p.c_goal) < 10.0);
    return p;
}

// Wall at x in [-2, 2] spanning y in [-20, 14]; the only gap is y in (14, 20].
std::vector<Box> gap_wall() { return {rect(-2, -20, 2, 14)}; }

bool is_subsequence(const Path& sub, const Path& full)
{
    std::size_t j = 0;
    for (const auto& s : full.states)
        if (j < sub.size() && s == sub.states[j])
            ++j;
    return j == sub.size();
}

} // namespace

TEST_CASE("bnp connects directly and fails on a blocked workspace")
{
    const MPNetModel model = small_model(3);
    PlanConfig cfg;
    Rng rng(1);
    {
        const auto p = problem2d(clutter(), pt(-18, 18), pt(-17, 10));
        PlanStats st;
        const auto path = bnp(model, p.c_init, p.c_goal, encode(model, p.pc), p, cfg, cfg.steps.coarse, rng, &st);
        REQUIRE(path);
        CHECK(path->states == std::vector<Config>{p.c_init, p.c_goal});
        CHECK(st.pnet_calls == 0);
    }
    {
        const MPNetModel zero = zero_model();
        const auto p = problem2d({rect(-2, -20, 2, 20)}, pt(-10, 0), pt(10, 0));
        PlanStats st;
        const auto path = bnp(zero, p.c_init, p.c_goal, encode(zero, p.pc), p, cfg, cfg.steps.coarse, rng, &st);
        CHECK_FALSE(path);
        CHECK(st.pnet_calls == cfg.N);
    }
}

TEST_CASE("bnp outputs run start to goal through free states")
{
    const MPNetModel model = small_model(5);
    PlanConfig cfg;
    Rng rng(11);
    int connected = 0;
    for (int k = 0; k < 60; ++k)
    {
        const auto p = random_problem(clutter(), rng);
        const auto path = bnp(model, p.c_init, p.c_goal, encode(model, p.pc), p, cfg, cfg.steps.coarse, rng);
        if (!path)
            continue;
        ++connected;
        CHECK(path->front() == p.c_init);
        CHECK(path->end_state() == p.c_goal);
        for (const auto& s : path->states)
            CHECK_FALSE(collides(p.robot, s, p.ws));
        for (std::size_t i = 0; i + 1 < path->size(); ++i)
            CHECK(std::isfinite(distance(path->states[i], path->states[i + 1])));
    }
    CHECK(connected > 0);
}

TEST_CASE("lsc contraction")
{
    const RobotModel robot = RobotModel::point2d();
    const Workspace empty(bounds2d(), {});
    const Path two{{pt(0, 0), pt(5, 5)}};
    CHECK(lsc(two, robot, empty, 0.05) == two);
    const Path line{{pt(0, 0), pt(1, 1), pt(2, 2), pt(3, 3), pt(4, 4)}};
    CHECK(lsc(line, robot, empty, 0.05).states == std::vector<Config>{pt(0, 0), pt(4, 4)});
    CHECK_THROWS_AS((void)lsc(Path{}, robot, empty, 0.05), std::invalid_argument);

    const Workspace ws(bounds2d(), clutter());
    Rng rng(2024);
    for (int k = 0; k < 100; ++k)
    {
        Path p{{sample_free(robot, ws, rng)}};
        const int len = 3 + static_cast<int>(rng() % 8);
        while (static_cast<int>(p.size()) < len)
        {
            const Config c = sample_free(robot, ws, rng);
            if (distance(c, p.end_state()) < 8.0 && steer_to(robot, p.end_state(), c, ws, 0.05))
                p.states.push_back(c);
        }
        REQUIRE(path_feasible(robot, p, ws, 0.05));
        const Path q = lsc(p, robot, ws, 0.05);
        CHECK(q.front() == p.front());
        CHECK(q.end_state() == p.end_state());
        CHECK(is_subsequence(q, p));
        CHECK(path_feasible(robot, q, ws, 0.05));
        CHECK(path_cost(q) <= path_cost(p) + 1e-12);
    }
}

TEST_CASE("replan keeps connectable pairs and repairs beacons")
{
    const MPNetModel zero = zero_model();
    PlanConfig cfg;
    Rng rng(4);

    const auto open = problem2d(clutter(), pt(-18, -18), pt(18, 18));
    const Path ok{{pt(-18, -18), pt(-18, 0), pt(-5, 0), pt(0, 18), pt(18, 18)}};
    REQUIRE(path_feasible(open.robot, ok, open.ws, cfg.steps.medium));
    const auto same = replan(ok, zero, encode(zero, open.pc), open, cfg, false, cfg.steps.medium, rng);
    REQUIRE(same);
    CHECK(*same == ok);

    const auto wall = problem2d(gap_wall(), pt(-10, 0), pt(10, 0));
    const Path beacon{{pt(-10, -5), pt(-10, 0), pt(10, 0), pt(10, -5)}};
    PlanStats st;
    const auto fixed = replan(beacon, zero, encode(zero, wall.pc), wall, cfg, true, cfg.steps.fine, rng, &st);
    REQUIRE(fixed);
    CHECK(st.oracle_called);
    CHECK(fixed->front() == beacon.front());
    CHECK(fixed->end_state() == beacon.end_state());
    CHECK(path_feasible(wall.robot, *fixed, wall.ws, cfg.steps.fine));

    const auto neural = replan(beacon, zero, encode(zero, wall.pc), wall, cfg, false, cfg.steps.medium, rng);
    CHECK_FALSE(neural);
}

TEST_CASE("mpnet_path")
{
    const MPNetModel model = small_model(9);
    PlanConfig cfg;
    Rng rng(8);

    SUBCASE("direct connection")
    {
        const auto p = problem2d(clutter(), pt(-18, 18), pt(-17, 10));
        const auto r = mpnet_path(model, p, cfg, rng);
        REQUIRE(r.path);
        CHECK(r.path->size() == 2);
        CHECK(r.stats.replanning_rounds == 0);
        CHECK(r.stats.bnp_feasible);
        CHECK_FALSE(r.stats.oracle_called);
    }
    SUBCASE("sealed goal")
    {
        const auto p = problem2d({rect(5, -5, 15, -3), rect(5, 3, 15, 5), rect(5, -3, 7, 3), rect(13, -3, 15, 3)},
                                 pt(-10, 0), pt(10, 0));
        const auto r = mpnet_path(model, p, cfg, rng);
        CHECK_FALSE(r.path);
        CHECK(r.stats.oracle_called);
        CHECK(r.stats.replanning_rounds == cfg.N_r);
    }
    SUBCASE("neural-only failure across a wall")
    {
        PlanConfig np = cfg;
        np.plan_oracle = false;
        np.N = 10;
        np.N_r = 2;
        const MPNetModel zero = zero_model();
        const auto p = problem2d({rect(-2, -20, 2, 20)}, pt(-10, 0), pt(10, 0));
        const auto r = mpnet_path(zero, p, np, rng);
        CHECK_FALSE(r.path);
        CHECK_FALSE(r.stats.oracle_called);
    }
    SUBCASE("hybrid solves whatever the oracle solves, and every path is sound")
    {
        Rng prng(77);
        for (int k = 0; k < 12; ++k)
        {
            const auto p = random_problem(clutter(), prng);
            UniformSampler sampler(p);
            RrtOptions opts;
            opts.max_iters = cfg.oracle_iters;
            Rng r1(k);
            const bool oracle_ok = rrt_star(p, sampler, opts, r1).path.has_value();
            Rng r2(k);
            const auto r = mpnet_path(model, p, cfg, r2);
            if (oracle_ok)
                CHECK(r.path);
            if (r.path)
            {
                CHECK(r.path->front() == p.c_init);
                CHECK(p.robot.in_goal_region(r.path->end_state(), p.c_goal));
                CHECK(path_feasible(p.robot, *r.path, p.ws, cfg.steps.fine));
            }
        }
    }
    SUBCASE("invalid budgets")
    {
        PlanConfig bad = cfg;
        bad.N_r = 0;
        const auto p = problem2d({}, pt(0, 0), pt(1, 1));
        CHECK_THROWS_AS((void)mpnet_path(model, p, bad, rng), std::invalid_argument);
    }
}

TEST_CASE("neural samplers")
{
    const MPNetModel model = small_model(12);
    PlanConfig cfg;

    SUBCASE("N_smp = 0 matches the uniform sampler")
    {
        cfg.N_smp = 0;
        const auto p = problem2d(clutter(), pt(-18, -18), pt(18, 18));
        MPNetSampler uni(model, p, cfg);
        BidirectionalMPNetSampler bi(model, p, cfg);
        UniformSampler ref(p);
        Rng a(5), b(5), c(5);
        for (int i = 0; i < 500; ++i)
        {
            const Config want = ref.next(c);
            CHECK(uni.next(a) == want);
            CHECK(bi.next(b) == want);
        }
    }
    SUBCASE("post-budget draws are uniform")
    {
        cfg.N_smp = 20;
        const auto p = problem2d(clutter(), pt(-18, -18), pt(18, 18));
        MPNetSampler s(model, p, cfg, 0.0);
        Rng rng(6);
        for (int i = 0; i < cfg.N_smp; ++i)
            (void)s.next(rng);
        const int n = 10000;
        std::vector<double> xs, ys;
        for (int i = 0; i < n; ++i)
        {
            const Config c = s.next(rng);
            xs.push_back(c[0]);
            ys.push_back(c[1]);
        }
        // Kolmogorov-Smirnov against U(-20, 20), alpha = 0.01.
        for (auto* v : {&xs, &ys})
        {
            std::sort(v->begin(), v->end());
            double d = 0.0;
            for (int i = 0; i < n; ++i)
            {
                const double f = ((*v)[static_cast<std::size_t>(i)] + 20.0) / 40.0;
                d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
            }
            CHECK(d < 1.628 / std::sqrt(static_cast<double>(n)));
        }
    }
    SUBCASE("rollout resets at the goal region")
    {
        const MPNetModel zero = zero_model();
        const auto p = problem2d({}, pt(-15, -15), pt(0.3, 0.2));
        MPNetSampler s(zero, p, cfg);
        Rng rng(1);
        for (int i = 0; i < 10; ++i)
            CHECK(s.next(rng) == pt(0, 0));
        CHECK(s.resets() == 10);
    }
    SUBCASE("bidirectional draws alternate chains")
    {
        const MPNetModel zero = zero_model();
        const auto p = problem2d({}, pt(-15, -15), pt(15, 15));
        BidirectionalMPNetSampler s(zero, p, cfg);
        Rng rng(1);
        for (int i = 0; i < 20; ++i)
        {
            (void)s.next(rng);
            CHECK(s.last_origin() == i % 2);
            CHECK(s.resets() == (i + 1) / 2);
        }
        cfg.N_smp = 2;
        BidirectionalMPNetSampler t(zero, p, cfg);
        (void)t.next(rng);
        (void)t.next(rng);
        (void)t.next(rng);
        CHECK(t.last_origin() == -1);
    }
    SUBCASE("RRT* with neural samplers stays complete")
    {
        Rng prng(31);
        for (int k = 0; k < 5; ++k)
        {
            const auto p = random_problem(clutter(), prng);
            RrtOptions opts;
            opts.max_iters = 50000;
            opts.stop_on_first = true;
            MPNetSampler s(model, p, cfg);
            Rng rng(k);
            const auto r = rrt_star(p, s, opts, rng);
            REQUIRE(r.path);
            CHECK(path_feasible(p.robot, *r.path, p.ws, opts.step));
            BidirectionalMPNetSampler b(model, p, cfg);
            CHECK(rrt_star(p, b, opts, rng).path);
        }
    }
}

TEST_CASE("result record")
{
    const Path p{{pt(0, 0), pt(3, 4)}};
    PlanStats st;
    st.pnet_calls = 7;
    const auto j = result_record("simple2d/0/3", "mpnet_hp", p, st, 1.5, 42);
    CHECK(j["problem_id"] == "simple2d/0/3");
    CHECK(j["planner"] == "mpnet_hp");
    CHECK(j["success"] == true);
    CHECK(j["cost"].get<double>() == doctest::Approx(5.0));
    CHECK(j["states"].size() == 2);
    CHECK(j["pnet_calls"] == 7);
    CHECK(j["oracle_called"] == false);
    CHECK(j["seed"] == 42);
    const auto f = result_record("x", "np", std::nullopt, st, 0.0, 1);
    CHECK(f["success"] == false);
    CHECK(f["cost"].is_null());
}
