#include "neuroplan/learn/continual.hpp"

#include <doctest.h>

#include <climits>
#include <sstream>

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

Config pt(double x, double y) { return RobotModel::point2d().make_config({x, y}); }

TrainingSample tagged(int id) { return {pt(id, 0), pt(0, 0), pt(0, 0), 0}; }

MPNetModel small_model(std::uint64_t seed)
{
    ModelOptions o;
    o.cloud_points = 40;
    o.latent_dim = 6;
    o.enet_hidden = {16};
    o.pnet_hidden = {32, 16};
    Rng rng(seed);
    return make_model(RobotModel::point2d(), bounds2d(), o, rng);
}

std::vector<PointCloud> clouds_for(std::size_t n)
{
    std::vector<PointCloud> out;
    for (std::size_t i = 0; i < n; ++i)
    {
        Box o;
        o.dim = 2;
        o.lo = {-5.0 + static_cast<double>(i), -3, 0};
        o.hi = {0.0 + static_cast<double>(i), 2, 0};
        out.push_back(make_point_cloud(Workspace(bounds2d(), {o}), 40, i));
    }
    return out;
}

std::vector<TrainingSample> random_demo(Rng& rng, std::size_t cloud, int len = 5)
{
    Path p;
    for (int i = 0; i < len; ++i)
        p.states.push_back(pt(uniform(rng, -18, 18), uniform(rng, -18, 18)));
    return one_step_pairs(p, cloud);
}

nn::Vector random_vec(Rng& rng, Eigen::Index n)
{
    std::normal_distribution<double> nd;
    nn::Vector v(n);
    for (auto& x : v)
        x = nd(rng);
    return v;
}

} // namespace

TEST_CASE("reservoir update")
{
    Rng rng(1);
    EpisodicMemory mem(5);
    for (int i = 0; i < 5; ++i)
    {
        reservoir_update(mem, tagged(i), rng);
        CHECK(mem.size() == static_cast<std::size_t>(i + 1));
    }
    for (int i = 5; i < 100; ++i)
        reservoir_update(mem, tagged(i), rng);
    CHECK(mem.size() == 5);
    CHECK(mem.seen_count == 100);

    EpisodicMemory none(0);
    for (int i = 0; i < 10; ++i)
        reservoir_update(none, tagged(i), rng);
    CHECK(none.empty());
    CHECK(none.seen_count == 10);

    // Inclusion frequency per item over 300 seeded streams: capacity / N = 0.01.
    const int cap = 50, n = 5000, runs = 300;
    std::vector<int> hits(n, 0);
    for (int s = 0; s < runs; ++s)
    {
        Rng r(static_cast<std::uint64_t>(s));
        EpisodicMemory m(cap);
        for (int i = 0; i < n; ++i)
            reservoir_update(m, tagged(i), r);
        for (const auto& it : m.items)
            ++hits[static_cast<std::size_t>(it.c_t[0])];
    }
    double mean = 0.0;
    for (int h : hits)
        mean += static_cast<double>(h) / runs;
    mean /= n;
    CHECK(mean == doctest::Approx(0.01).epsilon(1e-9));
    // Blocks of 500 items: each block's frequency within 3 standard errors.
    for (int b = 0; b < n; b += 500)
    {
        double f = 0.0;
        for (int i = b; i < b + 500; ++i)
            f += hits[static_cast<std::size_t>(i)];
        f /= 500.0 * runs;
        CHECK(std::abs(f - 0.01) < 3.0 * std::sqrt(0.01 * 0.99 / (500.0 * runs)));
    }
}

TEST_CASE("loss-ranked policies")
{
    Rng rng(2);
    auto filled = [&](MemoryPolicy p) {
        EpisodicMemory m(3);
        for (int i = 1; i <= 3; ++i)
            select_update(m, tagged(i), static_cast<double>(i), p, rng);
        return m;
    };
    EpisodicMemory s = filled(MemoryPolicy::Surprise);
    select_update(s, tagged(5), 5.0, MemoryPolicy::Surprise, rng);
    CHECK(std::find(s.scores.begin(), s.scores.end(), 1.0) == s.scores.end());
    CHECK(std::find(s.scores.begin(), s.scores.end(), 5.0) != s.scores.end());
    CHECK(s.seen_count == 4);

    EpisodicMemory r = filled(MemoryPolicy::Reward);
    select_update(r, tagged(5), 5.0, MemoryPolicy::Reward, rng);
    CHECK(r.scores == std::vector<double>{1.0, 2.0, 3.0});
    select_update(r, tagged(6), 0.5, MemoryPolicy::Reward, rng);
    CHECK(std::find(r.scores.begin(), r.scores.end(), 3.0) == r.scores.end());

    CHECK(memory_policy_from_string("coverage_knn") == MemoryPolicy::CoverageKnn);
    CHECK_THROWS_AS((void)memory_policy_from_string("fifo"), std::invalid_argument);
}

TEST_CASE("coverage memory spreads out more than reservoir on a clustered stream")
{
    const Normalizer norm(RobotModel::point2d(), bounds2d());
    auto spread = [](const EpisodicMemory& m) {
        double s = 0.0;
        int k = 0;
        for (std::size_t i = 0; i < m.size(); ++i)
            for (std::size_t j = i + 1; j < m.size(); ++j, ++k)
                s += (m.features[i] - m.features[j]).norm();
        return s / k;
    };
    double cov = 0.0, res = 0.0;
    for (int seed = 0; seed < 100; ++seed)
    {
        Rng rng(static_cast<std::uint64_t>(seed));
        EpisodicMemory a(20), b(20);
        for (int i = 0; i < 400; ++i)
        {
            // 90% of the stream sits in one tight cluster, the rest is spread out.
            const bool tight = uniform01(rng) < 0.9;
            const double x = tight ? uniform(rng, 9, 10) : uniform(rng, -19, 19);
            const double y = tight ? uniform(rng, 9, 10) : uniform(rng, -19, 19);
            const TrainingSample s{pt(x, y), pt(x, y), pt(x, y), 0};
            const nn::Vector f = sample_features(norm, s);
            select_update(a, s, 0.0, MemoryPolicy::CoverageKnn, rng, f);
            select_update(b, s, 0.0, MemoryPolicy::Reservoir, rng);
        }
        for (std::size_t i = 0; i < b.size(); ++i)
            b.features[i] = sample_features(norm, b.items[i]);
        CHECK(a.size() == 20);
        cov += spread(a);
        res += spread(b);
    }
    CHECK(cov > res);
}

TEST_CASE("memory gradient is the mean per-sample gradient")
{
    const MPNetModel model = small_model(3);
    const auto clouds = clouds_for(2);
    Rng rng(4);
    const auto d = random_demo(rng, 1, 4);
    auto single = [&](const TrainingSample& s) {
        return batch_gradient(model, std::span(&s, 1), clouds, true, nn::DropoutMode::off()).flat;
    };
    EpisodicMemory one(10);
    one.items = {d[0]};
    CHECK((memory_gradient(model, one, clouds, true) - single(d[0])).cwiseAbs().maxCoeff() < 1e-14);
    EpisodicMemory twice(10);
    twice.items = {d[0], d[0]};
    CHECK((memory_gradient(model, twice, clouds, true) - single(d[0])).cwiseAbs().maxCoeff() < 1e-14);
    EpisodicMemory three(10);
    three.items = {d[0], d[1], d[2]};
    const nn::Vector want = (single(d[0]) + single(d[1]) + single(d[2])) / 3.0;
    const nn::Vector got = memory_gradient(model, three, clouds, true);
    for (Eigen::Index i = 0; i < want.size(); ++i)
        REQUIRE(got[i] == doctest::Approx(want[i]).epsilon(1e-10).scale(1e-12));
    CHECK_THROWS_AS((void)memory_gradient(model, EpisodicMemory(3), clouds, true), std::invalid_argument);
}

TEST_CASE("gem projection")
{
    Rng rng(5);
    const nn::Vector g_m = random_vec(rng, 12);
    nn::Vector g = g_m + 0.1 * random_vec(rng, 12);
    REQUIRE(g.dot(g_m) > 0);
    CHECK(gem_project(g, g_m) == g);
    CHECK(gem_project(-g_m, g_m).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(gem_project(g, nn::Vector::Zero(12)) == g);
    {
        // Anti-parallel in one dimension: zero up to rounding, and a fixed point.
        nn::Vector a(1), b(1);
        a << 0.251039;
        b << -24.6167;
        const nn::Vector z = gem_project(a, b);
        CHECK(std::abs(z[0]) < 1e-15);
        CHECK(z.dot(b) >= 0.0);
        CHECK(gem_project(z, b) == z);
    }
    CHECK_THROWS_AS((void)gem_project(g, nn::Vector::Zero(3)), std::invalid_argument);

    for (int trial = 0; trial < 20; ++trial)
    {
        const nn::Vector gm = random_vec(rng, 12);
        nn::Vector gv = random_vec(rng, 12);
        if (gv.dot(gm) >= 0)
            gv = -gv;
        const nn::Vector gp = gem_project(gv, gm);
        CHECK(std::abs(gp.dot(gm)) < 1e-9);
        CHECK(gem_project(gp, gm) == gp);
        const double best = (gv - gp).norm();
        for (int k = 0; k < 500; ++k)
        {
            nn::Vector h = gp + random_vec(rng, 12);
            if (h.dot(gm) < 0)
                continue;
            CHECK(best <= (gv - h).norm() + 1e-12);
        }
    }
}

TEST_CASE("continual step")
{
    const auto clouds = clouds_for(2);
    MPNetModel model = small_model(6);
    ContinualOptions o;
    o.lr = 1e-3;
    Learner learner(model, o);
    EpisodicMemory mem(100);
    ReplayBuffer buf;
    Rng rng(7);

    const auto d1 = random_demo(rng, 0);
    const StepInfo s1 = continual_step(learner, d1, mem, buf, clouds, rng);
    CHECK(s1.g_proj == s1.g);
    CHECK_FALSE(s1.projected);
    CHECK(s1.g_m.size() == 0);
    CHECK(buf.items.size() == d1.size());
    CHECK(mem.size() == d1.size());

    const EpisodicMemory snapshot = mem;
    const double before = batch_loss(model, snapshot.items, clouds);
    const auto d2 = random_demo(rng, 1);
    const StepInfo s2 = continual_step(learner, d2, mem, buf, clouds, rng);
    REQUIRE(s2.g_m.size() == s2.g.size());
    CHECK(s2.g_proj.dot(s2.g_m) >= -1e-9);
    const double after = batch_loss(model, snapshot.items, clouds);
    CHECK(after - before <= 1e-4);
    CHECK(mem.size() == d1.size() + d2.size());
    CHECK(buf.items.size() == d1.size() + d2.size());
}

TEST_CASE("rehearsal")
{
    const auto clouds = clouds_for(2);
    MPNetModel model = small_model(8);
    ContinualOptions o;
    o.lr = 1e-3;
    Learner learner(model, o);
    EpisodicMemory mem(50);
    ReplayBuffer buf;
    buf.period = 5;
    buf.batch_size = 10;
    Rng rng(9);

    for (int k = 0; k < 3; ++k)
        for (const auto& s : random_demo(rng, k % 2))
            buf.items.push_back(s);
    REQUIRE(buf.items.size() == 12);
    const auto p0 = model.pnet.flat();
    CHECK_FALSE(rehearse(learner, 3, buf, mem, clouds, rng));
    CHECK(model.pnet.flat() == p0);
    ReplayBuffer small = buf;
    small.items.resize(10);
    CHECK_FALSE(rehearse(learner, 5, small, mem, clouds, rng));
    CHECK(model.pnet.flat() == p0);
    CHECK(rehearse(learner, 10, buf, mem, clouds, rng));
    CHECK_FALSE(model.pnet.flat() == p0);

    buf.period = 1;
    const double l0 = batch_loss(model, buf.items, clouds);
    for (int t = 1; t <= 50; ++t)
        CHECK(rehearse(learner, t, buf, mem, clouds, rng));
    CHECK(batch_loss(model, buf.items, clouds) < l0);

    ReplayBuffer bad;
    bad.period = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("learning loops")
{
    const auto clouds = clouds_for(1);
    const RobotModel robot = RobotModel::point2d();
    Box wall;
    wall.dim = 2;
    wall.lo = {-5, -3, 0};
    wall.hi = {0, 2, 0};
    const Workspace ws(bounds2d(), {wall});

    // Problems whose start and goal see each other: any model solves them by direct connection.
    std::vector<StreamItem> easy;
    Rng prng(10);
    while (easy.size() < 30)
    {
        StreamItem it;
        it.problem.robot = robot;
        it.problem.ws = ws;
        it.problem.pc = clouds[0];
        it.problem.c_init = sample_free(robot, ws, prng);
        it.problem.c_goal = sample_free(robot, ws, prng);
        if (steer_to(robot, it.problem.c_init, it.problem.c_goal, ws, 0.8))
            easy.push_back(it);
    }
    int calls = 0;
    const Expert straight = [&](const PlanningProblem& p, Rng&) -> std::optional<Path> {
        ++calls;
        return Path{{p.c_init, interpolate(p.c_init, p.c_goal, 0.5), p.c_goal}};
    };
    const Expert failing = [](const PlanningProblem&, Rng&) -> std::optional<Path> { return std::nullopt; };

    ContinualOptions o;
    o.replay_period = 10;
    o.replay_batch = 5;
    PlanConfig cfg;
    cfg.N = 5;
    cfg.N_r = 1;

    SUBCASE("continual loop calls the expert on every problem")
    {
        MPNetModel model = small_model(11);
        Learner l(model, o);
        EpisodicMemory mem(20);
        ReplayBuffer buf{{}, o.replay_period, o.replay_batch};
        Rng rng(1);
        const auto res = continual_loop(l, easy, clouds, straight, mem, buf, rng);
        CHECK(res.demo_count == 30);
        CHECK(calls == 30);
        CHECK(buf.items.size() == 60);
        CHECK(mem.size() == 20);
        REQUIRE(res.log.size() == 30);
        CHECK(res.log[4].t == 5);
        CHECK(res.log[4].demo_len == 3);
        CHECK(res.log[4].loss.has_value());
        std::ostringstream os;
        write_log(os, res.log);
        std::istringstream is(os.str());
        std::string line;
        int n = 0;
        while (std::getline(is, line))
        {
            const auto j = nlohmann::json::parse(line);
            CHECK(j.size() == 6);
            CHECK(j["t"] == ++n);
            CHECK(j["expert_called"] == true);
        }
        CHECK(n == 30);
    }
    SUBCASE("active loop with N_c beyond the stream demonstrates everything")
    {
        MPNetModel model = small_model(11);
        o.n_c = INT_MAX;
        Learner l(model, o);
        EpisodicMemory mem(20);
        ReplayBuffer buf{{}, o.replay_period, o.replay_batch};
        Rng rng(1);
        CHECK(active_continual_loop(l, easy, clouds, straight, cfg, mem, buf, rng).demo_count == 30);
    }
    SUBCASE("active loop skips problems the model already solves")
    {
        MPNetModel model = small_model(11);
        o.n_c = 10;
        Learner l(model, o);
        EpisodicMemory mem(20);
        ReplayBuffer buf{{}, o.replay_period, o.replay_batch};
        Rng rng(1);
        const auto res = active_continual_loop(l, easy, clouds, straight, cfg, mem, buf, rng);
        CHECK(res.demo_count == 10);
        CHECK(res.model_solved == 20);
        CHECK_FALSE(res.log[15].expert_called);
        CHECK_FALSE(res.log[15].loss.has_value());
        CHECK(to_json(res.log[15])["loss"].is_null());
    }
    SUBCASE("expert failures are skipped")
    {
        MPNetModel model = small_model(11);
        Learner l(model, o);
        EpisodicMemory mem(20);
        ReplayBuffer buf{{}, o.replay_period, o.replay_batch};
        Rng rng(1);
        const auto res = continual_loop(l, std::span(easy).first(5), clouds, failing, mem, buf, rng);
        CHECK(res.expert_failures == 5);
        CHECK(buf.items.empty());
    }
}

TEST_CASE("backward transfer")
{
    CHECK(backward_transfer(0.8, 0.9) == doctest::Approx(0.1));
    CHECK(backward_transfer(0.5, 0.5) == 0.0);
    CHECK(backward_transfer(0.9, 0.7) == doctest::Approx(-0.2));
    CHECK_THROWS_AS((void)backward_transfer(1.2, 0.5), std::invalid_argument);
}
