// Acceptance run: one PASS/FAIL line per criterion on stdout, progress on stderr.
// Datasets and the trained model are cached under --cache and reused.

#include "neuroplan/bench/bench.hpp"
#include "neuroplan/cspace/json.hpp"
#include "neuroplan/cspace/ops.hpp"
#include "neuroplan/data/dataset.hpp"
#include "neuroplan/learn/continual.hpp"
#include "neuroplan/nn/losses.hpp"
#include "neuroplan/parallel.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

using namespace neuroplan;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 2024;
constexpr double kFine = 0.05;

struct Verdict
{
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double now_ms()
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

double median(std::vector<double> v)
{
    if (v.empty())
        return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void note(const std::string& s) { std::cerr << "  " << s << std::endl; }

// ----- fixtures -----

struct Fixtures
{
    fs::path cache;
    int epochs = 50;

    const Dataset& train()
    {
        if (!train_)
            train_ = dataset("train_s2024_40x100", Split::Train, 40, 100);
        return *train_;
    }

    const Dataset& seen()
    {
        if (!seen_)
            seen_ = dataset("seen_s2024_10x50", Split::Seen, 10, 50);
        return *seen_;
    }

    const MPNetModel& model()
    {
        if (model_)
            return *model_;
        const fs::path dir = cache / ("model_s2024_e" + std::to_string(epochs));
        if (fs::exists(dir / "model.json"))
        {
            model_ = load_model(dir);
            return *model_;
        }
        const Dataset& ds = train();
        note("training the planning model (" + std::to_string(epochs) + " epochs)");
        const double t0 = now_ms();
        MPNetModel m = fresh_model(derive_seed(kSeed, 0));
        TrainOptions o;
        o.epochs = epochs;
        o.seed = derive_seed(kSeed, 1);
        const TrainResult r = train_offline(m, ds.demos, ds.clouds, o);
        note(fmt("trained in %.0f s, final loss %.4f", (now_ms() - t0) / 1000, r.loss_curve.back()));
        save_model(dir, m, kSeed);
        model_ = std::move(m);
        return *model_;
    }

    MPNetModel fresh_model(std::uint64_t seed)
    {
        const Dataset& ds = train();
        Rng rng(seed);
        ModelOptions mo;
        mo.cloud_points = ds.cloud_points();
        return make_model(ds.robot, ds.workspaces.front().bounds(), mo, rng);
    }

  private:
    Dataset dataset(const std::string& name, Split split, std::size_t workspaces, std::size_t per)
    {
        const fs::path dir = cache / name;
        if (fs::exists(dir / "manifest.json"))
            return load_dataset(dir);
        note("generating " + name);
        const double t0 = now_ms();
        DatasetOptions o;
        o.env = EnvKind::Simple2D;
        o.split = split;
        o.workspaces = workspaces;
        o.per_workspace = per;
        o.seed = kSeed;
        Dataset ds = generate_dataset(o);
        note(fmt("generated %zu demos in %.0f s", ds.demos.size(), (now_ms() - t0) / 1000));
        save_dataset(dir, ds);
        return ds;
    }

    std::optional<Dataset> train_;
    std::optional<Dataset> seen_;
    std::optional<MPNetModel> model_;
};

bool sound(const PlanningProblem& p, const Path& path)
{
    return !path.empty() && path.front() == p.c_init && path.end_state() == p.c_goal &&
           path_feasible(p.robot, path, p.ws, kFine);
}

// ----- criteria -----

// Every planner, every seen problem; every returned path must be feasible.
Verdict feasibility(Fixtures& fx)
{
    const Dataset& ds = fx.seen();
    const MPNetModel& model = fx.model();
    std::set<std::size_t> problems;
    int paths = 0, violations = 0;
    std::vector<std::string> per;
    for (auto k : {PlannerKind::MPNetNP, PlannerKind::MPNetHP, PlannerKind::RrtStar, PlannerKind::InformedRrtStar,
                   PlannerKind::MPNetSMP, PlannerKind::MPNetSMPBi})
    {
        PlannerSpec spec;
        spec.kind = k;
        BenchOptions o;
        o.seed = derive_seed(kSeed, 10);
        const Metrics m = run_bench(ds, spec, &model, o);
        int bad = 0;
        for (std::size_t i = 0; i < m.records.size(); ++i)
        {
            problems.insert(i);
            const auto& r = m.records[i];
            if (!r["success"].get<bool>())
                continue;
            ++paths;
            const PlanningProblem p = ds.problem(i);
            if (!sound(p, path_from_json(p.robot, r["states"])))
                ++bad;
        }
        violations += bad;
        per.push_back(fmt("%s %d/%d", to_string(k), m.successes, m.attempts));
        note(per.back() + fmt(" solved, %d violations", bad));
    }
    return {violations == 0 && problems.size() >= 500,
            fmt("%d paths over %zu problems, %d violations", paths, problems.size(), violations)};
}

Verdict hybrid_completeness(Fixtures& fx)
{
    const Dataset& ds = fx.seen();
    const MPNetModel& model = fx.model();
    const std::size_t n = 50;
    std::vector<int> ok(n), oracle(n);
    parallel_for(n, [&](std::size_t i) {
        const PlanningProblem p = ds.problem(i * ds.demos.size() / n);
        Rng rng(derive_seed(kSeed, 20 + i));
        const PlanResult r = mpnet_path(model, p, PlanConfig{}, rng);
        ok[i] = r.path && sound(p, *r.path);
        oracle[i] = r.stats.oracle_called;
    });
    const int solved = std::accumulate(ok.begin(), ok.end(), 0);
    const int used = std::accumulate(oracle.begin(), oracle.end(), 0);
    return {solved == static_cast<int>(n), fmt("%d/%zu solved at oracle budget 10000 (oracle used on %d)", solved, n, used)};
}

Verdict near_optimality(Fixtures& fx)
{
    const Dataset& ds = fx.seen();
    const MPNetModel& model = fx.model();
    const std::size_t n = ds.demos.size();
    std::vector<double> ratio(n, -1.0);
    parallel_for(n, [&](std::size_t i) {
        const PlanningProblem p = ds.problem(i);
        PlanConfig cfg;
        cfg.plan_oracle = false;
        Rng rng(derive_seed(kSeed, 30 + i));
        const PlanResult np = mpnet_path(model, p, cfg, rng);
        UniformSampler sampler(p);
        RrtOptions o;
        o.max_iters = 20000;
        const RrtResult rrt = rrt_star(p, sampler, o, rng);
        if (np.path && rrt.path)
            ratio[i] = path_cost(*np.path) / path_cost(*rrt.path);
    });
    std::vector<double> solved;
    for (double r : ratio)
        if (r > 0)
            solved.push_back(r);
    const double med = median(solved);
    return {!solved.empty() && med <= 1.2,
            fmt("median NP / RRT*(20000) cost %.3f over %zu problems solved by both", med, solved.size())};
}

Verdict neural_success(Fixtures& fx)
{
    const Dataset& ds = fx.seen();
    const MPNetModel& model = fx.model();
    const std::size_t n = ds.demos.size();
    std::vector<int> bnp_ok(n), np_ok(n);
    parallel_for(n, [&](std::size_t i) {
        const PlanningProblem p = ds.problem(i);
        PlanConfig cfg;
        cfg.plan_oracle = false;
        Rng rng(derive_seed(kSeed, 40 + i));
        const PlanResult r = mpnet_path(model, p, cfg, rng);
        bnp_ok[i] = r.stats.bnp_feasible;
        np_ok[i] = r.path && sound(p, *r.path);
    });
    const double bnp = std::accumulate(bnp_ok.begin(), bnp_ok.end(), 0.0) / static_cast<double>(n);
    const double np = std::accumulate(np_ok.begin(), np_ok.end(), 0.0) / static_cast<double>(n);
    return {bnp >= 0.5 && np >= 0.8, fmt("BNP only %.1f%%, MPNetPath:NP %.1f%% on %zu seen problems", 100 * bnp,
                                         100 * np, n)};
}

Verdict gem_invariants()
{
    Rng rng(derive_seed(kSeed, 50));
    std::normal_distribution<double> gauss;
    int fail_constraint = 0, fail_identity = 0, fail_idempotent = 0, projected = 0;
    double worst = 0.0;
    for (int t = 0; t < 10000; ++t)
    {
        const auto d = static_cast<Eigen::Index>(1 + rng() % 256);
        nn::Vector g(d), gm(d);
        for (Eigen::Index i = 0; i < d; ++i)
        {
            g[i] = gauss(rng);
            gm[i] = gauss(rng);
        }
        g *= std::exp(uniform(rng, -6, 6));
        gm *= std::exp(uniform(rng, -6, 6));
        if (t % 4 == 0)
            g -= 2.0 * gm * (g.dot(gm) / gm.squaredNorm()); // force a conflicting pair
        const nn::Vector gp = gem_project(g, gm);
        const double dot = gp.dot(gm);
        worst = std::min(worst, dot);
        if (dot < -1e-9)
            ++fail_constraint;
        if (g.dot(gm) >= 0)
        {
            if (!(gp.array() == g.array()).all())
                ++fail_identity;
        }
        else
            ++projected;
        const nn::Vector gpp = gem_project(gp, gm);
        if (!(gpp.array() == gp.array()).all())
            ++fail_idempotent;
    }
    return {fail_constraint + fail_identity + fail_idempotent == 0,
            fmt("10000 pairs (%d projected): %d constraint, %d identity, %d idempotence failures; min <g',g_M> %.3g",
                projected, fail_constraint, fail_identity, fail_idempotent, worst)};
}

Verdict reservoir_uniformity()
{
    constexpr std::size_t capacity = 50, stream = 5000, seeds = 2000, window = 100;
    std::vector<int> hits(stream);
    TrainingSample s;
    s.c_t = s.c_goal = s.y = Config{0.0, 0.0};
    for (std::size_t k = 0; k < seeds; ++k)
    {
        Rng rng(derive_seed(kSeed + 60, k));
        EpisodicMemory mem(capacity);
        for (std::size_t i = 0; i < stream; ++i)
        {
            s.cloud = i;
            reservoir_update(mem, s, rng);
        }
        for (const auto& it : mem.items)
            ++hits[it.cloud];
    }
    const double p = static_cast<double>(capacity) / stream;
    double chi2 = 0.0, worst_item = 0.0, worst_window = 0.0;
    std::size_t outside = 0;
    for (std::size_t i = 0; i < stream; ++i)
    {
        const double f = hits[i] / static_cast<double>(seeds);
        worst_item = std::max(worst_item, std::abs(f - p));
        outside += std::abs(f - p) > 0.003;
        const double e = p * seeds;
        chi2 += (hits[i] - e) * (hits[i] - e) / (e * (1 - p));
    }
    for (std::size_t w = 0; w < stream; w += window)
    {
        const double f = std::accumulate(hits.begin() + static_cast<long>(w), hits.begin() + static_cast<long>(w + window), 0.0) /
                         static_cast<double>(seeds * window);
        worst_window = std::max(worst_window, std::abs(f - p));
    }
    const double chi2_per_dof = chi2 / (stream - 1);
    // Per item the binomial noise alone has sd sqrt(p (1 - p) / seeds) = 0.0022,
    // so a correct sampler puts a sizeable share of single items past 0.003.
    double expected_outside = 0.0;
    for (std::size_t k = 0; k <= seeds; ++k)
        if (std::abs(static_cast<double>(k) / seeds - p) > 0.003)
            expected_outside += std::exp(std::lgamma(seeds + 1.0) - std::lgamma(k + 1.0) - std::lgamma(seeds - k + 1.0) +
                                         k * std::log(p) + (seeds - k) * std::log1p(-p));
    const bool pass = worst_window <= 0.003 && std::abs(chi2_per_dof - 1.0) < 0.1 &&
                      std::abs(static_cast<double>(outside) / stream - expected_outside) < 0.03;
    return {pass, fmt("100-item windows within %.5f of 0.01; items: max dev %.4f, %.1f%% beyond 0.003 (binomial "
                      "expectation %.1f%%), chi2/dof %.3f",
                      worst_window, worst_item, 100.0 * outside / stream, 100 * expected_outside, chi2_per_dof)};
}

// ----- criterion 7: finite differences -----

double max_rel_error(const nn::Vector& analytic, const nn::Vector& numeric)
{
    const double scale = std::max({analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), 1e-12});
    return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

nn::Vector numeric_grad(const std::function<double(const nn::Vector&)>& f, nn::Vector x, double h = 1e-6)
{
    nn::Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
    {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f(x);
        x[i] = keep - h;
        const double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2 * h);
    }
    return g;
}

nn::Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng)
{
    nn::Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i)
            m(i, j) = uniform(rng, -1, 1);
    return m;
}

std::size_t rand_size(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng() % (hi - lo + 1); }

// Model gradient of the path loss (point robots) or the rigid-body loss (SE2) against central differences.
double model_fd(const RobotModel& robot, Rng& rng)
{
    Box b;
    b.dim = robot.workspace_dim();
    for (std::size_t a = 0; a < b.dim; ++a)
    {
        b.lo[a] = -20;
        b.hi[a] = 20;
    }
    ModelOptions mo;
    mo.cloud_points = rand_size(rng, 3, 6);
    mo.latent_dim = rand_size(rng, 2, 5);
    mo.enet_hidden = {rand_size(rng, 4, 8)};
    mo.pnet_hidden = {rand_size(rng, 6, 12), rand_size(rng, 4, 8)};
    const MPNetModel model = make_model(robot, b, mo, rng);
    std::vector<PointCloud> clouds;
    for (int k = 0; k < 2; ++k)
    {
        PointCloud pc;
        pc.dim = b.dim;
        for (std::size_t i = 0; i < mo.cloud_points * b.dim; ++i)
            pc.coords.push_back(uniform(rng, -20, 20));
        clouds.push_back(pc);
    }
    std::vector<TrainingSample> samples;
    for (int i = 0; i < 4; ++i)
    {
        auto rnd = [&] { return sample_uniform(robot, Workspace(b, {}), rng); };
        samples.push_back({rnd(), rnd(), rnd(), static_cast<std::size_t>(i % 2)});
    }
    const double beta = uniform(rng, 0.5, 2.0);
    const auto g = batch_gradient(model, samples, clouds, true, nn::DropoutMode::off(), beta);
    const auto np = static_cast<Eigen::Index>(model.pnet.size());
    nn::Vector flat(g.flat.size());
    flat << model.pnet.flat(), model.enet.flat();
    auto f = [&](const nn::Vector& theta) {
        MPNetModel probe = model;
        probe.pnet.mutable_flat() = theta.head(np);
        probe.enet.mutable_flat() = theta.tail(theta.size() - np);
        return batch_loss(probe, samples, clouds, beta);
    };
    return max_rel_error(g.flat, numeric_grad(f, flat));
}

Verdict gradient_checks()
{
    Rng rng(derive_seed(kSeed, 70));
    const int trials = 10;
    double cae = 0.0, path = 0.0, rot = 0.0;
    for (int t = 0; t < trials; ++t)
    {
        // CAE objective through encoder and decoder.
        const std::size_t in = rand_size(rng, 4, 10), hid = rand_size(rng, 3, 8), lat = rand_size(rng, 2, 4);
        const auto enc = nn::NetSpec::make({in, hid, lat}, nn::Activation::PRelu);
        const auto dec = nn::NetSpec::make({lat, hid, in}, nn::Activation::PRelu);
        const auto ep = nn::init_params(enc, rng);
        const auto dp = nn::init_params(dec, rng);
        const nn::Matrix batch = random_matrix(static_cast<Eigen::Index>(in), 5, rng);
        const double lambda = uniform(rng, 1e-3, 1e-1);
        const auto l = nn::cae_loss(enc, dec, ep, dp, batch, lambda);
        auto fe = [&](const nn::Vector& th) { return nn::cae_loss(enc, dec, nn::NetParams(th), dp, batch, lambda).value; };
        auto fd = [&](const nn::Vector& th) { return nn::cae_loss(enc, dec, ep, nn::NetParams(th), batch, lambda).value; };
        cae = std::max({cae, max_rel_error(l.enc_grad.flat, numeric_grad(fe, ep.flat())),
                        max_rel_error(l.dec_grad.flat, numeric_grad(fd, dp.flat()))});

        // Path loss through Pnet and Enet, 2D and 3D point robots.
        path = std::max({path, model_fd(RobotModel::point2d(), rng), model_fd(RobotModel::point3d(), rng)});

        // Rotation loss: standalone on 4-vectors and through an SE2 model.
        nn::Vector q = random_matrix(4, 1, rng).col(0).normalized();
        const nn::Vector qhat = random_matrix(4, 1, rng).col(0) * uniform(rng, 0.5, 3.0);
        const auto ql = nn::quaternion_loss(qhat, q);
        auto fq = [&](const nn::Vector& v) { return nn::quaternion_loss(v, q).value; };
        rot = std::max({rot, max_rel_error(ql.grad, numeric_grad(fq, qhat)),
                        model_fd(RobotModel::rigid_se2({{-1, -0.5}, {1, -0.5}, {1, 0.5}, {-1, 0.5}}), rng)});
    }
    const double worst = std::max({cae, path, rot});
    return {worst < 1e-4, fmt("max relative error over %d random nets each: CAE %.2e, path %.2e, rotation %.2e",
                              trials, cae, path, rot)};
}

// ----- criterion 8 -----

double np_success(const MPNetModel& model, const Dataset& ds, std::uint64_t seed)
{
    std::vector<int> ok(ds.demos.size());
    parallel_for(ok.size(), [&](std::size_t i) {
        const PlanningProblem p = ds.problem(i);
        PlanConfig cfg;
        cfg.plan_oracle = false;
        Rng rng(derive_seed(seed, i));
        const PlanResult r = mpnet_path(model, p, cfg, rng);
        ok[i] = r.path && sound(p, *r.path);
    });
    return std::accumulate(ok.begin(), ok.end(), 0.0) / static_cast<double>(ok.size());
}

Verdict active_learning(Fixtures& fx)
{
    const Dataset& train = fx.train();
    const std::size_t n = 400;
    const std::size_t stride = train.demos.size() / n;
    std::vector<StreamItem> stream;
    std::vector<const Path*> demos;
    for (std::size_t i = 0; i < n; ++i)
    {
        stream.push_back({train.problem(i * stride), train.demos[i * stride].workspace});
        demos.push_back(&train.demos[i * stride].path);
    }
    // The expert replays the stored demonstration of the queried problem.
    const Expert expert = [&](const PlanningProblem& p, Rng&) -> std::optional<Path> {
        for (std::size_t i = 0; i < n; ++i)
            if (stream[i].problem.c_init == p.c_init && stream[i].problem.c_goal == p.c_goal)
                return *demos[i];
        return std::nullopt;
    };

    auto run = [&](bool active) {
        MPNetModel m = fx.fresh_model(derive_seed(kSeed, 80));
        ContinualOptions o;
        Learner learner(m, o);
        EpisodicMemory mem(o.memory_capacity);
        ReplayBuffer buf;
        buf.period = o.replay_period;
        buf.batch_size = o.replay_batch;
        Rng rng(derive_seed(kSeed, 81));
        PlanConfig cfg;
        cfg.plan_oracle = false;
        const double t0 = now_ms();
        const LoopResult r = active ? active_continual_loop(learner, stream, train.clouds, expert, cfg, mem, buf, rng)
                                    : continual_loop(learner, stream, train.clouds, expert, mem, buf, rng);
        const double success = np_success(m, fx.seen(), derive_seed(kSeed, 82));
        note(fmt("%s: %d demos, %d solved by the model, seen success %.1f%% (%.0f s)",
                 active ? "active continual" : "continual", r.demo_count, r.model_solved, 100 * success,
                 (now_ms() - t0) / 1000));
        return std::pair{r.demo_count, success};
    };
    const auto [cl_demos, cl_success] = run(false);
    const auto [acl_demos, acl_success] = run(true);
    const bool pass = acl_demos < cl_demos && cl_demos == static_cast<int>(n) &&
                      std::abs(acl_success - cl_success) <= 0.10;
    return {pass, fmt("demos: active %d vs continual %d; seen success %.1f%% vs %.1f%%", acl_demos, cl_demos,
                      100 * acl_success, 100 * cl_success)};
}

// ----- criterion 9 -----

double distance_to_path(const Config& c, const Path& path)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < path.size(); ++k)
    {
        const Config& a = path.states[k];
        const Config& b = path.states[k + 1];
        double ab2 = 0.0, t = 0.0;
        for (std::size_t i = 0; i < c.dim(); ++i)
        {
            ab2 += (b[i] - a[i]) * (b[i] - a[i]);
            t += (c[i] - a[i]) * (b[i] - a[i]);
        }
        t = ab2 > 0 ? std::clamp(t / ab2, 0.0, 1.0) : 0.0;
        double d2 = 0.0;
        for (std::size_t i = 0; i < c.dim(); ++i)
        {
            const double q = a[i] + t * (b[i] - a[i]) - c[i];
            d2 += q * q;
        }
        best = std::min(best, std::sqrt(d2));
    }
    return best;
}

Verdict smp_completeness(Fixtures& fx)
{
    const Dataset& ds = fx.seen();
    const MPNetModel& trained = fx.model();
    const MPNetModel untrained = fx.fresh_model(derive_seed(kSeed, 90));
    const std::size_t n = 20;
    const std::size_t stride = ds.demos.size() / n;

    std::vector<std::string> parts;
    bool all = true;
    for (const auto* model : {&untrained, &trained})
        for (bool bi : {false, true})
        {
            std::vector<int> ok(n);
            parallel_for(n, [&](std::size_t i) {
                const PlanningProblem p = ds.problem(i * stride);
                PlanConfig cfg;
                std::unique_ptr<Sampler> s;
                if (bi)
                    s = std::make_unique<BidirectionalMPNetSampler>(*model, p, cfg);
                else
                    s = std::make_unique<MPNetSampler>(*model, p, cfg);
                RrtOptions o;
                o.max_iters = 50000;
                o.stop_on_first = true;
                Rng rng(derive_seed(kSeed, 91 + i));
                const RrtResult r = rrt_star(p, *s, o, rng);
                ok[i] = r.path && sound(p, *r.path);
            });
            const int solved = std::accumulate(ok.begin(), ok.end(), 0);
            all = all && solved == static_cast<int>(n);
            parts.push_back(fmt("%s%s %d/%zu", model == &trained ? "trained" : "untrained", bi ? " bi" : "", solved, n));
        }

    // Concentration of the neural draws around the expert path versus uniform draws.
    const double radius = 2.0;
    double near_neural = 0.0, near_uniform = 0.0;
    std::size_t drawn = 0, uni = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        const PlanningProblem p = ds.problem(i * stride);
        const Path& expert = ds.demos[i * stride].path;
        PlanConfig cfg;
        MPNetSampler s(trained, p, cfg);
        Rng rng(derive_seed(kSeed, 120 + i));
        for (int k = 0; k < cfg.N_smp; ++k, ++drawn)
            near_neural += distance_to_path(s.next(rng), expert) <= radius;
        for (int k = 0; k < 5000; ++k, ++uni)
            near_uniform += distance_to_path(sample_uniform(p.robot, p.ws, rng), expert) <= radius;
    }
    const double ratio = (near_neural / drawn) / (near_uniform / uni);
    return {all && ratio >= 3.0, fmt("50000 iterations: %s, %s, %s, %s; neural draws within %.1f of the expert path "
                                     "%.1f%% vs uniform %.1f%% (%.1fx)",
                                     parts[0].c_str(), parts[1].c_str(), parts[2].c_str(), parts[3].c_str(), radius,
                                     100 * near_neural / drawn, 100 * near_uniform / uni, ratio)};
}

Verdict asymptotic_optimality()
{
    Box b;
    b.dim = 2;
    b.lo = {-20, -20, 0};
    b.hi = {20, 20, 0};
    PlanningProblem p;
    p.robot = RobotModel::point2d();
    p.ws = Workspace(b, {});
    p.c_init = p.robot.make_config({-15, -10});
    p.c_goal = p.robot.make_config({15, 12});
    p.pc = make_point_cloud(p.ws, 200, 0);
    const double optimum = distance(p.c_init, p.c_goal);
    std::vector<double> ratio(20);
    parallel_for(ratio.size(), [&](std::size_t k) {
        UniformSampler s(p);
        RrtOptions o;
        o.max_iters = 20000;
        Rng rng(derive_seed(kSeed, 130 + k));
        const RrtResult r = rrt_star(p, s, o, rng);
        ratio[k] = r.path ? path_cost(*r.path) / optimum : std::numeric_limits<double>::infinity();
    });
    const double med = median(ratio);
    return {med <= 1.05, fmt("median cost / straight line %.4f over 20 seeds (worst %.4f)", med,
                             *std::max_element(ratio.begin(), ratio.end()))};
}

Verdict relative_speed(Fixtures& fx)
{
    const Dataset& ds = fx.seen();
    const MPNetModel& model = fx.model();
    const int reps = 5;
    std::vector<double> t_np, t_rrt, ratio;
    std::size_t matched = 0;
    // Sequential on purpose: timings should not share the machine.
    for (std::size_t i = 0; ratio.size() < 20 && i < ds.demos.size(); i += 7)
    {
        const PlanningProblem p = ds.problem(i);
        PlanConfig cfg;
        cfg.plan_oracle = false;
        double np_ms = 0.0;
        std::optional<double> ref;
        for (int k = 0; k < reps; ++k)
        {
            Rng rng(derive_seed(kSeed, 140 + k));
            const double t0 = now_ms();
            const PlanResult r = mpnet_path(model, p, cfg, rng);
            np_ms += now_ms() - t0;
            if (k == 0 && r.path)
                ref = path_cost(*r.path);
        }
        if (!ref)
            continue;
        double rrt_ms = 0.0;
        for (int k = 0; k < reps; ++k)
        {
            UniformSampler s(p);
            RrtOptions o;
            o.max_iters = 20000;
            o.target_cost = 1.05 * *ref;
            Rng rng(derive_seed(kSeed, 150 + k));
            const double t0 = now_ms();
            const RrtResult r = rrt_star(p, s, o, rng);
            rrt_ms += now_ms() - t0;
            matched += r.path && path_cost(*r.path) <= o.target_cost;
        }
        t_np.push_back(np_ms / reps);
        t_rrt.push_back(rrt_ms / reps);
        ratio.push_back(t_np.back() / t_rrt.back());
    }
    const double med = median(ratio);
    return {ratio.size() == 20 && med < 1.0,
            fmt("median over %zu problems: NP %.2f ms, matched RRT* %.2f ms, per-problem time ratio %.3f (%zu/%zu "
                "RRT* runs reached the matched cost)",
                ratio.size(), median(t_np), median(t_rrt), med, matched, ratio.size() * reps)};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance criteria"};
    Fixtures fx;
    std::string cache = "acceptance_cache";
    std::vector<int> only;
    std::vector<int> known;
    std::string report;
    app.add_option("--cache", cache, "dataset and model cache directory")->capture_default_str();
    app.add_option("--epochs", fx.epochs, "offline training epochs")->capture_default_str();
    app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
    app.add_option("--known-fail", known, "criteria whose failure is recorded and does not affect the exit code")
        ->delimiter(',');
    app.add_option("--report", report, "also write the verdict lines to this file");
    CLI11_PARSE(app, argc, argv);
    fx.cache = cache;
    fs::create_directories(fx.cache);

    const std::vector<std::pair<int, std::function<Verdict()>>> criteria = {
        {1, [&] { return feasibility(fx); }},
        {2, [&] { return hybrid_completeness(fx); }},
        {3, [&] { return near_optimality(fx); }},
        {4, [&] { return neural_success(fx); }},
        {5, [] { return gem_invariants(); }},
        {6, [] { return reservoir_uniformity(); }},
        {7, [] { return gradient_checks(); }},
        {8, [&] { return active_learning(fx); }},
        {9, [&] { return smp_completeness(fx); }},
        {10, [] { return asymptotic_optimality(); }},
        {11, [&] { return relative_speed(fx); }},
    };

    std::ofstream report_out;
    if (!report.empty())
        report_out.open(report);
    int failed = 0;
    for (const auto& [id, run] : criteria)
    {
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end())
            continue;
        std::cerr << "criterion " << id << " ..." << std::endl;
        const double t0 = now_ms();
        Verdict v;
        try
        {
            v = run();
        }
        catch (const std::exception& e)
        {
            v = {false, std::string("error: ") + e.what()};
        }
        const bool is_known = std::find(known.begin(), known.end(), id) != known.end();
        failed += !v.pass && !is_known;
        const std::string line = "criterion " + std::to_string(id) + ": " + (v.pass ? "PASS" : "FAIL") +
                                 (!v.pass && is_known ? " (known)" : "") + "  " + v.detail +
                                 fmt("  [%.1f s]", (now_ms() - t0) / 1000);
        std::cout << line << std::endl;
        if (report_out)
            report_out << line << std::endl;
    }
    return failed ? 1 : 0;
}
