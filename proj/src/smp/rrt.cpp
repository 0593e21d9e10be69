#include "neuroplan/smp/rrt.hpp"

#include "neuroplan/cspace/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace neuroplan {

namespace {

constexpr int kInformedTries = 1000;

bool in_bounds(const RobotModel& robot, const Workspace& ws, const Config& c)
{
    for (std::size_t a = 0; a < robot.workspace_dim(); ++a)
        if (c[a] < ws.bounds().lo[a] || c[a] > ws.bounds().hi[a])
            return false;
    return true;
}

} // namespace

UniformSampler::UniformSampler(const PlanningProblem& problem, double goal_bias)
    : problem_(&problem), goal_bias_(goal_bias)
{
    if (goal_bias < 0.0 || goal_bias > 1.0)
        throw std::invalid_argument("UniformSampler: goal bias must lie in [0, 1]");
}

Config UniformSampler::next(Rng& rng)
{
    if (goal_bias_ > 0.0 && uniform01(rng) < goal_bias_)
        return problem_->c_goal;
    return sample_uniform(problem_->robot, problem_->ws, rng);
}

double rrt_gamma(const RobotModel& robot, const Workspace& ws)
{
    const double d = static_cast<double>(robot.dof());
    double mu = ws.free_volume();
    if (robot.kind() == RobotKind::RigidSE2)
        mu *= 2.0 * kPi;
    const double zeta = std::pow(kPi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
    return 2.0 * std::pow(1.0 + 1.0 / d, 1.0 / d) * std::pow(mu / zeta, 1.0 / d);
}

Config informed_sample(const Config& c_init, const Config& c_goal, double c_best, Rng& rng)
{
    const std::size_t d = c_init.dim();
    if (c_goal.dim() != d || c_goal.wrap_mask() != c_init.wrap_mask())
        throw std::invalid_argument("informed_sample: configuration mismatch");
    Eigen::VectorXd diff(static_cast<Eigen::Index>(d));
    difference(c_init, c_goal, std::span<double>(diff.data(), d));
    const double c_min = diff.norm();
    if (c_best < c_min - 1e-12 * std::max(1.0, c_min))
        throw std::invalid_argument("informed_sample: c_best is below the focal distance");
    c_best = std::max(c_best, c_min);

    Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    if (c_min > 0.0)
    {
        const Eigen::MatrixXd m = (diff / c_min) * Eigen::VectorXd::Unit(static_cast<Eigen::Index>(d), 0).transpose();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::VectorXd s = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d));
        s[static_cast<Eigen::Index>(d) - 1] = svd.matrixU().determinant() * svd.matrixV().determinant();
        rot = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    }

    std::normal_distribution<double> normal;
    Eigen::VectorXd ball(static_cast<Eigen::Index>(d));
    double norm = 0.0;
    while (norm < 1e-12)
    {
        for (auto& v : ball)
            v = normal(rng);
        norm = ball.norm();
    }
    ball *= std::pow(uniform01(rng), 1.0 / static_cast<double>(d)) / norm;

    Eigen::VectorXd radii = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d),
                                                      0.5 * std::sqrt(std::max(0.0, c_best * c_best - c_min * c_min)));
    radii[0] = 0.5 * c_best;
    const Eigen::VectorXd x = rot * radii.asDiagonal() * ball;

    std::array<double, kMaxDim> out{};
    for (std::size_t i = 0; i < d; ++i)
        out[i] = c_init[i] + 0.5 * diff[static_cast<Eigen::Index>(i)] + x[static_cast<Eigen::Index>(i)];
    return Config(std::span<const double>(out.data(), d), c_init.wrap_mask());
}

RrtResult rrt_star(const PlanningProblem& problem, Sampler& sampler, const RrtOptions& opts, Rng& rng)
{
    if (opts.max_iters < 1 || opts.eta <= 0.0 || opts.step <= 0.0)
        throw std::invalid_argument("rrt_star: max_iters >= 1, eta > 0 and step > 0 required");
    const RobotModel& robot = problem.robot;
    const Workspace& ws = problem.ws;
    const double w = opts.angle_weight;

    RrtResult res{std::nullopt, Tree(problem.c_init, w), {}};
    Tree& tree = res.tree;
    RrtStats& stats = res.stats;
    stats.nodes = 1;
    if (collides(robot, problem.c_init, ws))
        return res;

    const double gamma = rrt_gamma(robot, ws);
    const double inv_d = 1.0 / static_cast<double>(robot.dof());
    NearestIndex index(tree);
    std::vector<std::size_t> goal_nodes;
    std::vector<std::size_t> near;
    std::vector<std::pair<double, std::size_t>> ranked;
    std::size_t best_node = kNoParent;
    double best = std::numeric_limits<double>::infinity();

    auto draw = [&]() -> Config {
        if (opts.informed && best_node != kNoParent)
        {
            for (int k = 0; k < kInformedTries; ++k)
            {
                Config c = informed_sample(problem.c_init, problem.c_goal, best, rng);
                if (in_bounds(robot, ws, c))
                    return c;
            }
        }
        return sampler.next(rng);
    };

    for (int it = 1; it <= opts.max_iters; ++it)
    {
        stats.iters = it;
        const Config x_rand = draw();
        const std::size_t nearest = index.nearest(x_rand);
        const Config& x_near = tree.node(nearest);
        const double d_rand = distance(x_near, x_rand, w);
        if (d_rand == 0.0)
            continue;
        const Config x_new = d_rand > opts.eta ? interpolate(x_near, x_rand, opts.eta / d_rand) : x_rand;
        if (collides(robot, x_new, ws) || !steer_to(robot, x_near, x_new, ws, opts.step))
            continue;

        const double n = static_cast<double>(tree.size() + 1);
        const double radius = std::min(gamma * std::pow(std::log(n) / n, inv_d), opts.eta);
        index.within(x_new, radius, near);

        std::size_t parent = nearest;
        double parent_cost = tree.cost(nearest) + distance(x_near, x_new, w);
        ranked.clear();
        for (std::size_t i : near)
            if (i != nearest)
                ranked.emplace_back(tree.cost(i) + distance(tree.node(i), x_new, w), i);
        std::sort(ranked.begin(), ranked.end());
        for (const auto& [c, i] : ranked)
        {
            if (c > parent_cost || (c == parent_cost && i > parent))
                break;
            if (steer_to(robot, tree.node(i), x_new, ws, opts.step))
            {
                parent = i;
                parent_cost = c;
                break;
            }
        }

        const std::size_t added = tree.add(x_new, parent);
        rewire(tree, added, near, robot, ws, opts.step);
        if (robot.in_goal_region(x_new, problem.c_goal) && steer_to(robot, x_new, problem.c_goal, ws, opts.step))
            goal_nodes.push_back(added);

        for (std::size_t g : goal_nodes)
        {
            const double c = tree.cost(g) + distance(tree.node(g), problem.c_goal, w);
            if (c < best)
            {
                best = c;
                best_node = g;
            }
        }
        if (best_node != kNoParent && (stats.cost_history.empty() || best < stats.cost_history.back().second))
        {
            if (stats.first_solution_iter < 0)
                stats.first_solution_iter = it;
            stats.cost_history.emplace_back(it, best);
        }
        if (best_node != kNoParent && (opts.stop_on_first || (opts.target_cost > 0.0 && best <= opts.target_cost)))
            break;
    }

    stats.nodes = tree.size();
    if (best_node != kNoParent)
    {
        Path p = tree.path_to(best_node);
        if (!(p.end_state() == problem.c_goal))
            p.states.push_back(problem.c_goal);
        stats.cost = path_cost(p, w);
        res.path = std::move(p);
    }
    return res;
}

RrtResult informed_rrt_star(const PlanningProblem& problem, const RrtOptions& opts, Rng& rng)
{
    UniformSampler sampler(problem);
    RrtOptions o = opts;
    o.informed = true;
    return rrt_star(problem, sampler, o, rng);
}

} // namespace neuroplan
