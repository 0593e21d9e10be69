#include "neuroplan/planner/mpnet.hpp"

#include "neuroplan/cspace/json.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace neuroplan {

void PlanConfig::validate() const
{
    if (N < 1 || N_r < 1 || N_smp < 0 || oracle_iters < 1 || !(oracle_eta > 0.0))
        throw std::invalid_argument("PlanConfig: budgets must be positive");
    if (!(steps.coarse > 0.0 && steps.medium > 0.0 && steps.fine > 0.0))
        throw std::invalid_argument("PlanConfig: step sizes must be positive");
}

std::optional<Path> bnp(const MPNetModel& model, const Config& c_init, const Config& c_goal, const LatentCode& z,
                        const PlanningProblem& problem, const PlanConfig& cfg, double connect_step, Rng& rng,
                        PlanStats* stats)
{
    const RobotModel& robot = problem.robot;
    if (steer_to(robot, c_init, c_goal, problem.ws, connect_step))
        return Path{{c_init, c_goal}};

    std::vector<Config> from_start{c_init};
    std::vector<Config> from_goal{c_goal};
    bool start_side = true;
    for (int i = 0; i < cfg.N; ++i)
    {
        auto& grow = start_side ? from_start : from_goal;
        const auto& other = start_side ? from_goal : from_start;
        const Config c_new = predict_next(model, z, grow.back(), other.back(), rng);
        if (stats)
            ++stats->pnet_calls;
        if (c_new.finite() && !collides(robot, c_new, problem.ws))
        {
            grow.push_back(c_new);
            if (steer_to(robot, grow.back(), other.back(), problem.ws, connect_step))
            {
                Path p{std::move(from_start)};
                p.states.insert(p.states.end(), from_goal.rbegin(), from_goal.rend());
                return p;
            }
        }
        start_side = !start_side;
    }
    return std::nullopt;
}

Path lsc(const Path& sigma, const RobotModel& robot, const Workspace& ws, double step)
{
    if (sigma.empty())
        throw std::invalid_argument("lsc: empty path");
    Path out;
    out.states.push_back(sigma.front());
    std::size_t i = 0;
    const std::size_t last = sigma.size() - 1;
    while (i < last)
    {
        std::size_t next = i + 1;
        for (std::size_t j = last; j > i + 1; --j)
        {
            if (steer_to(robot, sigma.states[i], sigma.states[j], ws, step))
            {
                next = j;
                break;
            }
        }
        out.states.push_back(sigma.states[next]);
        i = next;
    }
    return out;
}

std::optional<Path> replan(const Path& sigma, const MPNetModel& model, const LatentCode& z,
                           const PlanningProblem& problem, const PlanConfig& cfg, bool plan_oracle, double detect_step,
                           Rng& rng, PlanStats* stats)
{
    if (sigma.empty())
        return std::nullopt;
    const RobotModel& robot = problem.robot;
    Path out{{sigma.front()}};
    for (std::size_t i = 0; i + 1 < sigma.size(); ++i)
    {
        const Config& a = sigma.states[i];
        const Config& b = sigma.states[i + 1];
        if (steer_to(robot, a, b, problem.ws, detect_step))
        {
            out.states.push_back(b);
            continue;
        }
        std::optional<Path> sub;
        if (plan_oracle)
        {
            if (stats)
                stats->oracle_called = true;
            PlanningProblem local = problem;
            local.c_init = a;
            local.c_goal = b;
            UniformSampler sampler(local);
            RrtOptions opts;
            opts.max_iters = cfg.oracle_iters;
            opts.eta = cfg.oracle_eta;
            opts.step = cfg.steps.fine;
            opts.stop_on_first = true;
            sub = rrt_star(local, sampler, opts, rng).path;
        }
        else
        {
            sub = bnp(model, a, b, z, problem, cfg, cfg.steps.medium, rng, stats);
        }
        if (!sub)
            return std::nullopt;
        out.states.insert(out.states.end(), sub->states.begin() + 1, sub->states.end());
    }
    return out;
}

namespace {

bool has_beacons(const Path& sigma, const RobotModel& robot, const Workspace& ws, double step)
{
    for (std::size_t i = 0; i + 1 < sigma.size(); ++i)
        if (!steer_to(robot, sigma.states[i], sigma.states[i + 1], ws, step))
            return true;
    return false;
}

} // namespace

PlanResult mpnet_path(const MPNetModel& model, const PlanningProblem& problem, const PlanConfig& cfg, Rng& rng)
{
    cfg.validate();
    PlanResult res;
    PlanStats& st = res.stats;
    const RobotModel& robot = problem.robot;
    const Workspace& ws = problem.ws;
    const double fine = cfg.steps.fine;
    if (collides(robot, problem.c_init, ws) || collides(robot, problem.c_goal, ws))
        return res;

    const LatentCode z = encode(model, problem.pc);
    auto sigma = bnp(model, problem.c_init, problem.c_goal, z, problem, cfg, cfg.steps.coarse, rng, &st);
    st.bnp_connected = sigma.has_value();
    Path path = sigma ? lsc(*sigma, robot, ws, fine) : Path{{problem.c_init, problem.c_goal}};
    if (sigma && path_feasible(robot, path, ws, fine))
    {
        st.bnp_feasible = true;
        res.path = std::move(path);
        return res;
    }

    for (int r = 0; r < cfg.N_r; ++r)
    {
        ++st.replanning_rounds;
        const double detect = has_beacons(path, robot, ws, cfg.steps.medium) ? cfg.steps.medium : fine;
        auto repaired = replan(path, model, z, problem, cfg, false, detect, rng, &st);
        if (!repaired)
            continue;
        path = lsc(*repaired, robot, ws, fine);
        if (path_feasible(robot, path, ws, fine))
        {
            res.path = std::move(path);
            return res;
        }
    }

    if (cfg.plan_oracle)
    {
        auto repaired = replan(path, model, z, problem, cfg, true, fine, rng, &st);
        if (repaired)
        {
            path = lsc(*repaired, robot, ws, fine);
            if (path_feasible(robot, path, ws, fine))
                res.path = std::move(path);
        }
    }
    return res;
}

MPNetSampler::MPNetSampler(const MPNetModel& model, const PlanningProblem& problem, const PlanConfig& cfg,
                           double goal_bias)
    : model_(&model), problem_(&problem), z_(encode(model, problem.pc)), n_smp_(cfg.N_smp), c_rand_(problem.c_init),
      uniform_(problem, goal_bias)
{
}

Config MPNetSampler::next(Rng& rng)
{
    if (drawn_ >= n_smp_)
        return uniform_.next(rng);
    ++drawn_;
    const Config out = predict_next(*model_, z_, c_rand_, problem_->c_goal, rng);
    if (problem_->robot.in_goal_region(out, problem_->c_goal) || !out.finite())
    {
        c_rand_ = problem_->c_init;
        ++resets_;
    }
    else
    {
        c_rand_ = out;
    }
    return out.finite() ? out : problem_->c_init;
}

BidirectionalMPNetSampler::BidirectionalMPNetSampler(const MPNetModel& model, const PlanningProblem& problem,
                                                     const PlanConfig& cfg, double goal_bias)
    : model_(&model), problem_(&problem), z_(encode(model, problem.pc)), n_smp_(cfg.N_smp),
      c_start_(problem.c_init), c_goal_(problem.c_goal), uniform_(problem, goal_bias)
{
}

Config BidirectionalMPNetSampler::next(Rng& rng)
{
    if (drawn_ >= n_smp_)
    {
        last_origin_ = -1;
        return uniform_.next(rng);
    }
    last_origin_ = drawn_ % 2;
    ++drawn_;
    Config& moving = last_origin_ == 0 ? c_start_ : c_goal_;
    const Config& target = last_origin_ == 0 ? c_goal_ : c_start_;
    const Config out = predict_next(*model_, z_, moving, target, rng);
    if (!out.finite())
    {
        moving = last_origin_ == 0 ? problem_->c_init : problem_->c_goal;
        return moving;
    }
    moving = out;
    if (problem_->robot.in_goal_region(c_start_, c_goal_))
    {
        c_start_ = problem_->c_init;
        c_goal_ = problem_->c_goal;
        ++resets_;
    }
    return out;
}

nlohmann::json result_record(const std::string& problem_id, const std::string& planner, const std::optional<Path>& path,
                             const PlanStats& stats, double wall_ms, std::uint64_t seed)
{
    return {{"problem_id", problem_id},
            {"planner", planner},
            {"success", path.has_value()},
            {"cost", path ? nlohmann::json(path_cost(*path)) : nlohmann::json(nullptr)},
            {"states", path ? path_to_json(*path) : nlohmann::json::array()},
            {"pnet_calls", stats.pnet_calls},
            {"oracle_called", stats.oracle_called},
            {"wall_ms", wall_ms},
            {"seed", seed}};
}

} // namespace neuroplan
