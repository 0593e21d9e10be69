#pragma once

#include "neuroplan/cspace/types.hpp"
#include "neuroplan/models/model.hpp"
#include "neuroplan/rng.hpp"
#include "neuroplan/smp/tree.hpp"

#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace neuroplan {

/// {robot, workspace, start, goal-region center, obstacle cloud}.
struct PlanningProblem
{
    RobotModel robot = RobotModel::point2d();
    Workspace ws;
    Config c_init;
    Config c_goal;
    PointCloud pc;
};

/// Source of tree-extension targets. Implementations may keep state.
class Sampler
{
  public:
    virtual ~Sampler() = default;
    virtual Config next(Rng& rng) = 0;
};

/// Uniform over the C-space box; returns the goal center with probability goal_bias.
class UniformSampler : public Sampler
{
  public:
    UniformSampler(const PlanningProblem& problem, double goal_bias = 0.05);
    Config next(Rng& rng) override;

  private:
    const PlanningProblem* problem_;
    double goal_bias_;
};

struct RrtOptions
{
    int max_iters = 10000;
    double eta = 5.0;          ///< maximum extension length
    double step = 0.05;        ///< steer_to resolution for every edge
    bool informed = false;     ///< switch to ellipsoidal sampling after the first solution
    bool stop_on_first = false;
    double target_cost = 0.0;  ///< stop once best cost <= target_cost (when > 0)
    double angle_weight = 1.0; ///< weight of angular coordinates in distances
};

struct RrtStats
{
    int iters = 0;
    std::size_t nodes = 0;
    double cost = std::numeric_limits<double>::infinity();
    int first_solution_iter = -1;
    /// (iteration, best cost) every time the best solution improves.
    std::vector<std::pair<int, double>> cost_history;
};

struct RrtResult
{
    std::optional<Path> path;
    Tree tree;
    RrtStats stats;
};

/// RRT*: sample, nearest, steer by at most eta, steer_to check, choose the
/// cheapest collision-free parent inside r_n = min(gamma (log n / n)^(1/d), eta),
/// insert, rewire. A node inside the goal region with a collision-free segment
/// to the goal center is a solution candidate; the returned path ends at the center.
[[nodiscard]] RrtResult rrt_star(const PlanningProblem& problem, Sampler& sampler, const RrtOptions& opts, Rng& rng);

/// rrt_star with a goal-biased uniform sampler and informed sampling after the first solution.
[[nodiscard]] RrtResult informed_rrt_star(const PlanningProblem& problem, const RrtOptions& opts, Rng& rng);

/// RRT* ball constant 2 (1 + 1/d)^(1/d) (mu_free / zeta_d)^(1/d).
[[nodiscard]] double rrt_gamma(const RobotModel& robot, const Workspace& ws);

/// Uniform sample in the prolate hyperspheroid with foci c_init, c_goal and
/// transverse diameter c_best. Throws std::invalid_argument when c_best < |c_goal - c_init|.
[[nodiscard]] Config informed_sample(const Config& c_init, const Config& c_goal, double c_best, Rng& rng);

} // namespace neuroplan
