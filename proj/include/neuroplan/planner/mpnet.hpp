#pragma once

#include "neuroplan/cspace/ops.hpp"
#include "neuroplan/models/model.hpp"
#include "neuroplan/smp/rrt.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace neuroplan {

struct PlanConfig
{
    int N = 80;    ///< bidirectional planner iterations
    int N_r = 12;  ///< neural replanning rounds
    int N_smp = 300; ///< neural samples before the informed sampler turns uniform
    SteerSteps steps;
    bool plan_oracle = true;
    int oracle_iters = 10000;
    double oracle_eta = 5.0;

    /// Throws std::invalid_argument unless every budget is >= 1 (N_smp may be 0).
    void validate() const;
};

struct PlanStats
{
    int pnet_calls = 0;
    bool oracle_called = false;
    int replanning_rounds = 0;
    bool bnp_connected = false; ///< the first bidirectional pass joined start and goal
    bool bnp_feasible = false;  ///< ... and its contracted path was feasible without replanning
};

struct PlanResult
{
    std::optional<Path> path;
    PlanStats stats;
};

/// Bidirectional neural planner. Grows one path from each end with Pnet
/// predictions, alternating ends, and returns start -> goal as soon as the two
/// path ends connect with steer_to at `connect_step`. Colliding predictions
/// are dropped (the iteration still counts). A direct start-goal connection
/// is tried before the loop.
[[nodiscard]] std::optional<Path> bnp(const MPNetModel& model, const Config& c_init, const Config& c_goal,
                                      const LatentCode& z, const PlanningProblem& problem, const PlanConfig& cfg,
                                      double connect_step, Rng& rng, PlanStats* stats = nullptr);

/// Lazy states contraction: from each kept state jump to the farthest later
/// state reachable by steer_to. Endpoints are preserved.
[[nodiscard]] Path lsc(const Path& sigma, const RobotModel& robot, const Workspace& ws, double step);

/// Repairs every consecutive pair that fails steer_to at `detect_step` with a
/// sub-plan (neural bnp at the medium step, or the oracle RRT* when
/// plan_oracle). Returns nullopt if any gap stays open.
[[nodiscard]] std::optional<Path> replan(const Path& sigma, const MPNetModel& model, const LatentCode& z,
                                         const PlanningProblem& problem, const PlanConfig& cfg, bool plan_oracle,
                                         double detect_step, Rng& rng, PlanStats* stats = nullptr);

/// Full planner: bnp, contraction, up to N_r neural replanning rounds, then
/// (when cfg.plan_oracle) one hybrid round with the oracle.
[[nodiscard]] PlanResult mpnet_path(const MPNetModel& model, const PlanningProblem& problem, const PlanConfig& cfg,
                                    Rng& rng);

/// Neural informed sampler: the first N_smp draws follow a Pnet rollout from
/// the start toward the goal (restarting at the start after entering the goal
/// region); later draws come from the goal-biased uniform sampler.
class MPNetSampler : public Sampler
{
  public:
    MPNetSampler(const MPNetModel& model, const PlanningProblem& problem, const PlanConfig& cfg,
                 double goal_bias = 0.05);
    Config next(Rng& rng) override;

    [[nodiscard]] int resets() const noexcept { return resets_; }

  private:
    const MPNetModel* model_;
    const PlanningProblem* problem_;
    LatentCode z_;
    int n_smp_;
    int drawn_ = 0;
    int resets_ = 0;
    Config c_rand_;
    UniformSampler uniform_;
};

/// Two interleaved rollouts, one from each end, each steered toward the other
/// chain's current state; the chain that moves alternates on every draw. Both
/// restart at their origins when they come within the goal radius of each other.
class BidirectionalMPNetSampler : public Sampler
{
  public:
    BidirectionalMPNetSampler(const MPNetModel& model, const PlanningProblem& problem, const PlanConfig& cfg,
                              double goal_bias = 0.05);
    Config next(Rng& rng) override;

    /// 0 when the last neural draw extended the start chain, 1 for the goal chain, -1 for uniform draws.
    [[nodiscard]] int last_origin() const noexcept { return last_origin_; }
    [[nodiscard]] int resets() const noexcept { return resets_; }

  private:
    const MPNetModel* model_;
    const PlanningProblem* problem_;
    LatentCode z_;
    int n_smp_;
    int drawn_ = 0;
    int resets_ = 0;
    int last_origin_ = -1;
    Config c_start_;
    Config c_goal_;
    UniformSampler uniform_;
};

/// {problem_id, planner, success, cost, states, pnet_calls, oracle_called, wall_ms, seed}.
[[nodiscard]] nlohmann::json result_record(const std::string& problem_id, const std::string& planner,
                                           const std::optional<Path>& path, const PlanStats& stats, double wall_ms,
                                           std::uint64_t seed);

} // namespace neuroplan
