#pragma once

#include "neuroplan/models/training.hpp"
#include "neuroplan/smp/rrt.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace neuroplan {

enum class EnvKind
{
    Simple2D,  ///< 7 boxes, point robot
    Complex2D, ///< 10 boxes, point robot
    Complex3D, ///< 10 cubes, point robot
    RigidSE2,  ///< 10 boxes, rectangular body
};

[[nodiscard]] const char* to_string(EnvKind e) noexcept;
[[nodiscard]] EnvKind env_kind_from_string(const std::string& s);

[[nodiscard]] RobotModel robot_for(EnvKind env);
[[nodiscard]] std::size_t obstacle_count(EnvKind env) noexcept;

/// Workspace [-20, 20]^m with side-5 boxes at uniform centers, at least
/// 1.0 apart from each other. Throws std::runtime_error when placement fails.
[[nodiscard]] Workspace gen_workspace(EnvKind env, std::uint64_t seed);
/// Workspace i uses seed derive_seed(seed, i).
[[nodiscard]] std::vector<Workspace> gen_workspaces(EnvKind env, std::size_t count, std::uint64_t seed);

/// Free start and goal at least `min_separation` apart.
[[nodiscard]] PlanningProblem sample_problem(const RobotModel& robot, const Workspace& ws, const PointCloud& pc,
                                             Rng& rng, double min_separation = 10.0);

/// RRT* for `expert_budget` iterations, then contraction at the fine step.
[[nodiscard]] std::optional<Path> gen_demo(const PlanningProblem& problem, int expert_budget, Rng& rng,
                                           double step = 0.05);

enum class Split
{
    Train,
    Seen,   ///< new problems in training workspaces
    Unseen, ///< workspaces never used for training
};

[[nodiscard]] const char* to_string(Split s) noexcept;
[[nodiscard]] Split split_from_string(const std::string& s);

struct Dataset
{
    EnvKind env = EnvKind::Simple2D;
    Split split = Split::Train;
    std::uint64_t seed = 0;
    RobotModel robot = RobotModel::point2d();
    std::vector<std::uint64_t> workspace_seeds;
    std::vector<Workspace> workspaces;
    std::vector<PointCloud> clouds;
    std::vector<Demo> demos;

    [[nodiscard]] std::size_t cloud_points() const { return clouds.empty() ? 0 : clouds.front().num_points(); }
    [[nodiscard]] PlanningProblem problem(std::size_t demo) const;
    /// Total one-step pairs over all demos.
    [[nodiscard]] std::vector<TrainingSample> training_samples() const;
};

struct DatasetOptions
{
    EnvKind env = EnvKind::Simple2D;
    Split split = Split::Train;
    std::size_t workspaces = 40;
    std::size_t per_workspace = 100;
    std::uint64_t seed = 0;
    int expert_budget = 10000;
    std::size_t cloud_points = 0; ///< 0 selects default_cloud_size
    double min_separation = 10.0;
    std::size_t threads = 0;      ///< 0 = thread_count()
};

/// Workspace index i of the train and seen splits is gen_workspace(env,
/// derive_seed(seed, i)); unseen workspaces draw from a disjoint index range.
/// Problems are drawn from a per-(split, workspace) stream, so train and seen
/// problems differ. Unsolved problems are resampled.
[[nodiscard]] Dataset generate_dataset(const DatasetOptions& opts);

/// Index of the first unseen workspace in the seed stream.
inline constexpr std::uint64_t kUnseenWorkspaceOffset = 1'000'000;

class DatasetError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kDatasetVersion = 1;

/// Directory layout: manifest.json, workspaces.json and raw little-endian
/// blocks (boxes.f64, clouds.f64, paths.f64, demos.u64), each block listed in
/// the manifest with its byte size and CRC32.
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);
/// Throws DatasetError on version, checksum or shape problems.
[[nodiscard]] Dataset load_dataset(const std::filesystem::path& dir);

} // namespace neuroplan
