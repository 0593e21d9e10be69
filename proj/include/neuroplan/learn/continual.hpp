#pragma once

#include "neuroplan/models/training.hpp"
#include "neuroplan/planner/mpnet.hpp"

#include <json.hpp>

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace neuroplan {

enum class MemoryPolicy
{
    Reservoir,
    Surprise,    ///< keep the highest-loss samples
    Reward,      ///< keep the lowest-loss samples
    CoverageKnn, ///< keep samples that spread out in normalized (s, y) space
};

[[nodiscard]] const char* to_string(MemoryPolicy p) noexcept;
[[nodiscard]] MemoryPolicy memory_policy_from_string(const std::string& s);

/// Bounded episodic memory. scores[i] is the loss recorded when items[i]
/// was offered; features[i] its coverage embedding.
struct EpisodicMemory
{
    std::size_t capacity = 0;
    std::vector<TrainingSample> items;
    std::vector<double> scores;
    std::vector<nn::Vector> features;
    std::uint64_t seen_count = 0;

    explicit EpisodicMemory(std::size_t cap = 0) : capacity(cap) {}
    [[nodiscard]] std::size_t size() const noexcept { return items.size(); }
    [[nodiscard]] bool empty() const noexcept { return items.empty(); }
    [[nodiscard]] bool full() const noexcept { return items.size() >= capacity; }
};

/// Append-only rehearsal pool.
struct ReplayBuffer
{
    std::vector<TrainingSample> items;
    int period = 100;           ///< r
    std::size_t batch_size = 100; ///< N_B

    /// Throws std::invalid_argument unless period >= 1 and batch_size >= 1.
    void validate() const;
};

/// Classic reservoir sampling: the i-th offered sample is kept with
/// probability capacity / i, replacing a uniformly chosen resident.
void reservoir_update(EpisodicMemory& mem, const TrainingSample& sample, Rng& rng);

/// Offers a sample under `policy`. `loss` feeds surprise/reward; `features`
/// feeds coverage_knn (ignored otherwise).
void select_update(EpisodicMemory& mem, const TrainingSample& sample, double loss, MemoryPolicy policy, Rng& rng,
                   const nn::Vector& features = {});

/// [normalize(c_t), normalize(c_goal), normalize(y)].
[[nodiscard]] nn::Vector sample_features(const Normalizer& norm, const TrainingSample& s);

/// Mean path-loss gradient over the memory with dropout off. Throws std::invalid_argument on empty memory.
[[nodiscard]] nn::Vector memory_gradient(const MPNetModel& model, const EpisodicMemory& mem,
                                         std::span<const PointCloud> clouds, bool with_enet, double beta = 1.0);

/// Closest g' to g (Euclidean) with <g', g_M> >= 0. Returns g itself when the constraint already holds.
[[nodiscard]] nn::Vector gem_project(const nn::Vector& g, const nn::Vector& g_m);

enum class Optimizer
{
    Adam,
    Sgd,
};

struct ContinualOptions
{
    MemoryPolicy policy = MemoryPolicy::Reservoir;
    std::size_t memory_capacity = 10000;
    int replay_period = 100;
    std::size_t replay_batch = 100;
    int n_c = 50; ///< stream steps before the active loop starts consulting the model
    int steps_per_demo = 1;
    double lr = 1e-3;
    double beta = 1.0;
    bool with_enet = true;
    Optimizer optimizer = Optimizer::Adam;
};

/// Optimizer state shared by every update of a learning run.
struct Learner
{
    MPNetModel* model = nullptr;
    ContinualOptions opts;
    nn::AdamState adam;

    Learner(MPNetModel& m, const ContinualOptions& o);
    /// One update with a (projected) gradient on the trainable vector.
    void step(const nn::Vector& grad);
};

struct StepInfo
{
    double loss = 0.0;      ///< demo loss before the update (training-mode dropout)
    bool projected = false; ///< the memory constraint was active
    nn::Vector g;
    nn::Vector g_m;         ///< empty when memory was empty
    nn::Vector g_proj;
};

/// Continual update for one demo: g over the demo samples, g_M over the memory as
/// it was before this demo, projected step(s), then the samples go to the
/// buffer and are offered to the memory.
StepInfo continual_step(Learner& learner, std::span<const TrainingSample> demo_samples, EpisodicMemory& mem,
                        ReplayBuffer& buf, std::span<const PointCloud> clouds, Rng& rng);

/// Rehearsal on a uniform batch of N_B buffer samples when t % r == 0 and the
/// buffer holds more than N_B samples. Returns whether an update was made.
bool rehearse(Learner& learner, int t, const ReplayBuffer& buf, const EpisodicMemory& mem,
              std::span<const PointCloud> clouds, Rng& rng);

/// One problem of a learning stream; `cloud` indexes the caller's cloud table.
struct StreamItem
{
    PlanningProblem problem;
    std::size_t cloud = 0;
};

using Expert = std::function<std::optional<Path>(const PlanningProblem&, Rng&)>;

struct LogRecord
{
    int t = 0;
    bool expert_called = false;
    std::size_t demo_len = 0;
    std::optional<double> loss;
    std::size_t mem_size = 0;
    std::size_t buf_size = 0;
};

[[nodiscard]] nlohmann::json to_json(const LogRecord& r);
/// One JSON object per line.
void write_log(std::ostream& os, std::span<const LogRecord> log);

struct LoopResult
{
    int demo_count = 0;     ///< expert invocations
    int expert_failures = 0;
    int model_solved = 0;   ///< active loop: problems the model solved itself
    std::vector<LogRecord> log;
};

/// Plain continual learning: every stream problem is demonstrated by the expert.
LoopResult continual_loop(Learner& learner, std::span<const StreamItem> stream, std::span<const PointCloud> clouds,
                          const Expert& expert, EpisodicMemory& mem, ReplayBuffer& buf, Rng& rng);

/// Active continual learning: after the first N_c problems the model plans first (neural
/// replanning only) and the expert is consulted only on failure.
LoopResult active_continual_loop(Learner& learner, std::span<const StreamItem> stream,
                                 std::span<const PointCloud> clouds, const Expert& expert, const PlanConfig& plan_cfg,
                                 EpisodicMemory& mem, ReplayBuffer& buf, Rng& rng);

/// success_after - success_before. Throws std::invalid_argument outside [0, 1].
[[nodiscard]] double backward_transfer(double success_before, double success_after);

} // namespace neuroplan
