#pragma once

#include "neuroplan/data/dataset.hpp"
#include "neuroplan/planner/mpnet.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace neuroplan {

enum class PlannerKind
{
    MPNetNP,         ///< MPNetPath, neural replanning only
    MPNetHP,         ///< MPNetPath with the oracle fallback
    RrtStar,
    InformedRrtStar,
    MPNetSMP,        ///< RRT* driven by the neural sampler
    MPNetSMPBi,      ///< RRT* driven by the bidirectional neural sampler
};

[[nodiscard]] const char* to_string(PlannerKind k) noexcept;
[[nodiscard]] PlannerKind planner_kind_from_string(const std::string& s);
[[nodiscard]] bool needs_model(PlannerKind k) noexcept;

struct PlannerSpec
{
    PlannerKind kind = PlannerKind::MPNetHP;
    PlanConfig plan;
    int max_iters = 10000; ///< iteration cap for the RRT* family
    double eta = 5.0;
    /// RRT* family: stop once the cost is within this factor of the problem's
    /// reference cost (when one is supplied); 1.05 reproduces the 5% rule.
    double match_factor = 1.05;
};

struct PlanOutcome
{
    std::optional<Path> path;
    PlanStats stats;
};

/// Runs one planner on one problem. `target_cost` (> 0) stops the RRT*
/// family early once reached.
[[nodiscard]] PlanOutcome run_planner(const PlannerSpec& spec, const MPNetModel* model, const PlanningProblem& problem,
                                      Rng& rng, double target_cost = 0.0);

struct Metrics
{
    std::string planner;
    std::string env;
    std::string split;
    int attempts = 0;
    int successes = 0;
    double t_mean = 0.0;
    double t_std = 0.0;
    std::optional<double> c_mean; ///< over successful runs only
    std::optional<double> c_std;
    std::vector<nlohmann::json> records; ///< planner result records in (problem, trial) order

    [[nodiscard]] double success_rate() const { return attempts ? static_cast<double>(successes) / attempts : 0.0; }
};

/// Milliseconds from an arbitrary origin. Must be safe to call concurrently.
using Clock = std::function<double()>;
[[nodiscard]] Clock steady_clock_ms();

struct BenchOptions
{
    int trials = 1;
    std::uint64_t seed = 0;
    std::size_t threads = 0;     ///< 0 = thread_count()
    std::size_t max_problems = 0; ///< 0 = all demos of the dataset
    /// Per-problem reference costs for the RRT* family's matched stopping rule.
    std::vector<std::optional<double>> reference_costs;
    Clock clock;                 ///< defaults to steady_clock_ms()
};

/// Runs `spec` over the dataset's demo problems. Trial k of problem i uses
/// the rng seeded with derive_seed(seed, i * trials + k). Throws
/// std::invalid_argument when the planner needs a model and none is given.
[[nodiscard]] Metrics run_bench(const Dataset& ds, const PlannerSpec& spec, const MPNetModel* model,
                                const BenchOptions& opts);

/// Aggregates records (as produced by result_record) into a Metrics row.
[[nodiscard]] Metrics aggregate(std::string planner, std::string env, std::string split,
                                std::vector<nlohmann::json> records);

/// First-trial cost per problem, nullopt where the run failed.
[[nodiscard]] std::vector<std::optional<double>> costs_by_problem(const Metrics& m, std::size_t problems);

enum class ReportFormat
{
    Csv,
    Json,
};

/// Columns: planner, env, split, success, t_mean, t_std, c_mean, c_std, n.
[[nodiscard]] std::string report_csv(const std::vector<Metrics>& rows);
/// {"rows": [{planner, env, split, success, t_mean, t_std, c_mean, c_std, n}, ...]}
[[nodiscard]] nlohmann::json report_json(const std::vector<Metrics>& rows);
/// Aggregates only; records are not part of the report.
[[nodiscard]] std::vector<Metrics> metrics_from_json(const nlohmann::json& j);

/// Writes report.csv or report.json into `dir`, plus records.jsonl with every
/// per-problem record. Returns the report path.
std::filesystem::path emit_report(const std::filesystem::path& dir, const std::vector<Metrics>& rows,
                                  ReportFormat format);

} // namespace neuroplan
