#pragma once

#include "neuroplan/cspace/types.hpp"
#include "neuroplan/rng.hpp"

namespace neuroplan {

/// Step sizes (workspace units) for the three steering resolutions.
struct SteerSteps
{
    double coarse = 0.8; ///< global-planning connect attempts
    double medium = 0.2; ///< replanning
    double fine = 0.05;  ///< final feasibility
};

/// (1 - delta) c1 + delta c2, with angular coordinates following the shortest arc.
/// Throws std::invalid_argument on dimension/topology mismatch or delta outside [0, 1].
[[nodiscard]] Config interpolate(const Config& c1, const Config& c2, double delta);

/// Per-coordinate difference b - a; angular coordinates wrapped into (-pi, pi].
void difference(const Config& a, const Config& b, std::span<double> out);

/// Euclidean distance with wrapped angular differences scaled by angle_weight.
[[nodiscard]] double distance(const Config& a, const Config& b, double angle_weight = 1.0);

[[nodiscard]] bool collides(const RobotModel& robot, const Config& c, const Workspace& ws);

/// Discretized straight-line check. The segment is subdivided into 2^k equal
/// pieces, the smallest power of two whose spacing is <= step; both endpoints
/// are checked. Grids for different steps are nested, so a finer step never
/// accepts a segment a coarser step rejects, and the sample set is the same in
/// both directions.
[[nodiscard]] bool steer_to(const RobotModel& robot, const Config& c1, const Config& c2,
                            const Workspace& ws, double step);

/// True iff every consecutive pair passes steer_to (a single state must be free).
[[nodiscard]] bool path_feasible(const RobotModel& robot, const Path& sigma, const Workspace& ws,
                                 double step);

/// Sum of consecutive distances; angles weighted by angle_weight.
[[nodiscard]] double path_cost(const Path& sigma, double angle_weight = 1.0);

/// Uniform config over the C-space box spanned by the workspace bounds (angles over (-pi, pi]).
[[nodiscard]] Config sample_uniform(const RobotModel& robot, const Workspace& ws, Rng& rng);

/// Rejection-samples a collision-free config. Throws std::runtime_error("free space not found")
/// when max_tries draws all collide.
[[nodiscard]] Config sample_free(const RobotModel& robot, const Workspace& ws, Rng& rng,
                                 int max_tries = 10000);

/// Volume of the C-space box (angle range 2*pi for SE2).
[[nodiscard]] double cspace_volume(const RobotModel& robot, const Workspace& ws);

} // namespace neuroplan
