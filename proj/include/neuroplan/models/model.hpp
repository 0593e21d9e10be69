#pragma once

#include "neuroplan/cspace/types.hpp"
#include "neuroplan/nn/net.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace neuroplan {

/// Obstacle surface samples flattened as (p0.x, p0.y[, p0.z], p1.x, ...).
/// Point order is obstacle index, then face, then sample index.
struct PointCloud
{
    std::size_t dim = 2;
    std::vector<double> coords;

    [[nodiscard]] std::size_t num_points() const noexcept { return dim ? coords.size() / dim : 0; }

    friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

/// Samples n_points uniformly over obstacle faces: the count is split evenly
/// across obstacles (remainder to the lowest indices) and then across faces.
/// A workspace without obstacles yields n_points copies of the bounds center.
[[nodiscard]] PointCloud make_point_cloud(const Workspace& ws, std::size_t n_points, std::uint64_t seed);

/// Default cloud size for a workspace dimension (200 in 2D, 500 in 3D).
[[nodiscard]] std::size_t default_cloud_size(std::size_t workspace_dim) noexcept;

using LatentCode = nn::Vector;

/// Affine map of each C-space axis onto [-1, 1]. Translational axes use the
/// workspace bounds; angular axes divide by pi.
class Normalizer
{
  public:
    Normalizer() = default;
    Normalizer(const RobotModel& robot, const Box& bounds);

    [[nodiscard]] std::size_t dim() const noexcept { return lo_.size(); }
    [[nodiscard]] std::span<const double> lo() const noexcept { return lo_; }
    [[nodiscard]] std::span<const double> hi() const noexcept { return hi_; }

    void normalize(const Config& c, std::span<double> out) const;
    [[nodiscard]] Config denormalize(std::span<const double> x, std::uint32_t wrap_mask) const;
    /// Workspace-frame point scaling (first m axes) applied to clouds before encoding.
    [[nodiscard]] nn::Vector normalize_cloud(const PointCloud& pc) const;

    friend bool operator==(const Normalizer&, const Normalizer&) = default;

  private:
    std::vector<double> lo_;
    std::vector<double> hi_;
};

struct ModelOptions
{
    std::size_t cloud_points = 0; ///< 0 selects default_cloud_size
    std::size_t latent_dim = 28;
    std::vector<std::size_t> enet_hidden{256, 128};
    std::vector<std::size_t> pnet_hidden{512, 512, 256, 128};
    double pnet_dropout = 0.5;
    nn::Activation activation = nn::Activation::PRelu;
};

/// Encoder + planning network. The planning network reads
/// [Z, normalize(c_t), normalize(c_goal)] and predicts the next configuration:
/// normalized coordinates for point robots, (x, y, cos, sin) for SE2 bodies.
struct MPNetModel
{
    RobotModel robot = RobotModel::point2d();
    Normalizer normalizer;
    nn::NetSpec enet_spec;
    nn::NetParams enet;
    nn::NetSpec pnet_spec;
    nn::NetParams pnet;

    [[nodiscard]] std::size_t latent_dim() const { return enet_spec.output_size(); }
    [[nodiscard]] std::size_t cloud_points() const { return enet_spec.input_size() / robot.workspace_dim(); }
};

/// Freshly initialized model for a robot operating inside `bounds`.
[[nodiscard]] MPNetModel make_model(const RobotModel& robot, const Box& bounds, const ModelOptions& opts, Rng& rng);

/// Output width of the planning network for a robot.
[[nodiscard]] std::size_t pnet_output_size(const RobotModel& robot) noexcept;

/// Deterministic encoder pass. Throws std::invalid_argument on size mismatch.
[[nodiscard]] LatentCode encode(const MPNetModel& model, const PointCloud& pc);

/// Input column for the planning network.
void pnet_input(const MPNetModel& model, const LatentCode& z, const Config& c_t, const Config& c_goal,
                std::span<double> out);

/// Target column for the planning network.
void pnet_target(const MPNetModel& model, const Config& c_next, std::span<double> out);

/// Maps a planning-network output back to a configuration.
[[nodiscard]] Config decode_output(const MPNetModel& model, std::span<const double> out);

/// One stochastic (dropout-sampled) prediction of the next configuration.
[[nodiscard]] Config predict_next(const MPNetModel& model, const LatentCode& z, const Config& c_t,
                                  const Config& c_goal, Rng& rng);

/// Saves `dir/enet.ckpt`, `dir/pnet.ckpt` and `dir/model.json` (robot + normalizer).
void save_model(const std::filesystem::path& dir, const MPNetModel& model, std::uint64_t seed = 0);
[[nodiscard]] MPNetModel load_model(const std::filesystem::path& dir);

} // namespace neuroplan
