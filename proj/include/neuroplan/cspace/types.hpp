#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace neuroplan {

inline constexpr std::size_t kMaxDim = 8;
inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into (-pi, pi].
[[nodiscard]] double wrap_angle(double a) noexcept;

/// A point in configuration space. Coordinates flagged in the wrap mask are
/// angles stored in (-pi, pi]; all others are Euclidean.
class Config
{
  public:
    Config() = default;
    explicit Config(std::size_t dim);
    Config(std::initializer_list<double> coords);
    explicit Config(std::span<const double> coords, std::uint32_t wrap_mask = 0);

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::uint32_t wrap_mask() const noexcept { return wrap_mask_; }
    [[nodiscard]] bool is_angular(std::size_t i) const noexcept { return (wrap_mask_ >> i) & 1U; }

    /// Marks coordinate i as an angle and re-normalizes it.
    void set_angular(std::size_t i);

    [[nodiscard]] double operator[](std::size_t i) const noexcept { return v_[i]; }
    double& operator[](std::size_t i) noexcept { return v_[i]; }

    [[nodiscard]] std::span<const double> coords() const noexcept { return {v_.data(), dim_}; }
    std::span<double> coords() noexcept { return {v_.data(), dim_}; }

    [[nodiscard]] bool finite() const noexcept;

    friend bool operator==(const Config& a, const Config& b) noexcept;

  private:
    std::array<double, kMaxDim> v_{};
    std::uint32_t dim_ = 0;
    std::uint32_t wrap_mask_ = 0;
};

/// Ordered waypoint list; front() is the start, back() is sigma_end.
struct Path
{
    std::vector<Config> states;

    [[nodiscard]] bool empty() const noexcept { return states.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return states.size(); }
    [[nodiscard]] const Config& front() const { return states.front(); }
    [[nodiscard]] const Config& end_state() const { return states.back(); }

    friend bool operator==(const Path&, const Path&) = default;
};

/// Closed axis-aligned box in R^m, m in {2, 3}.
struct Box
{
    std::size_t dim = 0;
    std::array<double, 3> lo{};
    std::array<double, 3> hi{};

    static Box from_center(std::span<const double> center, std::span<const double> half_extents);

    [[nodiscard]] bool contains(std::span<const double> p) const noexcept
    {
        for (std::size_t i = 0; i < dim; ++i)
            if (p[i] < lo[i] || p[i] > hi[i])
                return false;
        return true;
    }
    [[nodiscard]] bool intersects(const Box& other) const noexcept;
    /// Interior overlap volume (area in 2D).
    [[nodiscard]] double overlap_volume(const Box& other) const noexcept;
    [[nodiscard]] double volume() const noexcept;

    friend bool operator==(const Box&, const Box&) = default;
};

/// Obstacle geometry: a bounding box and obstacle boxes inside it.
class Workspace
{
  public:
    Workspace() = default;
    /// Throws std::invalid_argument if lo >= hi on some axis or an obstacle leaves the bounds.
    Workspace(Box bounds, std::vector<Box> obstacles);

    [[nodiscard]] std::size_t dim() const noexcept { return bounds_.dim; }
    [[nodiscard]] const Box& bounds() const noexcept { return bounds_; }
    [[nodiscard]] const std::vector<Box>& obstacles() const noexcept { return obstacles_; }

    /// Bounds volume minus obstacle volume (obstacles assumed disjoint).
    [[nodiscard]] double free_volume() const noexcept;

    friend bool operator==(const Workspace&, const Workspace&) = default;

  private:
    Box bounds_;
    std::vector<Box> obstacles_;
};

struct Vec2
{
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

enum class RobotKind
{
    Point2D,
    Point3D,
    RigidSE2,
};

/// Maps configurations to collision predicates. SE2 configs are (x, y, theta).
class RobotModel
{
  public:
    static RobotModel point2d(double goal_radius = 1.0);
    static RobotModel point3d(double goal_radius = 1.0);
    /// Body polygon in the body frame; must be convex with at least 3 vertices.
    static RobotModel rigid_se2(std::vector<Vec2> body, double goal_radius = 1.0);

    [[nodiscard]] RobotKind kind() const noexcept { return kind_; }
    /// C-space dimensionality d.
    [[nodiscard]] std::size_t dof() const noexcept;
    /// Workspace dimensionality m.
    [[nodiscard]] std::size_t workspace_dim() const noexcept;
    [[nodiscard]] const std::vector<Vec2>& body() const noexcept { return body_; }
    [[nodiscard]] double goal_radius() const noexcept { return goal_radius_; }
    [[nodiscard]] std::uint32_t wrap_mask() const noexcept;

    /// Builds a config with this robot's topology (angles normalized).
    [[nodiscard]] Config make_config(std::span<const double> coords) const;
    [[nodiscard]] Config make_config(std::initializer_list<double> coords) const;

    [[nodiscard]] bool in_goal_region(const Config& c, const Config& goal_center) const;

    friend bool operator==(const RobotModel&, const RobotModel&) = default;

  private:
    RobotModel(RobotKind kind, std::vector<Vec2> body, double goal_radius);

    RobotKind kind_ = RobotKind::Point2D;
    std::vector<Vec2> body_;
    double goal_radius_ = 1.0;
};

[[nodiscard]] const char* to_string(RobotKind kind) noexcept;
[[nodiscard]] RobotKind robot_kind_from_string(const std::string& s);

} // namespace neuroplan
