#include "neuroplan/cspace/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace neuroplan {

double wrap_angle(double a) noexcept
{
    if (a > -kPi && a <= kPi)
        return a;
    double r = std::fmod(a + kPi, 2.0 * kPi);
    if (r <= 0.0)
        r += 2.0 * kPi;
    return r - kPi;
}

Config::Config(std::size_t dim)
{
    if (dim > kMaxDim)
        throw std::invalid_argument("Config: dimension exceeds kMaxDim");
    dim_ = static_cast<std::uint32_t>(dim);
}

Config::Config(std::initializer_list<double> coords) : Config(std::span<const double>(coords.begin(), coords.size()))
{
}

Config::Config(std::span<const double> coords, std::uint32_t wrap_mask) : Config(coords.size())
{
    std::copy(coords.begin(), coords.end(), v_.begin());
    wrap_mask_ = wrap_mask & ((1U << dim_) - 1U);
    for (std::size_t i = 0; i < dim_; ++i)
        if (is_angular(i))
            v_[i] = wrap_angle(v_[i]);
}

void Config::set_angular(std::size_t i)
{
    if (i >= dim_)
        throw std::out_of_range("Config::set_angular: index out of range");
    wrap_mask_ |= (1U << i);
    v_[i] = wrap_angle(v_[i]);
}

bool Config::finite() const noexcept
{
    return std::all_of(v_.begin(), v_.begin() + dim_, [](double x) { return std::isfinite(x); });
}

bool operator==(const Config& a, const Config& b) noexcept
{
    return a.dim_ == b.dim_ && a.wrap_mask_ == b.wrap_mask_ &&
           std::equal(a.v_.begin(), a.v_.begin() + a.dim_, b.v_.begin());
}

Box Box::from_center(std::span<const double> center, std::span<const double> half_extents)
{
    if (center.size() != half_extents.size() || center.size() < 2 || center.size() > 3)
        throw std::invalid_argument("Box: center/half_extents must both have 2 or 3 entries");
    Box b;
    b.dim = center.size();
    for (std::size_t i = 0; i < b.dim; ++i)
    {
        if (!(half_extents[i] > 0.0))
            throw std::invalid_argument("Box: half extents must be positive");
        b.lo[i] = center[i] - half_extents[i];
        b.hi[i] = center[i] + half_extents[i];
    }
    return b;
}

bool Box::intersects(const Box& other) const noexcept
{
    for (std::size_t i = 0; i < dim; ++i)
        if (hi[i] < other.lo[i] || other.hi[i] < lo[i])
            return false;
    return true;
}

double Box::overlap_volume(const Box& other) const noexcept
{
    double v = 1.0;
    for (std::size_t i = 0; i < dim; ++i)
    {
        const double w = std::min(hi[i], other.hi[i]) - std::max(lo[i], other.lo[i]);
        if (w <= 0.0)
            return 0.0;
        v *= w;
    }
    return v;
}

double Box::volume() const noexcept
{
    double v = 1.0;
    for (std::size_t i = 0; i < dim; ++i)
        v *= hi[i] - lo[i];
    return v;
}

Workspace::Workspace(Box bounds, std::vector<Box> obstacles) : bounds_(bounds), obstacles_(std::move(obstacles))
{
    if (bounds_.dim < 2 || bounds_.dim > 3)
        throw std::invalid_argument("Workspace: bounds must be 2D or 3D");
    for (std::size_t i = 0; i < bounds_.dim; ++i)
        if (!(bounds_.lo[i] < bounds_.hi[i]))
            throw std::invalid_argument("Workspace: bounds require lo < hi on every axis");
    for (const auto& o : obstacles_)
    {
        if (o.dim != bounds_.dim)
            throw std::invalid_argument("Workspace: obstacle dimension differs from bounds");
        for (std::size_t i = 0; i < o.dim; ++i)
        {
            if (!(o.lo[i] < o.hi[i]))
                throw std::invalid_argument("Workspace: obstacle requires lo < hi on every axis");
            if (o.lo[i] < bounds_.lo[i] || o.hi[i] > bounds_.hi[i])
                throw std::invalid_argument("Workspace: obstacle lies outside bounds");
        }
    }
}

double Workspace::free_volume() const noexcept
{
    double v = bounds_.volume();
    for (const auto& o : obstacles_)
        v -= o.volume();
    return v;
}

namespace {

double cross(Vec2 o, Vec2 a, Vec2 b)
{
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

void require_convex(const std::vector<Vec2>& body)
{
    if (body.size() < 3)
        throw std::invalid_argument("RobotModel: SE2 body needs at least 3 vertices");
    int sign = 0;
    const std::size_t n = body.size();
    for (std::size_t i = 0; i < n; ++i)
    {
        const double c = cross(body[i], body[(i + 1) % n], body[(i + 2) % n]);
        if (c == 0.0)
            continue;
        const int s = c > 0.0 ? 1 : -1;
        if (sign != 0 && s != sign)
            throw std::invalid_argument("RobotModel: SE2 body polygon is not convex");
        sign = s;
    }
    if (sign == 0)
        throw std::invalid_argument("RobotModel: SE2 body polygon is degenerate");
}

} // namespace

RobotModel::RobotModel(RobotKind kind, std::vector<Vec2> body, double goal_radius)
    : kind_(kind), body_(std::move(body)), goal_radius_(goal_radius)
{
    if (!(goal_radius_ > 0.0))
        throw std::invalid_argument("RobotModel: goal_radius must be positive");
    if (kind_ == RobotKind::RigidSE2)
        require_convex(body_);
}

RobotModel RobotModel::point2d(double goal_radius)
{
    return {RobotKind::Point2D, {}, goal_radius};
}

RobotModel RobotModel::point3d(double goal_radius)
{
    return {RobotKind::Point3D, {}, goal_radius};
}

RobotModel RobotModel::rigid_se2(std::vector<Vec2> body, double goal_radius)
{
    return {RobotKind::RigidSE2, std::move(body), goal_radius};
}

std::size_t RobotModel::dof() const noexcept
{
    return kind_ == RobotKind::Point2D ? 2 : 3;
}

std::size_t RobotModel::workspace_dim() const noexcept
{
    return kind_ == RobotKind::Point3D ? 3 : 2;
}

std::uint32_t RobotModel::wrap_mask() const noexcept
{
    return kind_ == RobotKind::RigidSE2 ? (1U << 2) : 0U;
}

Config RobotModel::make_config(std::span<const double> coords) const
{
    if (coords.size() != dof())
        throw std::invalid_argument("RobotModel::make_config: wrong number of coordinates");
    return Config(coords, wrap_mask());
}

Config RobotModel::make_config(std::initializer_list<double> coords) const
{
    return make_config(std::span<const double>(coords.begin(), coords.size()));
}

bool RobotModel::in_goal_region(const Config& c, const Config& goal_center) const
{
    if (c.dim() != goal_center.dim())
        throw std::invalid_argument("in_goal_region: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < c.dim(); ++i)
    {
        double d = goal_center[i] - c[i];
        if (c.is_angular(i))
            d = wrap_angle(d);
        s += d * d;
    }
    return std::sqrt(s) <= goal_radius_;
}

const char* to_string(RobotKind kind) noexcept
{
    switch (kind)
    {
    case RobotKind::Point2D: return "point2d";
    case RobotKind::Point3D: return "point3d";
    case RobotKind::RigidSE2: return "rigid_se2";
    }
    return "unknown";
}

RobotKind robot_kind_from_string(const std::string& s)
{
    if (s == "point2d")
        return RobotKind::Point2D;
    if (s == "point3d")
        return RobotKind::Point3D;
    if (s == "rigid_se2")
        return RobotKind::RigidSE2;
    throw std::invalid_argument("unknown robot kind: " + s);
}

} // namespace neuroplan
