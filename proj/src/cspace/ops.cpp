#include "neuroplan/cspace/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace neuroplan {

namespace {

[[noreturn]] void mismatch(const char* what)
{
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

inline void require_compatible(const Config& a, const Config& b, const char* what)
{
    if (a.dim() != b.dim() || a.wrap_mask() != b.wrap_mask()) [[unlikely]]
        mismatch(what);
}

// a + delta * (b - a) without the endpoint special cases.
Config lerp(const Config& a, const Config& b, double delta)
{
    Config out = a;
    for (std::size_t i = 0; i < a.dim(); ++i)
    {
        if (a.is_angular(i))
            out[i] = wrap_angle(a[i] + delta * wrap_angle(b[i] - a[i]));
        else
            out[i] = a[i] + delta * (b[i] - a[i]);
    }
    return out;
}

bool lex_less(const Config& a, const Config& b)
{
    const auto ca = a.coords();
    const auto cb = b.coords();
    return std::lexicographical_compare(ca.begin(), ca.end(), cb.begin(), cb.end());
}

struct Pose2
{
    double x, y, c, s;
    [[nodiscard]] Vec2 apply(Vec2 p) const { return {x + c * p.x - s * p.y, y + s * p.x + c * p.y}; }
};

// Separating-axis test between a convex polygon and a closed box. Touching counts as overlap.
bool polygon_overlaps_box(std::span<const Vec2> poly, const Box& box)
{
    double min_x = poly[0].x, max_x = poly[0].x, min_y = poly[0].y, max_y = poly[0].y;
    for (const auto& p : poly)
    {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    if (max_x < box.lo[0] || box.hi[0] < min_x || max_y < box.lo[1] || box.hi[1] < min_y)
        return false;

    const std::array<Vec2, 4> corners{{{box.lo[0], box.lo[1]},
                                       {box.hi[0], box.lo[1]},
                                       {box.hi[0], box.hi[1]},
                                       {box.lo[0], box.hi[1]}}};
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i)
    {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % n];
        const Vec2 axis{b.y - a.y, a.x - b.x};
        double pmin = axis.x * poly[0].x + axis.y * poly[0].y;
        double pmax = pmin;
        for (const auto& p : poly)
        {
            const double v = axis.x * p.x + axis.y * p.y;
            pmin = std::min(pmin, v);
            pmax = std::max(pmax, v);
        }
        double bmin = axis.x * corners[0].x + axis.y * corners[0].y;
        double bmax = bmin;
        for (const auto& q : corners)
        {
            const double v = axis.x * q.x + axis.y * q.y;
            bmin = std::min(bmin, v);
            bmax = std::max(bmax, v);
        }
        if (pmax < bmin || bmax < pmin)
            return false;
    }
    return true;
}

bool se2_collides(const RobotModel& robot, const Config& c, const Workspace& ws)
{
    const Pose2 pose{c[0], c[1], std::cos(c[2]), std::sin(c[2])};
    std::array<Vec2, 32> small{};
    std::vector<Vec2> large;
    std::span<Vec2> poly;
    const auto& body = robot.body();
    if (body.size() <= small.size())
        poly = std::span<Vec2>(small.data(), body.size());
    else
    {
        large.resize(body.size());
        poly = large;
    }
    const Box& bounds = ws.bounds();
    for (std::size_t i = 0; i < body.size(); ++i)
    {
        poly[i] = pose.apply(body[i]);
        if (poly[i].x < bounds.lo[0] || poly[i].x > bounds.hi[0] || poly[i].y < bounds.lo[1] ||
            poly[i].y > bounds.hi[1])
            return true;
    }
    return std::any_of(ws.obstacles().begin(), ws.obstacles().end(),
                       [&](const Box& b) { return polygon_overlaps_box(poly, b); });
}

} // namespace

Config interpolate(const Config& c1, const Config& c2, double delta)
{
    require_compatible(c1, c2, "interpolate");
    if (!(delta >= 0.0 && delta <= 1.0))
        throw std::invalid_argument("interpolate: delta must lie in [0, 1]");
    if (delta == 0.0)
        return c1;
    if (delta == 1.0)
        return c2;
    Config out = c1;
    for (std::size_t i = 0; i < c1.dim(); ++i)
    {
        if (c1.is_angular(i))
            out[i] = wrap_angle(c1[i] + delta * wrap_angle(c2[i] - c1[i]));
        else
            out[i] = (1.0 - delta) * c1[i] + delta * c2[i];
    }
    return out;
}

void difference(const Config& a, const Config& b, std::span<double> out)
{
    require_compatible(a, b, "difference");
    for (std::size_t i = 0; i < a.dim(); ++i)
        out[i] = a.is_angular(i) ? wrap_angle(b[i] - a[i]) : b[i] - a[i];
}

double distance(const Config& a, const Config& b, double angle_weight)
{
    require_compatible(a, b, "distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i)
    {
        double d = b[i] - a[i];
        if (a.is_angular(i))
            d = angle_weight * wrap_angle(d);
        s += d * d;
    }
    return std::sqrt(s);
}

bool collides(const RobotModel& robot, const Config& c, const Workspace& ws)
{
    if (robot.kind() == RobotKind::RigidSE2)
        return se2_collides(robot, c, ws);
    const auto p = c.coords().first(ws.dim());
    if (!ws.bounds().contains(p))
        return true;
    return std::any_of(ws.obstacles().begin(), ws.obstacles().end(), [&](const Box& b) { return b.contains(p); });
}

bool steer_to(const RobotModel& robot, const Config& c1, const Config& c2, const Workspace& ws, double step)
{
    require_compatible(c1, c2, "steer_to");
    if (!(step > 0.0))
        throw std::invalid_argument("steer_to: step must be positive");
    const bool swap = lex_less(c2, c1);
    const Config& a = swap ? c2 : c1;
    const Config& b = swap ? c1 : c2;
    if (collides(robot, a, ws) || collides(robot, b, ws))
        return false;
    const double len = distance(a, b);
    std::uint64_t n = 1;
    while (len / static_cast<double>(n) > step && n < (1ULL << 40))
        n <<= 1;
    // Coarse-to-fine order so collisions are found early.
    for (std::uint64_t stride = n / 2; stride >= 1; stride /= 2)
    {
        for (std::uint64_t k = stride; k < n; k += 2 * stride)
        {
            const double delta = static_cast<double>(k) / static_cast<double>(n);
            if (collides(robot, lerp(a, b, delta), ws))
                return false;
        }
    }
    return true;
}

bool path_feasible(const RobotModel& robot, const Path& sigma, const Workspace& ws, double step)
{
    if (sigma.empty())
        return false;
    if (sigma.size() == 1)
        return !collides(robot, sigma.front(), ws);
    for (std::size_t i = 0; i + 1 < sigma.size(); ++i)
        if (!steer_to(robot, sigma.states[i], sigma.states[i + 1], ws, step))
            return false;
    return true;
}

double path_cost(const Path& sigma, double angle_weight)
{
    double c = 0.0;
    for (std::size_t i = 0; i + 1 < sigma.size(); ++i)
        c += distance(sigma.states[i], sigma.states[i + 1], angle_weight);
    return c;
}

Config sample_uniform(const RobotModel& robot, const Workspace& ws, Rng& rng)
{
    if (ws.dim() != robot.workspace_dim())
        throw std::invalid_argument("sample_uniform: robot/workspace dimension mismatch");
    std::array<double, kMaxDim> v{};
    const Box& b = ws.bounds();
    for (std::size_t i = 0; i < ws.dim(); ++i)
        v[i] = uniform(rng, b.lo[i], b.hi[i]);
    if (robot.kind() == RobotKind::RigidSE2)
        v[2] = uniform(rng, -kPi, kPi);
    return robot.make_config(std::span<const double>(v.data(), robot.dof()));
}

Config sample_free(const RobotModel& robot, const Workspace& ws, Rng& rng, int max_tries)
{
    for (int i = 0; i < max_tries; ++i)
    {
        Config c = sample_uniform(robot, ws, rng);
        if (!collides(robot, c, ws))
            return c;
    }
    throw std::runtime_error("free space not found");
}

double cspace_volume(const RobotModel& robot, const Workspace& ws)
{
    double v = ws.bounds().volume();
    if (robot.kind() == RobotKind::RigidSE2)
        v *= 2.0 * kPi;
    return v;
}

} // namespace neuroplan
